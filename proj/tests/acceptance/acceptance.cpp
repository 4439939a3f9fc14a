// Acceptance checks; prints one PASS/FAIL line per criterion.
//
//   dynrisk_acceptance [--cli path/to/dynrisk] [--work dir] [--only N]

#include <dynrisk/cox.hpp>
#include <dynrisk/encode.hpp>
#include <dynrisk/external_model.hpp>
#include <dynrisk/forest.hpp>
#include <dynrisk/loo.hpp>
#include <dynrisk/metrics.hpp>
#include <dynrisk/selection.hpp>
#include <dynrisk/seed.hpp>
#include <dynrisk/synth.hpp>
#include <dynrisk/time_filter.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace dynrisk;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double budget_s; // 0 = no runtime bound
    std::function<Verdict()> run;
};

std::string fmt(double v, int digits = 4) {
    std::ostringstream o;
    o.setf(std::ios::fixed);
    o.precision(digits);
    o << v;
    return o.str();
}

std::string fmt_sci(double v) {
    std::ostringstream o;
    o << v;
    return o.str();
}

// ---- 1

Verdict auc_oracle() {
    std::mt19937_64 rng{20200601};
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const int n = 2 + static_cast<int>(rng() % 199);
        const bool coarse = k % 2 == 0;
        std::vector<double> s;
        std::vector<std::uint8_t> y;
        std::normal_distribution<double> z;
        for (int i = 0; i < n; ++i) {
            y.push_back(static_cast<std::uint8_t>(rng() % 2));
            s.push_back(coarse ? static_cast<double>(rng() % 8) : z(rng));
        }
        y[0] = 0;
        y[1] = 1;
        worst = std::max(worst, std::abs(roc_curve(s, y).auc - auc_pair_oracle(s, y)));
    }
    return {worst <= 1e-12, "max |trapezoid - pair oracle| = " + fmt_sci(worst) + " over 1000 sets"};
}

// ---- 2

std::vector<SurvivalSample> random_survival(std::uint64_t seed, std::size_t n, std::size_t p) {
    std::mt19937_64 rng{seed};
    std::normal_distribution<double> z;
    std::uniform_int_distribution<int> day{1, 30};
    std::bernoulli_distribution ev{0.7};
    std::vector<SurvivalSample> out;
    for (std::size_t i = 0; i < n; ++i) {
        SurvivalSample s;
        for (std::size_t j = 0; j < p; ++j) {
            s.x.push_back(z(rng));
        }
        s.time_days = day(rng);
        s.event = ev(rng);
        out.push_back(std::move(s));
    }
    out[0].event = true;
    return out;
}

Verdict cox_exact() {
    const std::vector<SurvivalSample> fixture{{{1.0}, 1, true}, {{0.0}, 2, true}, {{1.0}, 3, true}};
    const auto model = fit_cox(fixture, {"x"});
    const double exact = -0.5 * std::log(2.0);
    const double beta_err = std::abs(model.beta[0] - exact);

    double worst = 0.0;
    std::mt19937_64 rng{7};
    std::uniform_real_distribution<double> u{-1.0, 1.0};
    for (std::uint64_t d = 0; d < 10; ++d) {
        const auto s = random_survival(100 + d, 20, 3);
        const auto ties = d % 2 ? Ties::breslow : Ties::efron;
        const std::vector<double> beta{u(rng), u(rng), u(rng)};
        const auto g = neg_log_partial_likelihood(beta, s, ties).gradient;
        for (std::size_t j = 0; j < 3; ++j) {
            auto up = beta, dn = beta;
            up[j] += 1e-5;
            dn[j] -= 1e-5;
            const double fd =
                (neg_log_partial_likelihood(up, s, ties).value - neg_log_partial_likelihood(dn, s, ties).value) / 2e-5;
            worst = std::max(worst, std::abs(g[j] - fd) / std::max(1.0, std::abs(fd)));
        }
    }
    std::ostringstream d;
    d << "beta=" << fmt(model.beta[0], 7) << " (|err| " << beta_err << ")"
      << ", FD max rel err " << worst;
    return {beta_err <= 1e-6 && worst < 1e-6, d.str()};
}

// ---- 3

Verdict cox_recovery() {
    int covered = 0;
    double mean_beta = 0.0, mean_rate = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        GeneratorConfig c;
        c.n_subjects = 5000;
        c.target_event_rate = 0.3;
        c.seed = 1000 + seed;
        c.feature_specs = {{"exposure", FeatureSpec::Kind::binary, 0.5, 0, 1}};
        c.planted_effects = {{"exposure", 0.7}};
        const auto cohort = generate_cohort(c);
        const auto enc = encode_cohort(cohort.subjects, cohort.catalog);
        const auto view = view_of(enc);
        std::vector<std::size_t> rows(enc.n_rows());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        const auto model = fit_cox(survival_samples(view, rows), enc.feature_names);
        const auto hr = hazard_ratios(model).front();
        covered += (hr.ci_low <= std::exp(0.7) && std::exp(0.7) <= hr.ci_high) ? 1 : 0;
        mean_beta += model.beta[0] / 100.0;
        mean_rate += static_cast<double>(enc.n_positive()) / static_cast<double>(enc.n_rows()) / 100.0;
    }
    return {covered >= 93, std::to_string(covered) + "/100 CIs cover 0.7; mean beta " + fmt(mean_beta) +
                               ", mean event rate " + fmt(mean_rate, 3)};
}

// ---- 4

Verdict rf_recovery() {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        GeneratorConfig c;
        c.n_subjects = 500;
        c.target_event_rate = 0.2;
        c.seed = 500 + seed;
        c.feature_specs = {{"informative", FeatureSpec::Kind::binary, 0.3, 0, 1}};
        c.planted_effects = {{"informative", 1.5}};
        c.noise_features = 10;
        const auto cohort = generate_cohort(c);
        const auto enc = encode_cohort(cohort.subjects, cohort.catalog);
        const auto view = view_of(enc);
        const auto rows = balance_classes(enc.labels, std::nullopt, derive_seed(seed, 0, salt::holdout));
        ForestParams p;
        p.n_trees = 200;
        p.seed = seed;
        const auto forest = train_forest(TrainingSet{view.x, view.labels, *rows}, enc.feature_names, p);
        const auto ranking = rank_features(enc.feature_names, forest.importances());
        hits += ranking.entries.front().feature_name == "informative" ? 1 : 0;
    }
    return {hits >= 19, std::to_string(hits) + "/20 seeds rank the informative feature first"};
}

// ---- 5 and 6

EncodedCohort strong_signal(std::uint64_t seed) {
    GeneratorConfig c;
    c.n_subjects = 600;
    c.target_event_rate = 0.2;
    c.seed = seed;
    c.feature_specs = {{"age", FeatureSpec::Kind::continuous, 0.5, 65.0, 10.0},
                       {"sex", FeatureSpec::Kind::binary, 0.5, 0, 1},
                       {"ckd", FeatureSpec::Kind::binary, 0.25, 0, 1},
                       {"copd", FeatureSpec::Kind::binary, 0.2, 0, 1}};
    c.planted_effects = {{"age", 0.08}, {"sex", 0.5}, {"ckd", 1.5}, {"copd", 1.0}};
    c.noise_features = 5;
    const auto cohort = generate_cohort(c);
    return encode_cohort(cohort.subjects, cohort.catalog);
}

struct LooRun {
    double loo_auc = 0.0;
    double holdout_auc = 0.0;
    LooResult result;
    std::size_t n = 0;
};

std::vector<LooRun> &loo_runs() {
    static std::vector<LooRun> runs;
    if (runs.empty()) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto enc = strong_signal(60 + seed);
            ForestParams p;
            p.n_trees = 100;
            RandomForestTrainer rf{p};
            LooOptions o;
            o.seed = seed;
            LooRun r;
            r.result = run_loo(enc, rf, o);
            r.loo_auc = roc_curve(r.result.scores(), r.result.labels()).auc;
            r.holdout_auc = run_holdout(enc, rf, seed).auc;
            r.n = enc.n_rows();
            runs.push_back(std::move(r));
        }
    }
    return runs;
}

Verdict loo_vs_holdout() {
    double loo = 0.0, hold = 0.0;
    std::string per;
    for (const auto &r : loo_runs()) {
        loo += r.loo_auc / 5.0;
        hold += r.holdout_auc / 5.0;
        per += " " + fmt(r.loo_auc, 3) + "/" + fmt(r.holdout_auc, 3);
    }
    return {std::abs(loo - hold) <= 0.05,
            "mean LOO AUC " + fmt(loo) + " vs holdout " + fmt(hold) + " (per seed loo/holdout:" + per + ")"};
}

Verdict balance_and_leak() {
    std::size_t leaks = 0, unbalanced = 0, iterations = 0, missing = 0;
    for (const auto &r : loo_runs()) {
        leaks += r.result.leak_count;
        iterations += r.result.iterations.size();
        missing += r.n - r.result.per_sample.size();
        for (const auto &it : r.result.iterations) {
            if (it.failure.empty() &&
                (it.train_positives != it.minority_count || it.train_negatives != it.minority_count)) {
                ++unbalanced;
            }
        }
    }
    return {leaks == 0 && unbalanced == 0 && missing == 0,
            std::to_string(iterations) + " iterations, " + std::to_string(leaks) + " leaks, " +
                std::to_string(unbalanced) + " unbalanced"};
}

// ---- 7

Verdict time_filter_table() {
    const FeatureCatalog cat{{{"pneumonia", Matcher::parse("code:J18"), FeatureClass::acute, {}, Encoding::binary_presence},
                              {"aki", Matcher::parse("code:N17"), FeatureClass::acute, {}, Encoding::binary_presence},
                              {"cancer", Matcher::parse("code:C"), FeatureClass::cancer, {}, Encoding::binary_presence},
                              {"heart_rate", Matcher::parse("vital:heart_rate"), FeatureClass::symptom_or_vital, {},
                               Encoding::continuous}}};
    struct Case {
        const char *label;
        const char *code; // empty = heart-rate vital
        const char *date;
        std::optional<std::size_t> expected;
    };
    const Case cases[] = {
        {"5 days prior excluded", "J18.9", "2020-05-27", std::nullopt},
        {"22 days prior -> <1 month", "N17.9", "2020-05-10", 0},
        {"13 months prior -> >12 months", "N17.9", "2019-05-01", 2},
        {"41-month cancer -> 12-60 months", "C50.1", "2017-01-05", 1},
        {"+9-day vital included", "", "2020-06-10", 0},
    };
    int ok = 0;
    std::string detail;
    for (const auto &c : cases) {
        SubjectRecord s;
        s.subject_id = "A";
        s.index_test_date = Date::parse("2020-06-01");
        s.outcome.censor_date = s.index_test_date + 90;
        if (*c.code) {
            s.events.push_back({c.code, Date::parse(c.date), EventSource::hospital});
        } else {
            s.vitals.push_back({VitalKind::heart_rate, 90.0, Date::parse(c.date)});
        }
        const auto items = apply_time_filter(s, cat);
        const bool pass = items.size() == 1 && items[0].window_index == c.expected;
        ok += pass ? 1 : 0;
        detail += std::string{pass ? "" : " FAILED:"} + (pass ? "" : c.label);
    }
    return {ok == 5, std::to_string(ok) + "/5 boundary cases" + detail};
}

// ---- 8

Verdict invariance_suite() {
    int rf_ok = 0, auc_ok = 0, shift_ok = 0, scale_ok = 0;
    const int cases = 200;
    for (int k = 0; k < cases; ++k) {
        std::mt19937_64 rng{static_cast<std::uint64_t>(k) + 9000};
        std::normal_distribution<double> z;
        const std::size_t n = 40, p = 3;
        std::vector<double> x, tx;
        std::vector<std::uint8_t> y;
        for (std::size_t i = 0; i < n; ++i) {
            double eta = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                x.push_back(z(rng));
                eta += x.back();
            }
            y.push_back(eta + z(rng) > 0 ? 1 : 0);
        }
        y[0] = 0;
        y[1] = 1;
        tx = x;
        for (std::size_t i = 0; i < n; ++i) {
            tx[i * p + k % p] = std::exp(tx[i * p + k % p]) + 2.0 * tx[i * p + k % p];
        }
        const std::vector<std::string> names{"a", "b", "c"};
        ForestParams fp;
        fp.n_trees = 5;
        fp.bootstrap = false;
        fp.mtry = 1 + k % 2;
        fp.seed = static_cast<std::uint64_t>(k);
        const auto fa = train_forest({{x, n, p}, y, {}}, names, fp);
        const auto fb = train_forest({{tx, n, p}, y, {}}, names, fp);
        bool same = true;
        for (std::size_t i = 0; i < n; ++i) {
            same = same && predict_likelihood(fa, std::span<const double>{x}.subspan(i * p, p)) ==
                               predict_likelihood(fb, std::span<const double>{tx}.subspan(i * p, p));
        }
        rf_ok += same ? 1 : 0;

        std::vector<double> scores, ts;
        for (std::size_t i = 0; i < n; ++i) {
            scores.push_back(x[i * p] + 0.5 * x[i * p + 1]);
            ts.push_back(std::atan(scores.back()) * 3.0 + std::pow(scores.back(), 3));
        }
        auc_ok += roc_curve(scores, y).auc == roc_curve(ts, y).auc ? 1 : 0;

        std::vector<SurvivalSample> surv;
        std::uniform_int_distribution<int> day{1, 25};
        for (std::size_t i = 0; i < n; ++i) {
            surv.push_back({{x[i * p], x[i * p + 1]}, day(rng), y[i] == 1 || i % 3 == 0});
        }
        const auto base = fit_cox(surv, {"a", "b"});
        auto shifted = surv;
        auto scaled = surv;
        const double cshift = 5.0 * z(rng);
        const double cscale = 0.25 + (k % 10) * 0.5;
        for (std::size_t i = 0; i < n; ++i) {
            shifted[i].x[k % 2] += cshift;
            scaled[i].x[0] *= cscale;
        }
        const auto ms = fit_cox(shifted, {"a", "b"});
        shift_ok += (std::abs(ms.beta[0] - base.beta[0]) < 1e-7 && std::abs(ms.beta[1] - base.beta[1]) < 1e-7) ? 1 : 0;
        const auto mc = fit_cox(scaled, {"a", "b"});
        std::vector<double> lp_base, lp_scaled;
        std::vector<std::uint8_t> ev;
        for (std::size_t i = 0; i < n; ++i) {
            lp_base.push_back(cox_risk_score(base, surv[i].x));
            lp_scaled.push_back(cox_risk_score(mc, scaled[i].x));
            ev.push_back(surv[i].event ? 1 : 0);
        }
        const bool scale_beta = std::abs(mc.beta[0] * cscale - base.beta[0]) < 1e-7 * std::max(1.0, std::abs(base.beta[0])) &&
                                std::abs(mc.beta[1] - base.beta[1]) < 1e-7;
        const bool same_auc = std::abs(roc_curve(lp_base, ev).auc - roc_curve(lp_scaled, ev).auc) < 1e-12;
        scale_ok += scale_beta && same_auc ? 1 : 0;
    }
    std::ostringstream d;
    d << "RF monotone " << rf_ok << "/" << cases << ", AUC monotone " << auc_ok << "/" << cases << ", Cox shift "
      << shift_ok << "/" << cases << ", Cox scale " << scale_ok << "/" << cases;
    return {rf_ok == cases && auc_ok == cases && shift_ok == cases && scale_ok == cases, d.str()};
}

// ---- 9

Verdict external_harness() {
    GeneratorConfig c;
    c.n_subjects = 3000;
    c.target_event_rate = 0.15;
    c.seed = 99;
    c.feature_specs = {{"age", FeatureSpec::Kind::continuous, 0.5, 65.0, 10.0},
                       {"sex", FeatureSpec::Kind::binary, 0.5, 0, 1},
                       {"ckd", FeatureSpec::Kind::binary, 0.2, 0, 1},
                       {"bmi", FeatureSpec::Kind::continuous, 0.5, 28.0, 4.0}};
    c.planted_effects = {{"age", 0.06}, {"sex", 0.4}, {"ckd", 1.1}, {"bmi", 0.03}};
    const auto cohort = generate_cohort(c);
    EncodeOptions zscored;
    zscored.normalization = Normalization::zscore;
    const auto enc = encode_cohort(cohort.subjects, cohort.catalog, zscored);

    std::vector<double> oracle;
    for (const auto &[id, eta] : cohort.ground_truth) {
        oracle.push_back(eta);
    }
    const double oracle_auc = roc_curve(oracle, enc.labels).auc;

    std::ostringstream text;
    text << "missing_policy drop_term\n";
    for (const auto &e : c.planted_effects) {
        text << "mapping " << e.feature_name << ' ' << e.feature_name << '\n';
    }
    text << "stratum all\n  transform linear_predictor\n";
    for (const auto &e : c.planted_effects) {
        text << "  term " << e.feature_name << ' ' << e.log_hazard_ratio << '\n';
    }
    text << "end\n";
    std::istringstream in{text.str()};
    const auto eq = load_equation(in);
    const double eq_auc = roc_curve(evaluate_external(eq, enc).scores, enc.labels).auc;

    auto zero = eq;
    for (auto &t : zero.strata[0].terms) {
        t.coefficient = 0.0;
    }
    const double zero_auc = roc_curve(evaluate_external(zero, enc).scores, enc.labels).auc;
    const double diff = std::abs(eq_auc - oracle_auc);
    std::ostringstream d;
    d << "equation AUC " << fmt(eq_auc, 6) << " vs oracle " << fmt(oracle_auc, 6) << " (|diff| " << diff
      << "), zero-coefficient AUC " << zero_auc;
    return {diff <= 1e-9 && zero_auc == 0.5, d.str()};
}

// ---- 10

std::string g_cli;
fs::path g_work;

int sh(const std::string &cmd) {
    return std::system((cmd + " >/dev/null 2>&1").c_str());
}

nlohmann::json outputs_of(const fs::path &dir) {
    std::ifstream in{dir / "manifest.json"};
    if (!in) {
        return nullptr;
    }
    return nlohmann::json::parse(in).at("outputs");
}

Verdict cli_determinism() {
    if (g_cli.empty()) {
        return {false, "no --cli binary given"};
    }
    const auto root = g_work / "cli";
    fs::remove_all(root);
    fs::create_directories(root);
    {
        std::ofstream cfg{root / "synth.json"};
        cfg << R"({"n_subjects": 160, "target_event_rate": 0.25, "noise_features": 4, "seed": 11,
 "feature_specs": [{"name":"age","kind":"continuous","mean":65,"sd":9},
                   {"name":"sex","kind":"binary","prevalence":0.5},
                   {"name":"ckd","kind":"binary","prevalence":0.25},
                   {"name":"bmi","kind":"continuous","mean":28,"sd":4}],
 "planted_effects": [{"feature_name":"age","log_hazard_ratio":0.07},
                     {"feature_name":"ckd","log_hazard_ratio":1.2}]})";
        std::ofstream review{root / "review.json"};
        review << R"({"reviewed_on":"2021-01-15","screen_top_k":6,
 "exclusions":[{"feature":"noise_1","reason":"database_bias"}],
 "groupings":[{"group":"renal","members":["ckd"]}]})";
        std::ofstream eq{root / "equation.txt"};
        eq << "missing_policy drop_term\nstratify_by sex\nmapping age age\nmapping ckd ckd\nmapping chemo MISSING\n"
              "stratum male 1\n  transform logistic\n  intercept -5\n  term age 0.06\n  term ckd 1.0\n"
              "  term chemo 0.4\nend\nstratum female 0\n  transform logistic\n  intercept -5.4\n"
              "  term age 0.06\n  term ckd 1.1\nend\n";
    }
    const std::string r = root.string();
    if (sh(g_cli + " synth --config " + r + "/synth.json --out " + r + "/synth") != 0) {
        return {false, "synth failed"};
    }
    const std::string subjects = " --subjects " + r + "/synth/subjects.jsonl --catalog " + r + "/synth/catalog.csv";
    const std::string cohort = " --cohort " + r + "/synth/cohort.csv";
    // command line without --out, per command
    const std::vector<std::pair<std::string, std::string>> commands{
        {"synth", "synth --config " + r + "/synth.json"},
        {"encode", "encode" + subjects + " --normalize zscore"},
        {"stats", "stats" + subjects},
        {"train-rf", "train-rf" + cohort + " --trees 30 --seed 5"},
        {"loo-rf", "loo-rf" + cohort + " --trees 15 --seed 5 --exclude-features bmi"},
        {"fit-cox", "fit-cox" + cohort + " --loo --seed 5 --exclude-features bmi"},
        {"select", "select --ranking " + r + "/synth/ground_truth_rank.csv --review " + r + "/review.json --catalog " +
                       r + "/synth/catalog.csv"},
        {"compare", "compare" + cohort + " --equation " + r + "/equation.txt"},
    };
    {
        // a fixed ranking for select
        std::ofstream rank{root / "synth" / "ground_truth_rank.csv"};
        rank << "rank,feature,mean_importance\n1,age,0.4\n2,ckd,0.3\n3,bmi,0.1\n4,noise_1,0.08\n5,sex,0.05\n"
                "6,noise_2,0.04\n7,noise_3,0.02\n";
    }
    std::vector<std::string> failures;
    int commands_ok = 0;
    for (const auto &[name, cmd] : commands) {
        const bool threaded = name != "synth" && name != "select" && name != "encode";
        nlohmann::json first;
        bool ok = true;
        for (int run = 0; run < 4 && ok; ++run) {
            const int threads = run < 2 ? 1 : 8;
            const auto out = root / (name + "_" + std::to_string(run));
            std::string line = g_cli + " " + cmd + " --out " + out.string();
            if (threaded) {
                line += " --threads " + std::to_string(threads);
            }
            if (sh(line) != 0) {
                failures.push_back(name + " exited nonzero");
                ok = false;
                break;
            }
            const auto outputs = outputs_of(out);
            if (outputs.is_null() || outputs.empty()) {
                failures.push_back(name + " wrote no manifest outputs");
                ok = false;
            } else if (run == 0) {
                first = outputs;
            } else if (outputs != first) {
                failures.push_back(name + " differs at run " + std::to_string(run));
                ok = false;
            }
        }
        commands_ok += ok ? 1 : 0;
    }
    // error paths must exit nonzero
    bool errors_ok = sh(g_cli + " loo-rf --cohort " + r + "/missing.csv --out " + r + "/err1") != 0 &&
                     sh(g_cli + " loo-rf" + cohort + " --exclude-features no_such --out " + r + "/err2") != 0;
    {
        std::ofstream bad{root / "bad.json"};
        bad << R"({"n_subjects": 10, "target_event_rate": 1.5, "feature_specs":[{"name":"x"}],
                 "planted_effects":[{"feature_name":"x","log_hazard_ratio":1}]})";
    }
    errors_ok = errors_ok && sh(g_cli + " synth --config " + r + "/bad.json --out " + r + "/err3") != 0;
    std::string detail = std::to_string(commands_ok) + "/" + std::to_string(commands.size()) +
                         " commands byte-identical across reruns at --threads 1 and 8";
    for (const auto &f : failures) {
        detail += "; " + f;
    }
    if (!errors_ok) {
        detail += "; an error path exited 0";
    }
    return {commands_ok == static_cast<int>(commands.size()) && errors_ok, detail};
}

} // namespace

int main(int argc, char **argv) {
    int only = 0;
    g_work = fs::temp_directory_path() / "dynrisk_acceptance";
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string key = argv[i];
        if (key == "--cli") {
            g_cli = argv[i + 1];
        } else if (key == "--work") {
            g_work = argv[i + 1];
        } else if (key == "--only") {
            only = std::atoi(argv[i + 1]);
        } else {
            std::cerr << "unknown argument " << key << '\n';
            return 2;
        }
    }
    fs::create_directories(g_work);

    const std::vector<Criterion> criteria{
        {1, "metric oracle equivalence", 10, auc_oracle},
        {2, "Cox exact fixture and gradient", 0, cox_exact},
        {3, "Cox recovery of planted beta", 120, cox_recovery},
        {4, "RF signal recovery", 60, rf_recovery},
        {5, "LOO vs holdout AUC", 600, loo_vs_holdout},
        {6, "balancing and leakage", 0, balance_and_leak},
        {7, "time-filter boundary table", 0, time_filter_table},
        {8, "invariance suite", 0, invariance_suite},
        {9, "external-model harness", 0, external_harness},
        {10, "CLI determinism", 0, cli_determinism},
    };
    int failed = 0;
    for (const auto &c : criteria) {
        if (only != 0 && c.id != only && !(only == 6 && c.id == 5)) {
            continue;
        }
        const auto start = std::chrono::steady_clock::now();
        Verdict o;
        try {
            o = c.run();
        } catch (const std::exception &e) {
            o = {false, std::string{"threw: "} + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.budget_s > 0 && secs > c.budget_s) {
            o.pass = false;
            o.detail += "; over the " + fmt(c.budget_s, 0) + " s budget";
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail
                  << " [" << fmt(secs, 1) << " s]" << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
