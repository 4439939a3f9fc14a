#include "manifest.hpp"

#include <dynrisk/cox.hpp>
#include <dynrisk/descriptive.hpp>
#include <dynrisk/encode.hpp>
#include <dynrisk/error.hpp>
#include <dynrisk/external_model.hpp>
#include <dynrisk/forest.hpp>
#include <dynrisk/ingest.hpp>
#include <dynrisk/loo.hpp>
#include <dynrisk/metrics.hpp>
#include <dynrisk/seed.hpp>
#include <dynrisk/selection.hpp>
#include <dynrisk/synth.hpp>
#include <dynrisk/text.hpp>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace dynrisk::cli {
namespace {

std::ifstream open_input(const fs::path &path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) {
        throw ConfigError("cannot open input file " + path.string());
    }
    return in;
}

// either an encoded cohort CSV or raw subjects + catalog
struct CohortSource {
    std::string cohort_csv;
    std::string subjects;
    std::string catalog;
    std::string plausibility;
    std::string normalize = "none";
    bool exclude_post_test_symptoms = false;

    void add_to(CLI::App &cmd) {
        cmd.add_option("--cohort", cohort_csv, "Encoded cohort CSV");
        cmd.add_option("--subjects", subjects, "Subject records (JSONL)");
        cmd.add_option("--catalog", catalog, "Feature catalog CSV");
        cmd.add_option("--plausibility", plausibility, "Vital plausibility bounds (JSON)");
        cmd.add_option("--normalize", normalize, "Continuous normalization")
            ->check(CLI::IsMember({"none", "zscore"}));
        cmd.add_flag("--exclude-post-test-symptoms", exclude_post_test_symptoms,
                     "Only count symptoms and vitals up to the test date");
    }

    EncodedCohort load(RunRecorder &run) const {
        if (!cohort_csv.empty()) {
            if (!subjects.empty()) {
                throw ConfigError("give either --cohort or --subjects/--catalog, not both");
            }
            run.input(cohort_csv);
            auto in = open_input(cohort_csv);
            auto cohort = read_cohort_csv(in);
            spdlog::info("read cohort {}: {} subjects, {} features", cohort_csv, cohort.n_rows(),
                         cohort.n_features());
            return cohort;
        }
        if (subjects.empty() || catalog.empty()) {
            throw ConfigError("need --cohort, or --subjects with --catalog");
        }
        run.input(subjects);
        run.input(catalog);
        PlausibilityConfig bounds;
        if (!plausibility.empty()) {
            run.input(plausibility);
            auto in = open_input(plausibility);
            bounds = PlausibilityConfig::read_json(in);
        }
        auto cat_in = open_input(catalog);
        const auto cat = FeatureCatalog::read_csv(cat_in);
        auto sub_in = open_input(subjects);
        const auto ingested = ingest_cohort(sub_in, bounds);
        const auto &r = ingested.report;
        spdlog::info("ingested {} of {} lines ({} no test date, {} no outcome, {} implausible age)",
                     r.subjects_kept, r.lines_read, r.dropped_missing_test_date, r.dropped_missing_outcome,
                     r.dropped_implausible_age);
        EncodeOptions options;
        options.normalization = normalize == "zscore" ? Normalization::zscore : Normalization::none;
        options.filter.include_post_test_symptoms = !exclude_post_test_symptoms;
        auto cohort = encode_cohort(ingested.subjects, cat, options);
        for (const auto &w : cohort.warnings) {
            spdlog::warn("{}", w);
        }
        return cohort;
    }

    json snapshot() const {
        return {{"cohort", cohort_csv},
                {"subjects", subjects},
                {"catalog", catalog},
                {"plausibility", plausibility},
                {"normalize", normalize},
                {"exclude_post_test_symptoms", exclude_post_test_symptoms}};
    }
};

struct Common {
    std::string out;
    std::uint64_t seed = 0;
    std::size_t threads = 1;

    void add_to(CLI::App &cmd, bool seeded) {
        cmd.add_option("--out", out, "Output directory")->required();
        if (seeded) {
            cmd.add_option("--seed", seed, "Master seed");
        }
        cmd.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    }
};

void write_curves(RunRecorder &run, const std::string &prefix, std::span<const double> scores,
                  std::span<const std::uint8_t> labels) {
    const auto roc = roc_curve(scores, labels);
    run.write(prefix + "roc.csv", [&](std::ostream &o) { write_roc_csv(o, roc); });
    const auto fb = f_beta_curve(scores, labels);
    run.write(prefix + "fbeta.csv", [&](std::ostream &o) { write_fbeta_csv(o, fb); });
    run.result(prefix + "auc", roc.auc);
    spdlog::info("{}AUC {:.4f}", prefix, roc.auc);
}

EncodedCohort apply_exclusions(const EncodedCohort &cohort, const std::vector<std::string> &exclude) {
    if (exclude.empty()) {
        return cohort;
    }
    spdlog::info("excluding {} feature(s) before training", exclude.size());
    return drop_columns(cohort, exclude);
}

struct ForestFlags {
    std::size_t trees = 500;
    std::optional<std::size_t> mtry;
    std::optional<std::size_t> max_depth;
    std::size_t min_leaf = 1;

    void add_to(CLI::App &cmd) {
        cmd.add_option("--trees", trees, "Trees per forest")->check(CLI::PositiveNumber);
        cmd.add_option("--mtry", mtry, "Features tried per split (default sqrt(p))");
        cmd.add_option("--max-depth", max_depth, "Maximum tree depth");
        cmd.add_option("--min-leaf", min_leaf, "Minimum samples per leaf")->check(CLI::PositiveNumber);
    }

    ForestParams params(std::uint64_t seed) const {
        ForestParams p;
        p.n_trees = trees;
        p.mtry = mtry;
        p.max_depth = max_depth;
        p.min_samples_leaf = min_leaf;
        p.seed = seed;
        return p;
    }

    json snapshot() const {
        return {{"trees", trees},
                {"mtry", mtry ? json(*mtry) : json(nullptr)},
                {"max_depth", max_depth ? json(*max_depth) : json(nullptr)},
                {"min_leaf", min_leaf}};
    }
};

// ---- synth

void setup_synth(CLI::App &app) {
    auto *cmd = app.add_subcommand("synth", "Generate a synthetic survival cohort");
    struct Opts {
        std::string config;
        std::optional<std::uint64_t> seed;
        std::string out;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--config", o->config, "Generator config (JSON)")->required();
    cmd->add_option("--seed", o->seed, "Override the config seed");
    cmd->add_option("--out", o->out, "Output directory")->required();
    cmd->callback([o] {
        RunRecorder run{"synth", o->out};
        run.input(o->config);
        auto in = open_input(o->config);
        auto config = GeneratorConfig::read_json(in);
        if (o->seed) {
            config.seed = *o->seed;
        }
        config.validate();
        run.seed(config.seed);
        const auto cohort = generate_cohort(config);
        spdlog::info("generated {} subjects, hazard scale {}", cohort.subjects.size(),
                     text::format_double(cohort.baseline_hazard_scale));

        run.write("subjects.jsonl", [&](std::ostream &out) { write_subjects(out, cohort.subjects); });
        run.write("ground_truth.csv", [&](std::ostream &out) { write_ground_truth_csv(out, cohort); });
        run.write("catalog.csv", [&](std::ostream &out) { cohort.catalog.write_csv(out); });
        const auto encoded = encode_cohort(cohort.subjects, cohort.catalog);
        run.write("cohort.csv", [&](std::ostream &out) { write_cohort_csv(out, encoded); });
        auto resolved = config;
        resolved.baseline_hazard_scale = cohort.baseline_hazard_scale;
        run.write("config.json", [&](std::ostream &out) { resolved.write_json(out); });

        std::ostringstream snap;
        config.write_json(snap);
        run.config("generator", json::parse(snap.str()));
        run.result("baseline_hazard_scale", cohort.baseline_hazard_scale);
        run.result("event_rate", static_cast<double>(encoded.n_positive()) / static_cast<double>(encoded.n_rows()));
        run.finish();
    });
}

// ---- encode

void setup_encode(CLI::App &app) {
    auto *cmd = app.add_subcommand("encode", "Ingest subject records and write the encoded cohort");
    auto src = std::make_shared<CohortSource>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--subjects", src->subjects, "Subject records (JSONL)")->required();
    cmd->add_option("--catalog", src->catalog, "Feature catalog CSV")->required();
    cmd->add_option("--plausibility", src->plausibility, "Vital plausibility bounds (JSON)");
    cmd->add_option("--normalize", src->normalize, "Continuous normalization")
        ->check(CLI::IsMember({"none", "zscore"}));
    cmd->add_flag("--exclude-post-test-symptoms", src->exclude_post_test_symptoms,
                  "Only count symptoms and vitals up to the test date");
    cmd->add_option("--out", *out, "Output directory")->required();
    cmd->callback([src, out] {
        RunRecorder run{"encode", *out};
        run.config("source", src->snapshot());
        const auto cohort = src->load(run);
        run.write("cohort.csv", [&](std::ostream &o) { write_cohort_csv(o, cohort); });
        run.result("n_subjects", cohort.n_rows());
        run.result("n_features", cohort.n_features());
        run.result("n_positive", cohort.n_positive());
        run.result("warnings", cohort.warnings);
        run.finish();
    });
}

// ---- stats

void setup_stats(CLI::App &app) {
    auto *cmd = app.add_subcommand("stats", "Descriptive table by outcome");
    auto src = std::make_shared<CohortSource>();
    auto common = std::make_shared<Common>();
    src->add_to(*cmd);
    common->add_to(*cmd, false);
    cmd->callback([src, common] {
        RunRecorder run{"stats", common->out};
        run.config("source", src->snapshot());
        const auto cohort = src->load(run);
        const auto rows = descriptive_stats(cohort);
        run.write("table1.tsv", [&](std::ostream &o) { write_descriptive_tsv(o, rows); });
        run.result("n_rows", rows.size());
        run.finish();
    });
}

// ---- train-rf

void setup_train_rf(CLI::App &app) {
    auto *cmd = app.add_subcommand("train-rf", "Train one forest on a class-balanced cohort");
    auto src = std::make_shared<CohortSource>();
    auto common = std::make_shared<Common>();
    auto forest = std::make_shared<ForestFlags>();
    auto exclude = std::make_shared<std::vector<std::string>>();
    src->add_to(*cmd);
    common->add_to(*cmd, true);
    forest->add_to(*cmd);
    cmd->add_option("--exclude-features", *exclude, "Columns dropped before training")->delimiter(',');
    cmd->callback([=] {
        RunRecorder run{"train-rf", common->out};
        run.seed(common->seed);
        run.config("source", src->snapshot());
        run.config("forest", forest->snapshot());
        run.config("exclude_features", *exclude);
        const auto cohort = apply_exclusions(src->load(run), *exclude);
        const auto rows = balance_classes(cohort.labels, std::nullopt, derive_seed(common->seed, 0, salt::holdout));
        if (!rows) {
            throw DomainError("cohort has a single outcome class");
        }
        const auto view = view_of(cohort);
        const auto model = train_forest({view.x, view.labels, *rows}, cohort.feature_names,
                                        forest->params(mix64(common->seed)), common->threads);
        run.write("forest.json", [&](std::ostream &o) { model.write_json(o); });
        const auto ranking = rank_features(cohort.feature_names, model.importances());
        run.write("ranking.csv", [&](std::ostream &o) { write_ranking_csv(o, ranking); });
        run.result("training_rows", rows->size());
        run.finish();
    });
}

// ---- loo-rf

void setup_loo_rf(CLI::App &app) {
    auto *cmd = app.add_subcommand("loo-rf", "Leave-one-out random forest evaluation");
    auto src = std::make_shared<CohortSource>();
    auto common = std::make_shared<Common>();
    auto forest = std::make_shared<ForestFlags>();
    auto exclude = std::make_shared<std::vector<std::string>>();
    auto impute = std::make_shared<std::string>("cohort");
    src->add_to(*cmd);
    common->add_to(*cmd, true);
    forest->add_to(*cmd);
    cmd->add_option("--exclude-features", *exclude, "Columns dropped before training")->delimiter(',');
    cmd->add_option("--impute", *impute, "Imputation mean source")->check(CLI::IsMember({"cohort", "fold"}));
    cmd->callback([=] {
        RunRecorder run{"loo-rf", common->out};
        run.seed(common->seed);
        run.config("source", src->snapshot());
        run.config("forest", forest->snapshot());
        run.config("exclude_features", *exclude);
        run.config("impute", *impute);
        const auto cohort = apply_exclusions(src->load(run), *exclude);

        // the LOO loop is parallel, so each forest trains single-threaded
        RandomForestTrainer trainer{forest->params(common->seed), 1};
        LooOptions options;
        options.seed = common->seed;
        options.threads = common->threads;
        options.impute = *impute == "fold" ? ImputeMode::fold : ImputeMode::cohort;
        const auto result = run_loo(cohort, trainer, options);
        spdlog::info("LOO finished: {} iterations, {} failed", result.n_iterations, result.n_failures);

        run.write("loo_scores.csv", [&](std::ostream &o) { write_loo_csv(o, cohort, result); });
        const auto scores = result.scores();
        const auto labels = result.labels();
        write_curves(run, "", scores, labels);
        const auto ranking = aggregate_importance(result.iteration_importances, cohort.feature_names);
        run.write("ranking.csv", [&](std::ostream &o) { write_ranking_csv(o, ranking); });
        run.result("n_iterations", result.n_iterations);
        run.result("n_failures", result.n_failures);
        run.result("leak_count", result.leak_count);
        run.finish();
    });
}

// ---- fit-cox

void setup_fit_cox(CLI::App &app) {
    auto *cmd = app.add_subcommand("fit-cox", "Fit a Cox proportional hazards model");
    auto src = std::make_shared<CohortSource>();
    auto common = std::make_shared<Common>();
    auto exclude = std::make_shared<std::vector<std::string>>();
    auto features = std::make_shared<std::vector<std::string>>();
    auto shortlist = std::make_shared<std::string>();
    auto ties = std::make_shared<std::string>("efron");
    auto loo = std::make_shared<bool>(false);
    auto level = std::make_shared<double>(0.95);
    src->add_to(*cmd);
    common->add_to(*cmd, true);
    cmd->add_option("--exclude-features", *exclude, "Columns dropped before fitting")->delimiter(',');
    cmd->add_option("--features", *features, "Columns to fit (default all)")->delimiter(',');
    cmd->add_option("--shortlist", *shortlist, "Ranking/shortlist CSV naming the columns to fit");
    cmd->add_option("--ties", *ties, "Tied event handling")->check(CLI::IsMember({"efron", "breslow"}));
    cmd->add_option("--level", *level, "Confidence level")->check(CLI::Range(0.5, 0.999999));
    cmd->add_flag("--loo", *loo, "Also run leave-one-out evaluation");
    cmd->callback([=] {
        RunRecorder run{"fit-cox", common->out};
        run.seed(common->seed);
        run.config("source", src->snapshot());
        run.config("ties", *ties);
        run.config("level", *level);
        run.config("loo", *loo);
        run.config("exclude_features", *exclude);
        auto cohort = apply_exclusions(src->load(run), *exclude);
        auto names = *features;
        if (!shortlist->empty()) {
            if (!names.empty()) {
                throw ConfigError("give either --features or --shortlist, not both");
            }
            run.input(*shortlist);
            auto in = open_input(*shortlist);
            for (const auto &e : read_ranking_csv(in).entries) {
                names.push_back(e.feature_name);
            }
        }
        if (!names.empty()) {
            cohort = select_columns(cohort, names);
        }
        run.config("features", cohort.feature_names);

        CoxOptions options;
        options.ties = parse_ties(*ties);
        const auto view = view_of(cohort);
        std::vector<std::size_t> all(cohort.n_rows());
        std::iota(all.begin(), all.end(), std::size_t{0});
        const auto samples = survival_samples(view, all);
        const auto model = fit_cox(samples, cohort.feature_names, options);
        for (const auto &w : model.warnings) {
            spdlog::warn("{}", w);
        }
        spdlog::info("Cox fit converged={} after {} iterations", model.converged, model.n_iterations);
        run.write("cox_model.json", [&](std::ostream &o) { model.write_json(o); });
        run.write("hazard_ratios.csv",
                  [&](std::ostream &o) { write_hazard_ratio_csv(o, hazard_ratios(model, *level)); });
        run.result("n_iterations", model.n_iterations);
        run.result("converged", model.converged);

        std::vector<double> in_sample(cohort.n_rows());
        for (std::size_t r = 0; r < cohort.n_rows(); ++r) {
            in_sample[r] = cox_risk_score(model, cohort.row(r));
        }
        write_curves(run, "in_sample_", in_sample, cohort.labels);

        if (*loo) {
            CoxTrainer trainer{options};
            LooOptions lo;
            lo.seed = common->seed;
            lo.threads = common->threads;
            const auto result = run_loo(cohort, trainer, lo);
            run.write("loo_scores.csv", [&](std::ostream &o) { write_loo_csv(o, cohort, result); });
            write_curves(run, "loo_", result.scores(), result.labels());
            run.result("loo_failures", result.n_failures);
        }
        run.finish();
    });
}

// ---- select

void setup_select(CLI::App &app) {
    auto *cmd = app.add_subcommand("select", "Apply a clinical review to a feature ranking");
    auto ranking = std::make_shared<std::string>();
    auto review = std::make_shared<std::string>();
    auto catalog = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--ranking", *ranking, "Ranking CSV")->required();
    cmd->add_option("--review", *review, "Review config (JSON)");
    cmd->add_option("--catalog", *catalog, "Original feature catalog to rebuild");
    cmd->add_option("--out", *out, "Output directory")->required();
    cmd->callback([=] {
        RunRecorder run{"select", *out};
        run.input(*ranking);
        auto rin = open_input(*ranking);
        const auto ranked = read_ranking_csv(rin);
        ReviewConfig config;
        if (!review->empty()) {
            run.input(*review);
            auto in = open_input(*review);
            config = ReviewConfig::read_json(in);
        }
        run.config("screen_top_k", config.screen_top_k);
        run.config("reviewed_on", config.reviewed_on);
        const auto outcome = apply_review(ranked, config);
        run.write("shortlist.csv", [&](std::ostream &o) { write_ranking_csv(o, outcome.shortlist); });
        run.write("audit.tsv", [&](std::ostream &o) { write_audit_log(o, outcome.audit); });
        if (!catalog->empty()) {
            run.input(*catalog);
            auto in = open_input(*catalog);
            const auto rebuilt = rebuild_catalog(outcome.shortlist, FeatureCatalog::read_csv(in));
            run.write("catalog.csv", [&](std::ostream &o) { rebuilt.write_csv(o); });
        }
        run.result("shortlist_size", outcome.shortlist.entries.size());
        run.result("actions", outcome.audit.size());
        run.finish();
    });
}

// ---- compare

void setup_compare(CLI::App &app) {
    auto *cmd = app.add_subcommand("compare", "Score the cohort with an external risk equation");
    auto src = std::make_shared<CohortSource>();
    auto common = std::make_shared<Common>();
    auto equation = std::make_shared<std::string>();
    src->add_to(*cmd);
    common->add_to(*cmd, false);
    cmd->add_option("--equation", *equation, "Risk equation file")->required();
    cmd->callback([=] {
        RunRecorder run{"compare", common->out};
        run.config("source", src->snapshot());
        const auto cohort = src->load(run);
        run.input(*equation);
        auto in = open_input(*equation);
        const auto eq = load_equation(in);
        const auto coverage = eq.coverage();
        for (const auto &v : coverage.missing) {
            spdlog::warn("equation variable '{}' is not available in the cohort", v);
        }
        const auto scores = evaluate_external(eq, cohort, common->threads);
        run.write("scores.csv", [&](std::ostream &o) {
            o << "subject_id,stratum,label,score\n";
            for (std::size_t r = 0; r < cohort.n_rows(); ++r) {
                o << text::csv_field(cohort.subject_ids[r]) << ',' << eq.strata[scores.stratum_of[r]].label << ','
                  << static_cast<int>(cohort.labels[r]) << ',' << text::format_double(scores.scores[r]) << '\n';
            }
        });
        write_curves(run, "", scores.scores, cohort.labels);
        const auto report = external_report(eq, scores, cohort);
        json strata = json::object();
        for (const auto &[label, curve] : report.per_stratum) {
            strata[label] = curve ? json(curve->auc) : json(nullptr);
            if (curve) {
                run.write("roc_" + label + ".csv", [&](std::ostream &o) { write_roc_csv(o, *curve); });
            }
        }
        run.result("stratum_auc", strata);
        run.result("coverage", {{"declared", coverage.declared},
                                {"mapped", coverage.mapped},
                                {"missing", coverage.missing}});
        run.finish();
    });
}

void configure_logging() {
    auto logger = spdlog::stderr_logger_mt("dynrisk");
    logger->set_pattern("%Y-%m-%dT%H:%M:%S.%e %l %v");
    logger->set_level(spdlog::level::info);
    if (const char *env = std::getenv("DYNRISK_LOG")) {
        logger->set_level(spdlog::level::from_str(env));
    }
    spdlog::set_default_logger(logger);
}

} // namespace
} // namespace dynrisk::cli

int main(int argc, char **argv) {
    using namespace dynrisk::cli;
    configure_logging();
    CLI::App app{"Mortality risk modelling pipeline"};
    app.set_version_flag("--version", DYNRISK_VERSION);
    app.require_subcommand(1);
    setup_synth(app);
    setup_encode(app);
    setup_stats(app);
    setup_train_rf(app);
    setup_loo_rf(app);
    setup_fit_cox(app);
    setup_select(app);
    setup_compare(app);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e);
    } catch (const dynrisk::SeparationError &e) {
        spdlog::error("{} (feature '{}')", e.what(), e.feature());
        return 1;
    } catch (const dynrisk::EvaluationError &e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const std::exception &e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
