#include "dynrisk/synth.hpp"

#include "dynrisk/error.hpp"
#include "dynrisk/seed.hpp"
#include "dynrisk/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace dynrisk {

using nlohmann::json;

namespace {

constexpr double noise_prevalence = 0.5;
constexpr double default_age = 65.0;
constexpr int event_lead_days = 400;
const Date first_test_date = Date::parse("2020-03-16");
constexpr int test_date_span_days = 300;

std::vector<FeatureSpec> all_specs(const GeneratorConfig &config) {
    auto specs = config.feature_specs;
    for (std::size_t i = 1; i <= config.noise_features; ++i) {
        specs.push_back({"noise_" + std::to_string(i), FeatureSpec::Kind::binary, noise_prevalence, 0.0, 1.0});
    }
    return specs;
}

const FeatureSpec *find_spec(const std::vector<FeatureSpec> &specs, const std::string &name) {
    const auto it = std::find_if(specs.begin(), specs.end(), [&](const auto &s) { return s.name == name; });
    return it == specs.end() ? nullptr : &*it;
}

double draw_value(const FeatureSpec &spec, std::mt19937_64 &rng) {
    if (spec.kind == FeatureSpec::Kind::binary) {
        return std::bernoulli_distribution{spec.prevalence}(rng) ? 1.0 : 0.0;
    }
    double v = std::normal_distribution<double>{spec.mean, spec.sd}(rng);
    if (spec.name == "age") {
        v = std::clamp(v, 18.0, 120.0);
    }
    return v;
}

double linear_predictor(const GeneratorConfig &config, const std::vector<FeatureSpec> &specs,
                        const std::vector<double> &values) {
    double eta = 0.0;
    for (const auto &effect : config.planted_effects) {
        const auto *spec = find_spec(specs, effect.feature_name);
        eta += effect.log_hazard_ratio * values[static_cast<std::size_t>(spec - specs.data())];
    }
    return eta;
}

/// Uniform in (0, 1], so -log(u) is finite.
double open_uniform(std::mt19937_64 &rng) {
    return 1.0 - std::uniform_real_distribution<double>{0.0, 1.0}(rng);
}

double calibrate_scale(const GeneratorConfig &config, const std::vector<FeatureSpec> &specs, double &pilot_rate) {
    std::mt19937_64 rng{derive_seed(config.seed, 0, salt::synth_pilot)};
    std::vector<double> thresholds(calibration_pilot_draws);
    std::vector<double> values(specs.size());
    for (auto &t : thresholds) {
        for (std::size_t j = 0; j < specs.size(); ++j) {
            values[j] = draw_value(specs[j], rng);
        }
        const double eta = linear_predictor(config, specs, values);
        // Event iff -log(u) / (scale * exp(eta)) < horizon.
        t = -std::log(open_uniform(rng)) / (std::exp(eta) * config.censor_horizon_days);
    }
    const auto rate = [&](double scale) {
        const auto events = std::count_if(thresholds.begin(), thresholds.end(), [&](double t) { return t < scale; });
        return static_cast<double>(events) / static_cast<double>(thresholds.size());
    };
    const auto [min_it, max_it] = std::minmax_element(thresholds.begin(), thresholds.end());
    double lo = std::log(std::max(*min_it, std::numeric_limits<double>::min())) - 1.0;
    double hi = std::log(*max_it) + 1.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double r = rate(std::exp(mid));
        if (std::abs(r - config.target_event_rate) <= calibration_tolerance) {
            pilot_rate = r;
            return std::exp(mid);
        }
        (r > config.target_event_rate ? hi : lo) = mid;
    }
    throw ConfigError("target_event_rate " + text::format_double(config.target_event_rate) +
                      " is unreachable within calibration tolerance");
}

FeatureCatalog synthetic_catalog(const std::vector<FeatureSpec> &specs) {
    std::vector<CatalogEntry> entries;
    for (const auto &spec : specs) {
        CatalogEntry e;
        e.feature_name = spec.name;
        if (spec.name == "age") {
            e.matcher = Matcher::parse("age");
            e.feature_class = FeatureClass::baseline;
            e.encoding = Encoding::continuous;
        } else if (spec.name == "sex") {
            e.matcher = Matcher::parse("sex");
            e.feature_class = FeatureClass::baseline;
            e.encoding = Encoding::binary_presence;
        } else if (spec.kind == FeatureSpec::Kind::binary) {
            e.matcher = Matcher::parse("code:" + synthetic_event_code(spec.name));
            e.feature_class = FeatureClass::chronic;
            e.encoding = Encoding::binary_presence;
        } else {
            e.matcher = Matcher::parse("baseline:" + spec.name);
            e.feature_class = FeatureClass::baseline;
            e.encoding = Encoding::continuous;
        }
        entries.push_back(std::move(e));
    }
    return FeatureCatalog{std::move(entries)};
}

std::string subject_id(std::size_t index, std::size_t n) {
    auto digits = std::to_string(n).size();
    auto id = std::to_string(index + 1);
    return "S" + std::string(digits > id.size() ? digits - id.size() : 0, '0') + id;
}

} // namespace

std::string synthetic_event_code(const std::string &feature_name) { return "SYN." + feature_name + "."; }

void GeneratorConfig::validate() const {
    if (n_subjects == 0) {
        throw ConfigError("n_subjects must be positive");
    }
    if (!(target_event_rate > 0.0 && target_event_rate < 1.0)) {
        throw ConfigError("target_event_rate must be in (0, 1), got " + text::format_double(target_event_rate));
    }
    if (censor_horizon_days <= 0) {
        throw ConfigError("censor_horizon_days must be positive");
    }
    if (baseline_hazard_scale && !(*baseline_hazard_scale > 0.0)) {
        throw ConfigError("baseline_hazard_scale must be positive");
    }
    if (planted_effects.empty()) {
        throw ConfigError("planted_effects must contain at least one effect");
    }
    std::set<std::string> names;
    for (const auto &spec : feature_specs) {
        if (spec.name.empty() || spec.name.find_first_of("@=,\". ") != std::string::npos) {
            throw ConfigError("feature_specs name '" + spec.name + "' is empty or has reserved characters");
        }
        if (spec.name.starts_with("noise_")) {
            throw ConfigError("feature_specs name '" + spec.name + "' uses the reserved noise_ prefix");
        }
        if (!names.insert(spec.name).second) {
            throw ConfigError("feature_specs name '" + spec.name + "' is duplicated");
        }
        if (spec.kind == FeatureSpec::Kind::binary && !(spec.prevalence > 0.0 && spec.prevalence < 1.0)) {
            throw ConfigError("feature_specs '" + spec.name + "' prevalence must be in (0, 1)");
        }
        if (spec.kind == FeatureSpec::Kind::continuous && !(spec.sd > 0.0)) {
            throw ConfigError("feature_specs '" + spec.name + "' sd must be positive");
        }
        if (spec.name == "age" && spec.kind != FeatureSpec::Kind::continuous) {
            throw ConfigError("feature_specs 'age' must be continuous");
        }
        if (spec.name == "sex" && spec.kind != FeatureSpec::Kind::binary) {
            throw ConfigError("feature_specs 'sex' must be binary");
        }
    }
    for (const auto &effect : planted_effects) {
        if (!names.contains(effect.feature_name)) {
            throw ConfigError("planted_effects feature '" + effect.feature_name + "' is not in feature_specs");
        }
        if (!std::isfinite(effect.log_hazard_ratio)) {
            throw ConfigError("planted_effects '" + effect.feature_name + "' log_hazard_ratio must be finite");
        }
    }
}

GeneratorConfig GeneratorConfig::read_json(std::istream &in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception &e) {
        throw ParseError(std::string{"generator config: "} + e.what());
    }
    GeneratorConfig config;
    const auto get = [&](const json &obj, const char *field, auto &target) {
        const auto it = obj.find(field);
        if (it == obj.end()) {
            return false;
        }
        try {
            it->get_to(target);
        } catch (const json::exception &) {
            throw ConfigError(std::string{"field '"} + field + "' has the wrong type");
        }
        return true;
    };
    try {
        if (!doc.is_object()) {
            throw ConfigError("generator config must be a JSON object");
        }
        get(doc, "n_subjects", config.n_subjects);
        get(doc, "target_event_rate", config.target_event_rate);
        get(doc, "noise_features", config.noise_features);
        get(doc, "censor_horizon_days", config.censor_horizon_days);
        get(doc, "seed", config.seed);
        if (doc.contains("baseline_hazard_scale") && !doc["baseline_hazard_scale"].is_null()) {
            double scale = 0.0;
            get(doc, "baseline_hazard_scale", scale);
            config.baseline_hazard_scale = scale;
        }
        for (const auto &spec : doc.value("feature_specs", json::array())) {
            FeatureSpec fs;
            get(spec, "name", fs.name);
            std::string kind = "binary";
            get(spec, "kind", kind);
            if (kind == "binary") {
                fs.kind = FeatureSpec::Kind::binary;
                get(spec, "prevalence", fs.prevalence);
            } else if (kind == "continuous") {
                fs.kind = FeatureSpec::Kind::continuous;
                get(spec, "mean", fs.mean);
                get(spec, "sd", fs.sd);
            } else {
                throw ConfigError("feature_specs kind must be binary or continuous, got '" + kind + "'");
            }
            config.feature_specs.push_back(std::move(fs));
        }
        for (const auto &effect : doc.value("planted_effects", json::array())) {
            PlantedEffect pe;
            get(effect, "feature_name", pe.feature_name);
            get(effect, "log_hazard_ratio", pe.log_hazard_ratio);
            config.planted_effects.push_back(std::move(pe));
        }
    } catch (const json::exception &e) {
        throw ConfigError(std::string{"generator config: "} + e.what());
    }
    config.validate();
    return config;
}

void GeneratorConfig::write_json(std::ostream &out) const {
    json doc;
    doc["n_subjects"] = n_subjects;
    doc["target_event_rate"] = target_event_rate;
    doc["noise_features"] = noise_features;
    doc["censor_horizon_days"] = censor_horizon_days;
    doc["seed"] = seed;
    doc["baseline_hazard_scale"] = baseline_hazard_scale ? json(*baseline_hazard_scale) : json(nullptr);
    json specs = json::array();
    for (const auto &s : feature_specs) {
        if (s.kind == FeatureSpec::Kind::binary) {
            specs.push_back({{"name", s.name}, {"kind", "binary"}, {"prevalence", s.prevalence}});
        } else {
            specs.push_back({{"name", s.name}, {"kind", "continuous"}, {"mean", s.mean}, {"sd", s.sd}});
        }
    }
    doc["feature_specs"] = std::move(specs);
    json effects = json::array();
    for (const auto &e : planted_effects) {
        effects.push_back({{"feature_name", e.feature_name}, {"log_hazard_ratio", e.log_hazard_ratio}});
    }
    doc["planted_effects"] = std::move(effects);
    out << doc.dump(2) << '\n';
}

SyntheticCohort generate_cohort(const GeneratorConfig &config) {
    config.validate();
    const auto specs = all_specs(config);
    SyntheticCohort out;
    out.catalog = synthetic_catalog(specs);
    out.pilot_event_rate = std::nan("");
    out.baseline_hazard_scale = config.baseline_hazard_scale ? *config.baseline_hazard_scale
                                                             : calibrate_scale(config, specs, out.pilot_event_rate);
    const bool has_sex = find_spec(specs, "sex") != nullptr;

    out.subjects.resize(config.n_subjects);
    out.ground_truth.resize(config.n_subjects);
    std::vector<double> values(specs.size());
    for (std::size_t i = 0; i < config.n_subjects; ++i) {
        std::mt19937_64 rng{derive_seed(config.seed, i, salt::synth_subject)};
        for (std::size_t j = 0; j < specs.size(); ++j) {
            values[j] = draw_value(specs[j], rng);
        }
        const double eta = linear_predictor(config, specs, values);
        const double time = -std::log(open_uniform(rng)) / (out.baseline_hazard_scale * std::exp(eta));
        const int offset = std::uniform_int_distribution<int>{0, test_date_span_days - 1}(rng);
        const bool male = has_sex ? false : std::bernoulli_distribution{0.5}(rng);

        auto &s = out.subjects[i];
        s.subject_id = subject_id(i, config.n_subjects);
        s.age_years = default_age;
        s.sex = male ? Sex::male : Sex::female;
        s.index_test_date = first_test_date + offset;
        for (std::size_t j = 0; j < specs.size(); ++j) {
            const auto &spec = specs[j];
            if (spec.name == "age") {
                s.age_years = values[j];
            } else if (spec.name == "sex") {
                s.sex = values[j] == 1.0 ? Sex::male : Sex::female;
            } else if (spec.kind == FeatureSpec::Kind::binary) {
                if (values[j] == 1.0) {
                    s.events.push_back({synthetic_event_code(spec.name), s.index_test_date - event_lead_days,
                                        EventSource::hospital});
                }
            } else {
                s.continuous_baseline[spec.name] = values[j];
            }
        }
        s.outcome.censor_date = s.index_test_date + config.censor_horizon_days;
        if (time < config.censor_horizon_days) {
            s.outcome.died = true;
            const int days = std::max(1, static_cast<int>(std::ceil(time)));
            s.outcome.death_date = s.index_test_date + std::min(days, config.censor_horizon_days);
        }
        out.ground_truth[i] = {s.subject_id, eta};
    }
    return out;
}

double oracle_score(const GeneratorConfig &config, const SubjectRecord &subject) {
    const auto specs = all_specs(config);
    double eta = 0.0;
    for (const auto &effect : config.planted_effects) {
        const auto *spec = find_spec(specs, effect.feature_name);
        if (spec == nullptr) {
            throw ConfigError("unknown planted feature '" + effect.feature_name + "'");
        }
        double x = 0.0;
        if (spec->name == "age") {
            x = subject.age_years;
        } else if (spec->name == "sex") {
            x = subject.sex == Sex::male ? 1.0 : 0.0;
        } else if (spec->kind == FeatureSpec::Kind::binary) {
            const auto code = synthetic_event_code(spec->name);
            x = std::any_of(subject.events.begin(), subject.events.end(),
                            [&](const ClinicalEvent &e) { return e.code == code; })
                    ? 1.0
                    : 0.0;
        } else {
            const auto it = subject.continuous_baseline.find(spec->name);
            if (it == subject.continuous_baseline.end() || !it->second) {
                throw ConfigError("subject '" + subject.subject_id + "' has no value for '" + spec->name + "'");
            }
            x = *it->second;
        }
        eta += effect.log_hazard_ratio * x;
    }
    return eta;
}

void write_ground_truth_csv(std::ostream &out, const SyntheticCohort &cohort) {
    out << "subject_id,linear_predictor\n";
    for (const auto &[id, eta] : cohort.ground_truth) {
        out << text::csv_field(id) << ',' << text::format_double(eta) << '\n';
    }
}

} // namespace dynrisk
