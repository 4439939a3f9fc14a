#pragma once

#include "dynrisk/catalog.hpp"
#include "dynrisk/cohort.hpp"

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace dynrisk {

struct FeatureSpec {
    enum class Kind { binary, continuous };
    std::string name;
    Kind kind = Kind::binary;
    double prevalence = 0.5; ///< binary
    double mean = 0.0;       ///< continuous
    double sd = 1.0;         ///< continuous
};

struct PlantedEffect {
    std::string feature_name;
    double log_hazard_ratio = 0.0;
};

/// Synthetic cohort parameters.
///
/// Feature names `age` (continuous) and `sex` (binary, 1 = male) drive the
/// demographic fields; other binary features become chronic diagnosis
/// events and continuous ones become baseline measurements. Noise features
/// are independent Bernoulli(0.5) diagnoses named noise_1..noise_k. When
/// `baseline_hazard_scale` is empty it is calibrated to `target_event_rate`.
struct GeneratorConfig {
    std::size_t n_subjects = 1000;
    double target_event_rate = 0.1;
    std::vector<PlantedEffect> planted_effects;
    std::vector<FeatureSpec> feature_specs;
    std::size_t noise_features = 0;
    std::optional<double> baseline_hazard_scale;
    int censor_horizon_days = 90;
    std::uint64_t seed = 0;

    void validate() const; ///< throws ConfigError naming the offending field
    static GeneratorConfig read_json(std::istream &in);
    void write_json(std::ostream &out) const;
};

struct SyntheticCohort {
    std::vector<SubjectRecord> subjects;
    /// True linear predictor per subject, in subject order.
    std::vector<std::pair<std::string, double>> ground_truth;
    double baseline_hazard_scale = 0.0;
    double pilot_event_rate = 0.0; ///< calibration pilot rate (NaN when not calibrated)
    FeatureCatalog catalog;        ///< encodes every generated feature
};

inline constexpr std::size_t calibration_pilot_draws = 100'000;
inline constexpr double calibration_tolerance = 0.002;

/// Exponential survival cohort with hazard scale * exp(sum of planted log-HR * x).
/// Deterministic in config.seed. Throws ConfigError when calibration fails.
SyntheticCohort generate_cohort(const GeneratorConfig &config);

/// Sum of planted log hazard ratios times the subject's feature values.
/// Throws ConfigError for a planted feature absent from the specs.
double oracle_score(const GeneratorConfig &config, const SubjectRecord &subject);

/// Event code written for a generated binary feature.
std::string synthetic_event_code(const std::string &feature_name);

/// Sidecar CSV: subject_id,linear_predictor.
void write_ground_truth_csv(std::ostream &out, const SyntheticCohort &cohort);

} // namespace dynrisk
