#pragma once

#include "dynrisk/encode.hpp"

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace dynrisk {

struct GroupSummary {
    std::size_t count = 0;         ///< subjects with the feature (binary) or observed values (continuous)
    std::optional<double> mean;    ///< continuous only
    std::optional<double> std_dev; ///< sample SD; absent below two observations
};

/// One Table-1 style row: all subjects, survivors, deaths.
struct DescriptiveRow {
    std::string characteristic;
    bool continuous = false;
    GroupSummary all;
    GroupSummary survived;
    GroupSummary died;

    /// Formatted cells. Binary rows: "n", "k (pct)", "k (pct)" with within-row
    /// percentages; continuous rows: "mean (SD) [n]".
    std::string all_cell() const;
    std::string survived_cell() const;
    std::string died_cell() const;
};

/// Total row followed by one row per feature, split by outcome. Values are
/// reported in original units; imputed entries are ignored for continuous
/// features.
std::vector<DescriptiveRow> descriptive_stats(const EncodedCohort &cohort);

/// Percentage with one decimal, trailing ".0" removed ("8", "89.3").
std::string format_percent(double pct);

/// Tab-separated report with header characteristic, all, survived, died.
void write_descriptive_tsv(std::ostream &out, const std::vector<DescriptiveRow> &rows);

} // namespace dynrisk
