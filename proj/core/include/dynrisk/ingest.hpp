#pragma once

#include "dynrisk/cohort.hpp"

#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <utility>
#include <vector>

namespace dynrisk {

/// Per-kind physiological plausibility bounds (inclusive).
struct PlausibilityConfig {
    std::map<VitalKind, std::pair<double, double>> bounds = default_bounds();

    static std::map<VitalKind, std::pair<double, double>> default_bounds();
    /// JSON object {"heart_rate": [20, 250], ...}; unlisted kinds keep defaults.
    static PlausibilityConfig read_json(std::istream &in);

    bool plausible(const VitalObservation &v) const;
};

struct IngestReport {
    std::size_t lines_read = 0;
    std::size_t subjects_kept = 0;
    std::size_t dropped_missing_test_date = 0;
    std::size_t dropped_missing_outcome = 0;
    std::size_t dropped_implausible_age = 0;
    std::size_t vitals_dropped = 0;
    std::size_t events_dropped = 0; ///< empty code or dated after records end
    std::size_t unknown_fields = 0;
};

struct IngestResult {
    std::vector<SubjectRecord> subjects;
    IngestReport report;
};

/// Reads line-delimited JSON subject records and sanitises them.
///
/// Subjects without an index test date or outcome are dropped, as are
/// implausible vitals and events that violate the record invariants; each
/// drop is counted in the report. Throws ParseError (with line number) on
/// malformed lines and ConfigError on duplicate subject ids.
IngestResult ingest_cohort(std::istream &source, const PlausibilityConfig &plausibility = {});

/// Writes one JSON object per line in the format ingest_cohort reads.
void write_subjects(std::ostream &out, const std::vector<SubjectRecord> &subjects);

} // namespace dynrisk
