#pragma once

#include "dynrisk/catalog.hpp"
#include "dynrisk/cohort.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace dynrisk {

struct FilterOptions {
    /// Keep symptoms and vitals recorded up to 14 days after the test.
    bool include_post_test_symptoms = true;
};

/// One catalog-matched event or vital after time filtering.
struct FilteredItem {
    std::size_t entry_index = 0;
    std::string feature_name;
    std::optional<std::size_t> window_index; ///< empty = excluded
    double value = 1.0;                      ///< 1 for events, the measurement for vitals
    int days_before = 0;                     ///< test date minus record date
};

/// Assigns each catalog-matched event and vital of `subject` to a window of
/// its feature class, or marks it excluded. Records no catalog entry matches
/// are omitted. Output preserves the subject's event order, then vitals.
std::vector<FilteredItem> apply_time_filter(const SubjectRecord &subject, const FeatureCatalog &catalog,
                                            const FilterOptions &options = {});

} // namespace dynrisk
