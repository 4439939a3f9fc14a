#include "dynrisk/time_filter.hpp"

namespace dynrisk {

std::vector<FilteredItem> apply_time_filter(const SubjectRecord &subject, const FeatureCatalog &catalog,
                                            const FilterOptions &options) {
    std::vector<FilteredItem> items;
    const auto place = [&](std::size_t entry_index, double value, Date date) {
        const auto &entry = catalog.entries()[entry_index];
        const auto &rule = window_rule(entry.feature_class, options.include_post_test_symptoms);
        FilteredItem item;
        item.entry_index = entry_index;
        item.feature_name = entry.feature_name;
        item.value = value;
        item.days_before = subject.index_test_date - date;
        item.window_index = rule.window_for(item.days_before);
        if (item.window_index && !entry.matcher.keeps_window(*item.window_index)) {
            item.window_index.reset();
        }
        items.push_back(std::move(item));
    };
    for (const auto &event : subject.events) {
        if (const auto entry = catalog.match_event(event.code)) {
            place(*entry, 1.0, event.date);
        }
    }
    for (const auto &vital : subject.vitals) {
        if (const auto entry = catalog.match_vital(vital.kind)) {
            place(*entry, vital.value, vital.date);
        }
    }
    return items;
}

} // namespace dynrisk
