#pragma once

#include <dynrisk/catalog.hpp>
#include <dynrisk/cohort.hpp>
#include <dynrisk/date.hpp>
#include <dynrisk/encode.hpp>

#include <random>
#include <string>
#include <vector>

namespace fixtures {

inline dynrisk::Date d(const char *iso) { return dynrisk::Date::parse(iso); }

inline dynrisk::SubjectRecord subject(std::string id, const char *test_date, bool died, int followup_days = 30) {
    dynrisk::SubjectRecord s;
    s.subject_id = std::move(id);
    s.age_years = 60;
    s.index_test_date = d(test_date);
    s.outcome.died = died;
    s.outcome.censor_date = s.index_test_date + followup_days;
    if (died) {
        s.outcome.death_date = s.index_test_date + followup_days;
    }
    return s;
}

inline dynrisk::CatalogEntry entry(std::string name, const std::string &matcher, dynrisk::FeatureClass cls,
                                   dynrisk::Encoding enc = dynrisk::Encoding::binary_presence) {
    return {std::move(name), dynrisk::Matcher::parse(matcher), cls, std::nullopt, enc};
}

// dense cohort straight from a matrix, for model tests
inline dynrisk::EncodedCohort matrix_cohort(std::size_t n, std::size_t p, const std::vector<double> &x,
                                            const std::vector<std::uint8_t> &labels,
                                            std::vector<int> survival = {}) {
    dynrisk::EncodedCohort c;
    for (std::size_t j = 0; j < p; ++j) {
        c.feature_names.push_back("f" + std::to_string(j));
        c.column_kinds.push_back(dynrisk::ColumnKind::continuous);
        c.column_stats.push_back({});
    }
    for (std::size_t i = 0; i < n; ++i) {
        c.subject_ids.push_back("S" + std::to_string(i));
    }
    c.labels = labels;
    c.survival_days = survival.empty() ? std::vector<int>(n, 30) : std::move(survival);
    c.matrix = x;
    c.observed.assign(n * p, 1);
    return c;
}

} // namespace fixtures
