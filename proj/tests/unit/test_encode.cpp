#include "fixtures.hpp"

#include <dynrisk/encode.hpp>
#include <dynrisk/error.hpp>

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace dynrisk;
using fixtures::d;
using fixtures::entry;

namespace {

std::vector<SubjectRecord> bmi_subjects() {
    std::vector<SubjectRecord> out;
    const std::optional<double> bmi[] = {25.0, 30.0, std::nullopt, 35.0};
    for (int i = 0; i < 4; ++i) {
        auto s = fixtures::subject("S" + std::to_string(i), "2020-06-01", i % 2 == 0, 14);
        s.continuous_baseline["bmi"] = bmi[i];
        out.push_back(std::move(s));
    }
    return out;
}

FeatureCatalog mixed_catalog() {
    return FeatureCatalog{{entry("age", "age", FeatureClass::baseline, Encoding::continuous),
                           entry("sex", "sex", FeatureClass::baseline),
                           entry("bmi", "baseline:bmi", FeatureClass::baseline, Encoding::continuous),
                           entry("aki", "code:N17", FeatureClass::acute),
                           entry("diabetes", "code:E11", FeatureClass::chronic),
                           entry("heart_rate", "vital:heart_rate", FeatureClass::symptom_or_vital,
                                 Encoding::continuous),
                           entry("smoking", "category:smoking+Unknown", FeatureClass::baseline,
                                 Encoding::one_hot_category)}};
}

std::vector<SubjectRecord> random_subjects(std::uint64_t seed, int n) {
    std::mt19937_64 rng{seed};
    std::uniform_int_distribution<int> days{-20, 900};
    std::bernoulli_distribution coin{0.5};
    const char *levels[] = {"Never", "Former", "Current"};
    std::vector<SubjectRecord> out;
    for (int i = 0; i < n; ++i) {
        auto s = fixtures::subject("S" + std::to_string(i), "2020-06-01", i % 3 == 0, 20 + i % 50);
        s.age_years = 40 + i % 40;
        s.sex = coin(rng) ? Sex::male : Sex::female;
        if (coin(rng)) {
            s.continuous_baseline["bmi"] = 20.0 + (i % 17);
        }
        if (coin(rng)) {
            s.categorical_baseline["smoking"] = levels[i % 3];
        }
        for (int k = 0; k < 3; ++k) {
            s.events.push_back({coin(rng) ? "N17.0" : "E11.9", d("2020-06-01") - days(rng), EventSource::hospital});
        }
        s.vitals.push_back({VitalKind::heart_rate, 60.0 + i % 40, d("2020-06-01") - days(rng) % 15});
        std::sort(s.events.begin(), s.events.end(), [](auto &a, auto &b) { return a.date < b.date; });
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace

TEST_CASE("missing continuous value imputed with the observed mean") {
    const FeatureCatalog cat{{entry("bmi", "baseline:bmi", FeatureClass::baseline, Encoding::continuous)}};
    const auto cohort = encode_cohort(bmi_subjects(), cat);
    const auto col = cohort.column_index("bmi");
    CHECK(cohort.at(2, col) == doctest::Approx(30.0).epsilon(1e-15));
    CHECK_FALSE(cohort.observed[2 * cohort.n_features() + col]);
    CHECK(cohort.column_stats[col].observed_count == 3);
}

TEST_CASE("survival days and absence encoding") {
    const auto subjects = bmi_subjects();
    const auto cohort = encode_cohort(subjects, mixed_catalog());
    CHECK(cohort.survival_days[0] == 14);
    for (const auto &name : cohort.feature_names) {
        if (name.starts_with("aki") || name.starts_with("diabetes")) {
            for (std::size_t r = 0; r < cohort.n_rows(); ++r) {
                CHECK(cohort.at(r, cohort.column_index(name)) == 0.0);
            }
        }
    }
    CHECK(cohort.column_index("aki@0") < cohort.n_features());
    CHECK(cohort.column_index("diabetes") < cohort.n_features());
    CHECK_THROWS_AS(cohort.column_index("aki"), ConfigError);
}

TEST_CASE("domain errors") {
    auto one = bmi_subjects();
    one.resize(1);
    CHECK_THROWS_AS(encode_cohort(one, mixed_catalog()), DomainError);
    auto same = bmi_subjects();
    for (auto &s : same) {
        s.outcome.died = false;
        s.outcome.death_date.reset();
    }
    CHECK_THROWS_AS(encode_cohort(same, mixed_catalog()), DomainError);
    auto early = bmi_subjects();
    early[0].outcome.death_date = early[0].index_test_date - 1;
    CHECK_THROWS_AS(encode_cohort(early, mixed_catalog()), DomainError);
}

TEST_CASE("most recent qualifying event sets the window") {
    auto subjects = bmi_subjects();
    subjects[1].events = {{"N17", d("2019-01-01"), EventSource::hospital},
                          {"N17", d("2020-05-20"), EventSource::hospital},
                          {"N17", d("2020-05-30"), EventSource::hospital}}; // last one is in the blackout
    const auto cohort = encode_cohort(subjects, mixed_catalog());
    CHECK(cohort.at(1, cohort.column_index("aki@0")) == 1.0);
    CHECK(cohort.at(1, cohort.column_index("aki@1")) == 0.0);
    CHECK(cohort.at(1, cohort.column_index("aki@2")) == 0.0);
}

TEST_CASE("property: one-hot groups sum to at most one and encoding is deterministic") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto subjects = random_subjects(seed, 60);
        const auto a = encode_cohort(subjects, mixed_catalog());
        const auto b = encode_cohort(subjects, mixed_catalog());
        CHECK(a.matrix == b.matrix);
        CHECK(a.feature_names == b.feature_names);
        for (std::size_t r = 0; r < a.n_rows(); ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < a.n_features(); ++c) {
                if (a.feature_names[c].starts_with("smoking=")) {
                    sum += a.at(r, c);
                }
            }
            CHECK((sum == 0.0 || sum == 1.0));
        }
    }
}

TEST_CASE("property: blackout events never change non-symptom columns") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto subjects = random_subjects(seed, 40);
        const auto base = encode_cohort(subjects, mixed_catalog());
        std::mt19937_64 rng{seed};
        std::uniform_int_distribution<int> off{0, 6};
        for (auto &s : subjects) {
            s.events.push_back({"N17.1", s.index_test_date - off(rng), EventSource::hospital});
            s.events.push_back({"E11.2", s.index_test_date - off(rng), EventSource::hospital});
            std::stable_sort(s.events.begin(), s.events.end(), [](auto &a, auto &b) { return a.date < b.date; });
        }
        const auto noisy = encode_cohort(subjects, mixed_catalog());
        CHECK(noisy.matrix == base.matrix);
    }
}

TEST_CASE("property: complete cohort is unchanged by imputation") {
    auto subjects = bmi_subjects();
    subjects[2].continuous_baseline["bmi"] = 27.0;
    const FeatureCatalog cat{{entry("bmi", "baseline:bmi", FeatureClass::baseline, Encoding::continuous)}};
    const auto cohort = encode_cohort(subjects, cat);
    const double raw[] = {25.0, 30.0, 27.0, 35.0};
    for (std::size_t r = 0; r < 4; ++r) {
        CHECK(cohort.at(r, 0) == raw[r]);
    }
    std::vector<std::size_t> rows{0, 1};
    CHECK(impute_from_rows(cohort, rows) == cohort.matrix);
}

TEST_CASE("fold imputation uses only the given rows") {
    const FeatureCatalog cat{{entry("bmi", "baseline:bmi", FeatureClass::baseline, Encoding::continuous)}};
    const auto cohort = encode_cohort(bmi_subjects(), cat);
    std::vector<std::size_t> rows{0, 1, 2};
    const auto m = impute_from_rows(cohort, rows);
    CHECK(m[2] == doctest::Approx(27.5));
    CHECK(m[0] == 25.0);
}

TEST_CASE("zscore normalization") {
    const auto subjects = random_subjects(4, 50);
    EncodeOptions opt;
    opt.normalization = Normalization::zscore;
    const auto z = encode_cohort(subjects, mixed_catalog(), opt);
    const auto c = z.column_index("age");
    double sum = 0.0, ss = 0.0;
    for (std::size_t r = 0; r < z.n_rows(); ++r) {
        sum += z.at(r, c);
        ss += z.at(r, c) * z.at(r, c);
    }
    CHECK(sum == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(ss / static_cast<double>(z.n_rows() - 1) == doctest::Approx(1.0));
    CHECK(z.at(0, z.column_index("sex")) * (1 - z.at(0, z.column_index("sex"))) == 0.0);
}

TEST_CASE("cohort csv round trip and column subsets") {
    const auto cohort = encode_cohort(random_subjects(9, 30), mixed_catalog());
    std::stringstream buf;
    write_cohort_csv(buf, cohort);
    const auto back = read_cohort_csv(buf);
    CHECK(back.feature_names == cohort.feature_names);
    CHECK(back.matrix == cohort.matrix);
    CHECK(back.labels == cohort.labels);
    CHECK(back.survival_days == cohort.survival_days);
    CHECK(back.subject_ids == cohort.subject_ids);
    const auto dropped = drop_columns(cohort, {"age"});
    CHECK(dropped.n_features() == cohort.n_features() - 1);
    CHECK_THROWS_AS(drop_columns(cohort, {"no_such"}), ConfigError);
    const auto sel = select_columns(cohort, {"sex", "age"});
    REQUIRE(sel.n_features() == 2);
    CHECK(sel.at(3, 1) == cohort.at(3, cohort.column_index("age")));
}
