#include "fixtures.hpp"

#include <dynrisk/error.hpp>
#include <dynrisk/ingest.hpp>

#include <doctest.h>

#include <sstream>

using namespace dynrisk;

namespace {

const char *died_line =
    R"({"subject_id":"A","age_years":71,"sex":"male","index_test_date":"2020-06-01",)"
    R"("outcome":{"died":true,"death_date":"2020-06-15","censor_date":"2020-06-15"},)"
    R"("events":[{"code":"J18.9","date":"2020-05-27"}],)"
    R"("vitals":[{"kind":"body_temperature","value":3.5,"date":"2020-06-01"},)"
    R"({"kind":"heart_rate","value":88,"date":"2020-06-10"}]})";

const char *survived_line =
    R"({"subject_id":"B","age_years":55,"sex":"female","index_test_date":"2020-05-01",)"
    R"("outcome":{"died":false,"censor_date":"2020-08-01"}})";

} // namespace

TEST_CASE("death record and positive test are kept") {
    std::istringstream in{std::string{died_line} + "\n" + survived_line + "\n"};
    const auto result = ingest_cohort(in);
    REQUIRE(result.subjects.size() == 2);
    const auto &a = result.subjects[0];
    CHECK(a.outcome.died);
    CHECK(a.survival_days() == 14);
    CHECK(a.sex == Sex::male);
    CHECK(a.events.size() == 1);
    CHECK(result.subjects[1].survival_days() == 92);
}

TEST_CASE("implausible vital dropped and counted") {
    std::istringstream in{std::string{died_line} + "\n" + survived_line + "\n"};
    const auto result = ingest_cohort(in);
    CHECK(result.report.vitals_dropped == 1);
    CHECK(result.subjects[0].vitals.size() == 1);
    CHECK(result.subjects[0].vitals[0].kind == VitalKind::heart_rate);
}

TEST_CASE("empty source") {
    std::istringstream in{""};
    const auto result = ingest_cohort(in);
    CHECK(result.subjects.empty());
    CHECK(result.report.lines_read == 0);
    CHECK(result.report.subjects_kept == 0);
}

TEST_CASE("subjects without test date or outcome are dropped") {
    std::istringstream in{
        R"({"subject_id":"C","age_years":50,"sex":"male","outcome":{"died":false,"censor_date":"2020-08-01"}})"
        "\n"
        R"({"subject_id":"D","age_years":50,"sex":"male","index_test_date":"2020-05-01"})"
        "\n"
        R"({"subject_id":"E","age_years":50,"sex":"male","index_test_date":"2020-05-01",)"
        R"("outcome":{"died":true,"censor_date":"2020-08-01"}})"
        "\n"};
    const auto result = ingest_cohort(in);
    CHECK(result.subjects.empty());
    CHECK(result.report.dropped_missing_test_date == 1);
    CHECK(result.report.dropped_missing_outcome == 2);
}

TEST_CASE("malformed line reports its number") {
    std::istringstream in{std::string{survived_line} + "\n{not json\n"};
    try {
        ingest_cohort(in);
        FAIL("expected ParseError");
    } catch (const ParseError &e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("duplicate subject id") {
    std::istringstream in{std::string{survived_line} + "\n" + survived_line + "\n"};
    CHECK_THROWS_AS(ingest_cohort(in), ConfigError);
}

TEST_CASE("write then ingest round trips") {
    std::istringstream in{std::string{died_line} + "\n" + survived_line + "\n"};
    const auto first = ingest_cohort(in);
    std::stringstream buf;
    write_subjects(buf, first.subjects);
    const auto second = ingest_cohort(buf);
    std::stringstream again;
    write_subjects(again, second.subjects);
    std::stringstream once;
    write_subjects(once, first.subjects);
    CHECK(again.str() == once.str());
}

TEST_CASE("plausibility bounds from json") {
    std::istringstream cfg{R"({"heart_rate":[30,200]})"};
    const auto p = PlausibilityConfig::read_json(cfg);
    CHECK_FALSE(p.plausible({VitalKind::heart_rate, 25.0, Date{}}));
    CHECK(p.plausible({VitalKind::heart_rate, 40.0, Date{}}));
}
