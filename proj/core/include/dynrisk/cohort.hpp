#pragma once

#include "dynrisk/date.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dynrisk {

enum class Sex { male, female };

enum class EventSource { hospital, primary_care, self_report };

enum class VitalKind {
    systolic_bp,
    diastolic_bp,
    heart_rate,
    body_temperature,
    oxygen_saturation,
    respiratory_rate,
};

inline constexpr std::array<VitalKind, 6> all_vital_kinds{
    VitalKind::systolic_bp,      VitalKind::diastolic_bp,      VitalKind::heart_rate,
    VitalKind::body_temperature, VitalKind::oxygen_saturation, VitalKind::respiratory_rate,
};

std::string_view to_string(Sex sex);
std::string_view to_string(EventSource source);
std::string_view to_string(VitalKind kind);
Sex parse_sex(std::string_view text);
EventSource parse_event_source(std::string_view text);
VitalKind parse_vital_kind(std::string_view text);

struct ClinicalEvent {
    std::string code;
    Date date;
    EventSource source = EventSource::hospital;
};

struct VitalObservation {
    VitalKind kind = VitalKind::heart_rate;
    double value = 0.0;
    Date date;
};

struct Outcome {
    bool died = false;
    std::optional<Date> death_date;
    Date censor_date;
};

/// One participant. Events and vitals are date-sorted once ingested.
struct SubjectRecord {
    std::string subject_id;
    double age_years = 0.0;
    Sex sex = Sex::female;
    std::map<std::string, std::optional<double>> continuous_baseline;
    std::map<std::string, std::optional<std::string>> categorical_baseline;
    std::vector<ClinicalEvent> events;
    std::vector<VitalObservation> vitals;
    Date index_test_date;
    Outcome outcome;

    /// Days from the index test to death (died) or censoring.
    int survival_days() const;
};

} // namespace dynrisk
