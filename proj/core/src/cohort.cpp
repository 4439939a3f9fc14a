#include "dynrisk/cohort.hpp"

#include "dynrisk/error.hpp"

namespace dynrisk {

std::string_view to_string(Sex sex) { return sex == Sex::male ? "male" : "female"; }

std::string_view to_string(EventSource source) {
    switch (source) {
    case EventSource::hospital:
        return "hospital";
    case EventSource::primary_care:
        return "primary_care";
    case EventSource::self_report:
        return "self_report";
    }
    return "hospital";
}

std::string_view to_string(VitalKind kind) {
    switch (kind) {
    case VitalKind::systolic_bp:
        return "systolic_bp";
    case VitalKind::diastolic_bp:
        return "diastolic_bp";
    case VitalKind::heart_rate:
        return "heart_rate";
    case VitalKind::body_temperature:
        return "body_temperature";
    case VitalKind::oxygen_saturation:
        return "oxygen_saturation";
    case VitalKind::respiratory_rate:
        return "respiratory_rate";
    }
    return "heart_rate";
}

Sex parse_sex(std::string_view text) {
    if (text == "male") {
        return Sex::male;
    }
    if (text == "female") {
        return Sex::female;
    }
    throw ParseError("unknown sex '" + std::string{text} + "'");
}

EventSource parse_event_source(std::string_view text) {
    for (auto source : {EventSource::hospital, EventSource::primary_care, EventSource::self_report}) {
        if (to_string(source) == text) {
            return source;
        }
    }
    throw ParseError("unknown event source '" + std::string{text} + "'");
}

VitalKind parse_vital_kind(std::string_view text) {
    for (auto kind : all_vital_kinds) {
        if (to_string(kind) == text) {
            return kind;
        }
    }
    throw ParseError("unknown vital kind '" + std::string{text} + "'");
}

int SubjectRecord::survival_days() const {
    if (outcome.died && outcome.death_date) {
        return *outcome.death_date - index_test_date;
    }
    return outcome.censor_date - index_test_date;
}

} // namespace dynrisk
