#include "dynrisk/ingest.hpp"

#include "dynrisk/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>
#include <string>

namespace dynrisk {

using nlohmann::json;

std::map<VitalKind, std::pair<double, double>> PlausibilityConfig::default_bounds() {
    return {
        {VitalKind::systolic_bp, {50.0, 300.0}},      {VitalKind::diastolic_bp, {20.0, 200.0}},
        {VitalKind::heart_rate, {20.0, 250.0}},       {VitalKind::body_temperature, {30.0, 45.0}},
        {VitalKind::oxygen_saturation, {50.0, 100.0}}, {VitalKind::respiratory_rate, {4.0, 80.0}},
    };
}

PlausibilityConfig PlausibilityConfig::read_json(std::istream &in) {
    PlausibilityConfig config;
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception &e) {
        throw ParseError(std::string{"plausibility config: "} + e.what());
    }
    if (!doc.is_object()) {
        throw ParseError("plausibility config must be a JSON object");
    }
    for (const auto &[name, range] : doc.items()) {
        if (!range.is_array() || range.size() != 2 || !range[0].is_number() || !range[1].is_number()) {
            throw ParseError("plausibility bounds for '" + name + "' must be [low, high]");
        }
        const double lo = range[0].get<double>();
        const double hi = range[1].get<double>();
        if (!(lo <= hi)) {
            throw ConfigError("plausibility bounds for '" + name + "' have low > high");
        }
        config.bounds[parse_vital_kind(name)] = {lo, hi};
    }
    return config;
}

bool PlausibilityConfig::plausible(const VitalObservation &v) const {
    const auto it = bounds.find(v.kind);
    if (it == bounds.end()) {
        return true;
    }
    return v.value >= it->second.first && v.value <= it->second.second;
}

namespace {

const std::set<std::string> &known_subject_fields() {
    static const std::set<std::string> fields{"subject_id",   "age_years",        "sex",
                                              "continuous_baseline", "categorical_baseline",
                                              "events",       "vitals",           "index_test_date",
                                              "outcome"};
    return fields;
}

template <typename T>
T field_as(const json &obj, const char *name) {
    const auto it = obj.find(name);
    if (it == obj.end() || it->is_null()) {
        throw ParseError(std::string{"missing field '"} + name + "'");
    }
    try {
        return it->get<T>();
    } catch (const json::exception &) {
        throw ParseError(std::string{"field '"} + name + "' has the wrong type");
    }
}

bool absent(const json &obj, const char *name) {
    const auto it = obj.find(name);
    return it == obj.end() || it->is_null();
}

/// Parses one line; returns nullopt when the subject must be dropped.
std::optional<SubjectRecord> parse_subject(const json &obj, const PlausibilityConfig &plausibility,
                                           IngestReport &report) {
    if (!obj.is_object()) {
        throw ParseError("subject record must be a JSON object");
    }
    for (const auto &item : obj.items()) {
        if (!known_subject_fields().contains(item.key())) {
            ++report.unknown_fields;
        }
    }
    SubjectRecord s;
    s.subject_id = field_as<std::string>(obj, "subject_id");
    if (s.subject_id.empty()) {
        throw ParseError("empty subject_id");
    }
    s.age_years = field_as<double>(obj, "age_years");
    s.sex = parse_sex(field_as<std::string>(obj, "sex"));

    if (!absent(obj, "continuous_baseline")) {
        const auto &cb = obj.at("continuous_baseline");
        if (!cb.is_object()) {
            throw ParseError("continuous_baseline must be an object");
        }
        for (const auto &[name, value] : cb.items()) {
            if (value.is_null()) {
                s.continuous_baseline[name] = std::nullopt;
            } else if (value.is_number()) {
                s.continuous_baseline[name] = value.get<double>();
            } else {
                throw ParseError("continuous_baseline '" + name + "' must be a number or null");
            }
        }
    }
    if (!absent(obj, "categorical_baseline")) {
        const auto &cb = obj.at("categorical_baseline");
        if (!cb.is_object()) {
            throw ParseError("categorical_baseline must be an object");
        }
        for (const auto &[name, value] : cb.items()) {
            if (value.is_null()) {
                s.categorical_baseline[name] = std::nullopt;
            } else if (value.is_string()) {
                s.categorical_baseline[name] = value.get<std::string>();
            } else {
                throw ParseError("categorical_baseline '" + name + "' must be a string or null");
            }
        }
    }

    // Outcome and index date are parsed before events so that the
    // records-end check has a reference date.
    std::optional<Date> test_date;
    if (!absent(obj, "index_test_date")) {
        test_date = Date::parse(field_as<std::string>(obj, "index_test_date"));
    }
    std::optional<Outcome> outcome;
    if (!absent(obj, "outcome")) {
        const auto &o = obj.at("outcome");
        if (!o.is_object()) {
            throw ParseError("outcome must be an object");
        }
        if (!absent(o, "died") && !absent(o, "censor_date")) {
            Outcome parsed;
            parsed.died = field_as<bool>(o, "died");
            parsed.censor_date = Date::parse(field_as<std::string>(o, "censor_date"));
            if (!absent(o, "death_date")) {
                parsed.death_date = Date::parse(field_as<std::string>(o, "death_date"));
            }
            if (parsed.died == parsed.death_date.has_value()) {
                outcome = parsed;
            }
        }
    }

        if (!absent(obj, "events")) {
        const auto &events = obj.at("events");
        if (!events.is_array()) {
            throw ParseError("events must be an array");
        }
        for (const auto &e : events) {
            ClinicalEvent ev;
            ev.code = field_as<std::string>(e, "code");
            ev.date = Date::parse(field_as<std::string>(e, "date"));
            ev.source = absent(e, "source") ? EventSource::hospital
                                            : parse_event_source(field_as<std::string>(e, "source"));
            if (ev.code.empty() || (outcome && ev.date > outcome->censor_date)) {
                ++report.events_dropped;
                continue;
            }
            s.events.push_back(std::move(ev));
        }
    }
    if (!absent(obj, "vitals")) {
        const auto &vitals = obj.at("vitals");
        if (!vitals.is_array()) {
            throw ParseError("vitals must be an array");
        }
        for (const auto &v : vitals) {
            VitalObservation ob;
            ob.kind = parse_vital_kind(field_as<std::string>(v, "kind"));
            ob.value = field_as<double>(v, "value");
            ob.date = Date::parse(field_as<std::string>(v, "date"));
            if (!plausibility.plausible(ob)) {
                ++report.vitals_dropped;
                continue;
            }
            s.vitals.push_back(ob);
        }
    }

    if (!test_date) {
        ++report.dropped_missing_test_date;
        return std::nullopt;
    }
    if (!outcome) {
        ++report.dropped_missing_outcome;
        return std::nullopt;
    }
    if (!(s.age_years >= 18.0 && s.age_years <= 120.0)) {
        ++report.dropped_implausible_age;
        return std::nullopt;
    }
    s.index_test_date = *test_date;
    s.outcome = *outcome;
    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const auto &a, const auto &b) { return a.date < b.date; });
    std::stable_sort(s.vitals.begin(), s.vitals.end(),
                     [](const auto &a, const auto &b) { return a.date < b.date; });
    return s;
}

} // namespace

IngestResult ingest_cohort(std::istream &source, const PlausibilityConfig &plausibility) {
    IngestResult result;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(source, line)) {
        ++line_number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        ++result.report.lines_read;
        std::optional<SubjectRecord> subject;
        try {
            subject = parse_subject(json::parse(line), plausibility, result.report);
        } catch (const json::exception &e) {
            throw ParseError(std::string{"malformed subject record: "} + e.what(), line_number);
        } catch (const ParseError &e) {
            throw ParseError(e.what(), line_number);
        }
        if (!subject) {
            continue;
        }
        if (!seen.insert(subject->subject_id).second) {
            throw ConfigError("line " + std::to_string(line_number) + ": duplicate subject_id '" +
                              subject->subject_id + "'");
        }
        result.subjects.push_back(std::move(*subject));
    }
    result.report.subjects_kept = result.subjects.size();
    return result;
}

void write_subjects(std::ostream &out, const std::vector<SubjectRecord> &subjects) {
    for (const auto &s : subjects) {
        json obj;
        obj["subject_id"] = s.subject_id;
        obj["age_years"] = s.age_years;
        obj["sex"] = std::string{to_string(s.sex)};
        json cont = json::object();
        for (const auto &[name, value] : s.continuous_baseline) {
            cont[name] = value ? json(*value) : json(nullptr);
        }
        obj["continuous_baseline"] = std::move(cont);
        json cat = json::object();
        for (const auto &[name, value] : s.categorical_baseline) {
            cat[name] = value ? json(*value) : json(nullptr);
        }
        obj["categorical_baseline"] = std::move(cat);
        json events = json::array();
        for (const auto &e : s.events) {
            events.push_back({{"code", e.code}, {"date", e.date.to_string()}, {"source", std::string{to_string(e.source)}}});
        }
        obj["events"] = std::move(events);
        json vitals = json::array();
        for (const auto &v : s.vitals) {
            vitals.push_back({{"kind", std::string{to_string(v.kind)}}, {"value", v.value}, {"date", v.date.to_string()}});
        }
        obj["vitals"] = std::move(vitals);
        obj["index_test_date"] = s.index_test_date.to_string();
        json outcome{{"died", s.outcome.died}, {"censor_date", s.outcome.censor_date.to_string()}};
        if (s.outcome.death_date) {
            outcome["death_date"] = s.outcome.death_date->to_string();
        }
        obj["outcome"] = std::move(outcome);
        out << obj.dump() << '\n';
    }
}

} // namespace dynrisk
