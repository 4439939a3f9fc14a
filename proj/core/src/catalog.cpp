#include "dynrisk/catalog.hpp"

#include "dynrisk/error.hpp"
#include "dynrisk/text.hpp"

#include <algorithm>
#include <set>

namespace dynrisk {

std::string_view to_string(FeatureClass cls) {
    switch (cls) {
    case FeatureClass::acute:
        return "acute";
    case FeatureClass::cancer:
        return "cancer";
    case FeatureClass::chronic:
        return "chronic";
    case FeatureClass::symptom_or_vital:
        return "symptom_or_vital";
    case FeatureClass::baseline:
        return "baseline";
    }
    return "baseline";
}

std::string_view to_string(Encoding encoding) {
    switch (encoding) {
    case Encoding::binary_presence:
        return "binary_presence";
    case Encoding::continuous:
        return "continuous";
    case Encoding::one_hot_category:
        return "one_hot_category";
    }
    return "binary_presence";
}

FeatureClass parse_feature_class(std::string_view text) {
    for (auto cls : {FeatureClass::acute, FeatureClass::cancer, FeatureClass::chronic,
                     FeatureClass::symptom_or_vital, FeatureClass::baseline}) {
        if (to_string(cls) == text) {
            return cls;
        }
    }
    throw ParseError("unknown feature class '" + std::string{text} + "'");
}

Encoding parse_encoding(std::string_view text) {
    for (auto enc : {Encoding::binary_presence, Encoding::continuous, Encoding::one_hot_category}) {
        if (to_string(enc) == text) {
            return enc;
        }
    }
    throw ParseError("unknown encoding '" + std::string{text} + "'");
}

std::optional<std::size_t> TimeWindowRule::window_for(int days_before) const noexcept {
    for (std::size_t i = 0; i < windows.size(); ++i) {
        if (windows[i].contains(days_before)) {
            return i;
        }
    }
    return std::nullopt;
}

const TimeWindowRule &window_rule(FeatureClass cls, bool include_post_test) {
    // 1 month = 30 days, 12 months = 365 days, 60 months = 1825 days.
    static const TimeWindowRule acute{FeatureClass::acute,
                                      {{blackout_days, 30, false}, {30, 365, false}, {365, std::nullopt, false}}};
    static const TimeWindowRule cancer{FeatureClass::cancer,
                                       {{blackout_days, 365, false}, {365, 1825, false}, {1825, std::nullopt, false}}};
    static const TimeWindowRule chronic{FeatureClass::chronic, {{blackout_days, std::nullopt, false}}};
    static const TimeWindowRule symptom{FeatureClass::symptom_or_vital,
                                        {{-symptom_window_days, symptom_window_days, true}}};
    static const TimeWindowRule symptom_pre{FeatureClass::symptom_or_vital, {{0, symptom_window_days, true}}};
    static const TimeWindowRule baseline{FeatureClass::baseline, {}};
    switch (cls) {
    case FeatureClass::acute:
        return acute;
    case FeatureClass::cancer:
        return cancer;
    case FeatureClass::chronic:
        return chronic;
    case FeatureClass::symptom_or_vital:
        return include_post_test ? symptom : symptom_pre;
    case FeatureClass::baseline:
        return baseline;
    }
    return baseline;
}

Matcher Matcher::parse(std::string_view text) {
    text = text::trim(text);
    Matcher m;
    if (const auto at = text.rfind('@'); at != std::string_view::npos) {
        std::vector<std::size_t> kept;
        for (const auto &w : text::split(text.substr(at + 1), '|')) {
            const auto value = text::parse_int(w);
            if (value < 0) {
                throw ParseError("negative window index in matcher '" + std::string{text} + "'");
            }
            kept.push_back(static_cast<std::size_t>(value));
        }
        std::sort(kept.begin(), kept.end());
        kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
        m.kept_windows = std::move(kept);
        text = text.substr(0, at);
    }
    if (text == "age") {
        m.kind = MatcherKind::age;
        return m;
    }
    if (text == "sex") {
        m.kind = MatcherKind::sex;
        return m;
    }
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        throw ParseError("invalid matcher '" + std::string{text} + "'");
    }
    const auto kind = text.substr(0, colon);
    const auto arg = text.substr(colon + 1);
    if (arg.empty()) {
        throw ParseError("empty matcher argument in '" + std::string{text} + "'");
    }
    if (kind == "code") {
        m.kind = MatcherKind::code_prefix;
        for (auto &p : text::split(arg, '|')) {
            if (p.empty()) {
                throw ParseError("empty code prefix in '" + std::string{text} + "'");
            }
            m.prefixes.push_back(std::move(p));
        }
    } else if (kind == "vital") {
        m.kind = MatcherKind::vital;
        m.vital = parse_vital_kind(arg);
    } else if (kind == "baseline") {
        m.kind = MatcherKind::baseline;
        m.key = std::string{arg};
    } else if (kind == "category") {
        m.kind = MatcherKind::category;
        if (const auto plus = arg.find('+'); plus != std::string_view::npos) {
            m.key = std::string{arg.substr(0, plus)};
            m.unknown_level = std::string{arg.substr(plus + 1)};
            if (m.unknown_level->empty() || m.key.empty()) {
                throw ParseError("invalid category matcher '" + std::string{text} + "'");
            }
        } else {
            m.key = std::string{arg};
        }
    } else {
        throw ParseError("unknown matcher kind '" + std::string{kind} + "'");
    }
    return m;
}

std::string Matcher::to_string() const {
    std::string out;
    switch (kind) {
    case MatcherKind::code_prefix:
        out = "code:";
        for (std::size_t i = 0; i < prefixes.size(); ++i) {
            out += (i ? "|" : "") + prefixes[i];
        }
        break;
    case MatcherKind::vital:
        out = "vital:" + std::string{dynrisk::to_string(vital)};
        break;
    case MatcherKind::baseline:
        out = "baseline:" + key;
        break;
    case MatcherKind::category:
        out = "category:" + key + (unknown_level ? "+" + *unknown_level : "");
        break;
    case MatcherKind::age:
        out = "age";
        break;
    case MatcherKind::sex:
        out = "sex";
        break;
    }
    if (kept_windows) {
        out += '@';
        for (std::size_t i = 0; i < kept_windows->size(); ++i) {
            out += (i ? "|" : "") + std::to_string((*kept_windows)[i]);
        }
    }
    return out;
}

bool Matcher::matches_code(std::string_view code) const {
    if (kind != MatcherKind::code_prefix) {
        return false;
    }
    return std::any_of(prefixes.begin(), prefixes.end(),
                       [&](const std::string &p) { return code.starts_with(p); });
}

bool Matcher::keeps_window(std::size_t window) const {
    return !kept_windows || std::binary_search(kept_windows->begin(), kept_windows->end(), window);
}

namespace {

void validate_entry(const CatalogEntry &e) {
    const auto fail = [&](const std::string &why) {
        throw ConfigError("catalog entry '" + e.feature_name + "': " + why);
    };
    if (e.feature_name.empty()) {
        throw ConfigError("catalog entry with empty feature_name");
    }
    if (e.feature_name.find_first_of("@=,\"") != std::string::npos) {
        fail("feature_name must not contain '@', '=', ',' or '\"'");
    }
    switch (e.matcher.kind) {
    case MatcherKind::code_prefix:
        if (e.feature_class == FeatureClass::baseline) {
            fail("code matchers need a time-filtered feature class");
        }
        if (e.encoding != Encoding::binary_presence) {
            fail("code matchers use binary_presence encoding");
        }
        break;
    case MatcherKind::vital:
        if (e.feature_class != FeatureClass::symptom_or_vital || e.encoding != Encoding::continuous) {
            fail("vital matchers are continuous symptom_or_vital features");
        }
        break;
    case MatcherKind::baseline:
    case MatcherKind::age:
        if (e.feature_class != FeatureClass::baseline || e.encoding != Encoding::continuous) {
            fail("baseline/age matchers are continuous baseline features");
        }
        break;
    case MatcherKind::category:
        if (e.feature_class != FeatureClass::baseline || e.encoding != Encoding::one_hot_category) {
            fail("category matchers are one_hot_category baseline features");
        }
        break;
    case MatcherKind::sex:
        if (e.feature_class != FeatureClass::baseline || e.encoding != Encoding::binary_presence) {
            fail("sex matcher is a binary_presence baseline feature");
        }
        break;
    }
    if (e.matcher.kept_windows) {
        const auto &rule = window_rule(e.feature_class);
        if (e.matcher.kind != MatcherKind::code_prefix || rule.windows.size() < 2) {
            fail("window restriction only applies to windowed code features");
        }
        if (e.matcher.kept_windows->empty() || e.matcher.kept_windows->back() >= rule.windows.size()) {
            fail("window restriction out of range");
        }
    }
}

} // namespace

FeatureCatalog::FeatureCatalog(std::vector<CatalogEntry> entries) : entries_{std::move(entries)} {
    std::set<std::string> names;
    std::set<std::string> exclusive_matchers;
    for (const auto &e : entries_) {
        validate_entry(e);
        if (!names.insert(e.feature_name).second) {
            throw ConfigError("duplicate feature_name '" + e.feature_name + "'");
        }
        if (e.matcher.kind != MatcherKind::code_prefix) {
            auto m = e.matcher;
            m.unknown_level.reset();
            if (!exclusive_matchers.insert(m.to_string()).second) {
                throw ConfigError("matcher '" + e.matcher.to_string() + "' declared by more than one entry");
            }
        }
    }
}

std::optional<std::size_t> FeatureCatalog::match_event(std::string_view code) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].matcher.matches_code(code)) {
            return i;
        }
    }
    return std::nullopt;
}

std::optional<std::size_t> FeatureCatalog::match_vital(VitalKind kind) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].matcher.kind == MatcherKind::vital && entries_[i].matcher.vital == kind) {
            return i;
        }
    }
    return std::nullopt;
}

std::optional<std::size_t> FeatureCatalog::find(std::string_view feature_name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].feature_name == feature_name) {
            return i;
        }
    }
    return std::nullopt;
}

FeatureCatalog FeatureCatalog::read_csv(std::istream &in) {
    static const std::vector<std::string> expected{"feature_name", "matcher", "feature_class",
                                                   "group_label", "encoding"};
    std::string line;
    std::size_t line_number = 0;
    bool header_seen = false;
    std::vector<CatalogEntry> entries;
    while (std::getline(in, line)) {
        ++line_number;
        if (text::trim(line).empty() || line.front() == '#') {
            continue;
        }
        auto fields = text::split_csv(line, line_number);
        for (auto &f : fields) {
            f = std::string{text::trim(f)};
        }
        if (!header_seen) {
            if (fields != expected) {
                throw ParseError("catalog header must be feature_name,matcher,feature_class,group_label,encoding",
                                 line_number);
            }
            header_seen = true;
            continue;
        }
        if (fields.size() != expected.size()) {
            throw ParseError("expected 5 columns, found " + std::to_string(fields.size()), line_number);
        }
        try {
            CatalogEntry e;
            e.feature_name = fields[0];
            e.matcher = Matcher::parse(fields[1]);
            e.feature_class = parse_feature_class(fields[2]);
            if (!fields[3].empty()) {
                e.group_label = fields[3];
            }
            e.encoding = parse_encoding(fields[4]);
            entries.push_back(std::move(e));
        } catch (const ParseError &err) {
            throw ParseError(err.what(), line_number);
        }
    }
    if (!header_seen) {
        throw ParseError("empty catalog");
    }
    return FeatureCatalog{std::move(entries)};
}

void FeatureCatalog::write_csv(std::ostream &out) const {
    out << "feature_name,matcher,feature_class,group_label,encoding\n";
    for (const auto &e : entries_) {
        out << text::csv_field(e.feature_name) << ',' << text::csv_field(e.matcher.to_string()) << ','
            << to_string(e.feature_class) << ',' << text::csv_field(e.group_label.value_or("")) << ','
            << to_string(e.encoding) << '\n';
    }
}

std::string windowed_column_name(const CatalogEntry &entry, std::size_t window) {
    if (window_rule(entry.feature_class).windows.size() > 1) {
        return entry.feature_name + "@" + std::to_string(window);
    }
    return entry.feature_name;
}

} // namespace dynrisk
