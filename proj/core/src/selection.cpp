#include "dynrisk/selection.hpp"

#include "dynrisk/error.hpp"
#include "dynrisk/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <set>

namespace dynrisk {

bool RankedFeatureList::contains(std::string_view name) const {
    return std::any_of(entries.begin(), entries.end(), [&](const auto &e) { return e.feature_name == name; });
}

namespace {

void rerank(RankedFeatureList &list) {
    std::stable_sort(list.entries.begin(), list.entries.end(), [](const RankedFeature &a, const RankedFeature &b) {
        if (a.mean_importance != b.mean_importance) {
            return a.mean_importance > b.mean_importance;
        }
        return a.feature_name < b.feature_name;
    });
    list.degenerate = std::all_of(list.entries.begin(), list.entries.end(),
                                  [](const auto &e) { return e.mean_importance == 0.0; });
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
        list.entries[i].rank = i + 1;
    }
}

} // namespace

RankedFeatureList rank_features(const std::vector<std::string> &names, const std::vector<double> &importances) {
    if (names.size() != importances.size()) {
        throw DomainError("feature names and importances differ in length");
    }
    RankedFeatureList list;
    for (std::size_t j = 0; j < names.size(); ++j) {
        list.entries.push_back({names[j], importances[j], 0, {}});
    }
    rerank(list);
    return list;
}

RankedFeatureList aggregate_importance(const std::vector<std::vector<double>> &per_iteration,
                                       const std::vector<std::string> &names) {
    if (per_iteration.empty()) {
        throw DomainError("importance aggregation needs at least one iteration");
    }
    std::vector<double> mean(names.size(), 0.0);
    for (const auto &imp : per_iteration) {
        if (imp.size() != names.size()) {
            throw DomainError("importance vector has " + std::to_string(imp.size()) + " values, expected " +
                              std::to_string(names.size()));
        }
        for (std::size_t j = 0; j < imp.size(); ++j) {
            mean[j] += imp[j];
        }
    }
    for (auto &v : mean) {
        v /= static_cast<double>(per_iteration.size());
    }
    return rank_features(names, mean);
}

std::string_view to_string(ExclusionReason reason) {
    switch (reason) {
    case ExclusionReason::not_self_reportable:
        return "not_self_reportable";
    case ExclusionReason::confounded_with_higher_ranked:
        return "confounded_with_higher_ranked";
    case ExclusionReason::database_bias:
        return "database_bias";
    }
    return "not_self_reportable";
}

ExclusionReason parse_exclusion_reason(std::string_view text) {
    for (auto r : {ExclusionReason::not_self_reportable, ExclusionReason::confounded_with_higher_ranked,
                   ExclusionReason::database_bias}) {
        if (to_string(r) == text) {
            return r;
        }
    }
    throw ConfigError("unknown exclusion reason '" + std::string{text} + "'");
}

ReviewConfig ReviewConfig::read_json(std::istream &in) {
    using nlohmann::json;
    try {
        const auto doc = json::parse(in);
        ReviewConfig config;
        config.reviewed_on = doc.value("reviewed_on", std::string{});
        config.screen_top_k = doc.value("screen_top_k", std::size_t{1000});
        for (const auto &e : doc.value("exclusions", json::array())) {
            config.exclusions.push_back(
                {e.at("feature").get<std::string>(), parse_exclusion_reason(e.at("reason").get<std::string>())});
        }
        for (const auto &g : doc.value("groupings", json::array())) {
            Grouping grouping{g.at("group").get<std::string>(), g.at("members").get<std::vector<std::string>>()};
            if (grouping.members.empty()) {
                throw ConfigError("group '" + grouping.group_name + "' has no members");
            }
            config.groupings.push_back(std::move(grouping));
        }
        if (config.screen_top_k == 0) {
            throw ConfigError("screen_top_k must be positive");
        }
        return config;
    } catch (const json::exception &e) {
        throw ParseError(std::string{"review config: "} + e.what());
    }
}

ReviewOutcome apply_review(const RankedFeatureList &ranking, const ReviewConfig &config) {
    const auto known = [&](const std::string &name) {
        return ranking.contains(name) ||
               std::find(ranking.removed.begin(), ranking.removed.end(), name) != ranking.removed.end();
    };
    for (const auto &e : config.exclusions) {
        if (!known(e.feature_name)) {
            throw ConfigError("review excludes unknown feature '" + e.feature_name + "'");
        }
    }
    for (const auto &g : config.groupings) {
        for (const auto &m : g.members) {
            if (!known(m)) {
                throw ConfigError("group '" + g.group_name + "' has unknown member '" + m + "'");
            }
        }
    }

    std::map<std::string, double> importance_of;
    for (const auto &e : ranking.entries) {
        importance_of[e.feature_name] = e.mean_importance;
    }

    ReviewOutcome out;
    auto &list = out.shortlist;
    list.removed = ranking.removed;
    // groups from an earlier review are kept; the top-k counts plain features
    std::size_t plain = 0;
    for (const auto &e : ranking.entries) {
        if (!e.members.empty() || plain++ < config.screen_top_k) {
            list.entries.push_back(e);
        } else {
            list.removed.push_back(e.feature_name);
        }
    }

    std::set<std::string> excluded;
    for (const auto &e : config.exclusions) {
        excluded.insert(e.feature_name);
        const auto it = std::find_if(list.entries.begin(), list.entries.end(),
                                     [&](const auto &f) { return f.feature_name == e.feature_name; });
        if (it == list.entries.end()) {
            continue;
        }
        list.entries.erase(it);
        list.removed.push_back(e.feature_name);
        out.audit.push_back({e.feature_name, "exclude", std::string{to_string(e.reason)}, config.reviewed_on});
    }

    for (const auto &g : config.groupings) {
        if (list.contains(g.group_name)) {
            continue;
        }
        if (importance_of.contains(g.group_name) && !std::count(g.members.begin(), g.members.end(), g.group_name)) {
            throw ConfigError("group name '" + g.group_name + "' collides with a ranked feature");
        }
        RankedFeature group{g.group_name, 0.0, 0, {}};
        std::string joined;
        for (const auto &m : g.members) {
            if (excluded.contains(m)) {
                continue;
            }
            if (const auto it = importance_of.find(m); it != importance_of.end()) {
                group.mean_importance += it->second;
            }
            group.members.push_back(m);
            joined += (joined.empty() ? "" : "+") + m;
            const auto pos = std::find_if(list.entries.begin(), list.entries.end(),
                                          [&](const auto &f) { return f.feature_name == m; });
            if (pos != list.entries.end()) {
                list.entries.erase(pos);
                list.removed.push_back(m);
            }
        }
        if (group.members.empty()) {
            continue;
        }
        list.entries.push_back(std::move(group));
        out.audit.push_back({g.group_name, "group", joined, config.reviewed_on});
    }
    std::sort(list.removed.begin(), list.removed.end());
    list.removed.erase(std::unique(list.removed.begin(), list.removed.end()), list.removed.end());
    rerank(list);
    return out;
}

namespace {

struct ResolvedColumn {
    std::size_t entry = 0;
    std::optional<std::size_t> window; ///< empty = all windows of the entry
};

ResolvedColumn resolve_column(const std::string &name, const FeatureCatalog &catalog) {
    if (const auto idx = catalog.find(name)) {
        return {*idx, std::nullopt};
    }
    if (const auto at = name.rfind('@'); at != std::string::npos) {
        if (const auto idx = catalog.find(name.substr(0, at))) {
            const auto &entry = catalog.entries()[*idx];
            const auto &rule = window_rule(entry.feature_class);
            long long w = -1;
            try {
                w = text::parse_int(name.substr(at + 1));
            } catch (const ParseError &) {
            }
            if (entry.matcher.kind == MatcherKind::code_prefix && rule.windows.size() > 1 && w >= 0 &&
                static_cast<std::size_t>(w) < rule.windows.size()) {
                return {*idx, static_cast<std::size_t>(w)};
            }
        }
    }
    if (const auto eq = name.find('='); eq != std::string::npos) {
        if (const auto idx = catalog.find(name.substr(0, eq))) {
            if (catalog.entries()[*idx].matcher.kind == MatcherKind::category) {
                return {*idx, std::nullopt};
            }
        }
    }
    throw ConfigError("shortlisted feature '" + name + "' does not resolve to a catalog entry");
}

/// Windows to keep for an entry; empty optional = all.
using WindowSet = std::optional<std::set<std::size_t>>;

void merge_window(WindowSet &set, bool &initialised, std::optional<std::size_t> window) {
    if (!initialised) {
        initialised = true;
        set = window ? WindowSet{std::set<std::size_t>{*window}} : WindowSet{};
        return;
    }
    if (!set) {
        return;
    }
    if (!window) {
        set.reset();
        return;
    }
    set->insert(*window);
}

Matcher restrict_windows(Matcher matcher, const WindowSet &windows, std::size_t n_windows) {
    if (!windows || windows->size() == n_windows) {
        matcher.kept_windows.reset();
    } else {
        matcher.kept_windows = std::vector<std::size_t>(windows->begin(), windows->end());
    }
    return matcher;
}

} // namespace

FeatureCatalog rebuild_catalog(const RankedFeatureList &shortlist, const FeatureCatalog &original) {
    std::map<std::size_t, std::pair<WindowSet, bool>> plain;
    std::vector<CatalogEntry> groups;
    for (const auto &f : shortlist.entries) {
        if (f.members.empty()) {
            const auto col = resolve_column(f.feature_name, original);
            auto &[set, init] = plain[col.entry];
            merge_window(set, init, col.window);
            continue;
        }
        CatalogEntry group;
        group.feature_name = f.feature_name;
        group.group_label = f.feature_name;
        group.encoding = Encoding::binary_presence;
        group.matcher.kind = MatcherKind::code_prefix;
        WindowSet windows;
        bool init = false;
        for (std::size_t k = 0; k < f.members.size(); ++k) {
            const auto col = resolve_column(f.members[k], original);
            const auto &member = original.entries()[col.entry];
            if (member.matcher.kind != MatcherKind::code_prefix) {
                throw ConfigError("group '" + f.feature_name + "' member '" + f.members[k] +
                                  "' is not a diagnosis-code feature");
            }
            if (k == 0) {
                group.feature_class = member.feature_class;
            } else if (member.feature_class != group.feature_class) {
                throw ConfigError("group '" + f.feature_name + "' mixes feature classes");
            }
            for (const auto &p : member.matcher.prefixes) {
                if (std::find(group.matcher.prefixes.begin(), group.matcher.prefixes.end(), p) ==
                    group.matcher.prefixes.end()) {
                    group.matcher.prefixes.push_back(p);
                }
            }
            merge_window(windows, init, col.window);
        }
        group.matcher = restrict_windows(group.matcher, windows, window_rule(group.feature_class).windows.size());
        groups.push_back(std::move(group));
    }
    std::vector<CatalogEntry> entries;
    for (const auto &[index, windows] : plain) {
        auto entry = original.entries()[index];
        if (entry.matcher.kind == MatcherKind::code_prefix) {
            entry.matcher =
                restrict_windows(entry.matcher, windows.first, window_rule(entry.feature_class).windows.size());
        }
        entries.push_back(std::move(entry));
    }
    for (auto &g : groups) {
        entries.push_back(std::move(g));
    }
    return FeatureCatalog{std::move(entries)};
}

void write_ranking_csv(std::ostream &out, const RankedFeatureList &ranking) {
    out << "rank,feature,mean_importance,members\n";
    for (const auto &e : ranking.entries) {
        std::string members;
        for (const auto &m : e.members) {
            members += (members.empty() ? "" : "|") + m;
        }
        out << e.rank << ',' << text::csv_field(e.feature_name) << ',' << text::format_double(e.mean_importance)
            << ',' << text::csv_field(members) << '\n';
    }
}

RankedFeatureList read_ranking_csv(std::istream &in) {
    std::string line;
    std::size_t line_number = 0;
    bool header = false;
    RankedFeatureList list;
    while (std::getline(in, line)) {
        ++line_number;
        if (text::trim(line).empty()) {
            continue;
        }
        const auto fields = text::split_csv(line, line_number);
        if (!header) {
            if (fields.size() < 3 || fields[0] != "rank" || fields[1] != "feature" || fields[2] != "mean_importance") {
                throw ParseError("ranking header must start with rank,feature,mean_importance", line_number);
            }
            header = true;
            continue;
        }
        if (fields.size() < 3) {
            throw ParseError("ranking row needs rank,feature,mean_importance", line_number);
        }
        RankedFeature f;
        f.feature_name = fields[1];
        f.mean_importance = text::parse_double(fields[2], line_number);
        if (fields.size() > 3 && !fields[3].empty()) {
            f.members = text::split(fields[3], '|');
        }
        list.entries.push_back(std::move(f));
    }
    rerank(list);
    return list;
}

void write_audit_log(std::ostream &out, const std::vector<AuditLine> &audit) {
    for (const auto &a : audit) {
        out << a.feature << '\t' << a.action << '\t' << a.reason << '\t' << a.timestamp << '\n';
    }
}

} // namespace dynrisk
