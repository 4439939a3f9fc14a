#pragma once

#include "dynrisk/catalog.hpp"

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace dynrisk {

struct RankedFeature {
    std::string feature_name;
    double mean_importance = 0.0;
    std::size_t rank = 0;
    std::vector<std::string> members; ///< non-empty for grouped features
};

/// Features by descending importance; ties ordered by name. `removed`
/// remembers names dropped by a review so that re-applying it is a no-op.
struct RankedFeatureList {
    std::vector<RankedFeature> entries;
    std::vector<std::string> removed;
    bool degenerate = false; ///< every importance is zero

    bool contains(std::string_view name) const;
};

/// Ranks `importances` (aligned with `names`), assigning ranks 1..n.
RankedFeatureList rank_features(const std::vector<std::string> &names, const std::vector<double> &importances);

/// Mean importance across iterations, ranked. Throws DomainError on an
/// empty input or inconsistent dimensions.
RankedFeatureList aggregate_importance(const std::vector<std::vector<double>> &per_iteration,
                                       const std::vector<std::string> &names);

enum class ExclusionReason { not_self_reportable, confounded_with_higher_ranked, database_bias };

std::string_view to_string(ExclusionReason reason);
ExclusionReason parse_exclusion_reason(std::string_view text);

struct Exclusion {
    std::string feature_name;
    ExclusionReason reason = ExclusionReason::not_self_reportable;
};

struct Grouping {
    std::string group_name;
    std::vector<std::string> members;
};

/// Recorded outcome of the clinical review of a ranking.
///
/// JSON file: {"reviewed_on": "...", "screen_top_k": 1000,
///   "exclusions": [{"feature": "...", "reason": "database_bias"}],
///   "groupings": [{"group": "...", "members": ["...", "..."]}]}
struct ReviewConfig {
    std::string reviewed_on; ///< stamped on every audit line
    std::size_t screen_top_k = 1000;
    std::vector<Exclusion> exclusions;
    std::vector<Grouping> groupings;

    static ReviewConfig read_json(std::istream &in);
};

struct AuditLine {
    std::string feature;
    std::string action; ///< "exclude" or "group"
    std::string reason; ///< reason code, or the '+'-joined members of a group
    std::string timestamp;
};

struct ReviewOutcome {
    RankedFeatureList shortlist;
    std::vector<AuditLine> audit;
};

/// Truncates to the top-k ungrouped features, removes exclusions, merges groups (importance =
/// sum of members) and re-ranks. Throws ConfigError for names unknown to
/// the ranking.
ReviewOutcome apply_review(const RankedFeatureList &ranking, const ReviewConfig &config);

/// Catalog encoding only the shortlisted features. Windowed columns
/// (`name@w`) keep their windows; groups become one entry whose matcher is
/// the union of the member matchers. Throws ConfigError for names that
/// cannot be resolved or groups mixing incompatible members.
FeatureCatalog rebuild_catalog(const RankedFeatureList &shortlist, const FeatureCatalog &original);

/// CSV rank,feature,mean_importance,members.
void write_ranking_csv(std::ostream &out, const RankedFeatureList &ranking);
RankedFeatureList read_ranking_csv(std::istream &in);

/// Tab-separated feature, action, reason, timestamp.
void write_audit_log(std::ostream &out, const std::vector<AuditLine> &audit);

} // namespace dynrisk
