#pragma once

#include "dynrisk/cohort.hpp"

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace dynrisk {

/// Time-filtering class of a feature. `baseline` covers demographics and
/// assessment-centre measurements, which are never time filtered.
enum class FeatureClass { acute, cancer, chronic, symptom_or_vital, baseline };

enum class Encoding { binary_presence, continuous, one_hot_category };

std::string_view to_string(FeatureClass cls);
std::string_view to_string(Encoding encoding);
FeatureClass parse_feature_class(std::string_view text);
Encoding parse_encoding(std::string_view text);

/// Interval of days-before-test (test date minus record date). Negative
/// values are records dated after the test.
struct DayWindow {
    int lower = 0;
    std::optional<int> upper; ///< empty = unbounded
    bool upper_closed = false;

    bool contains(int days_before) const noexcept {
        if (days_before < lower) {
            return false;
        }
        if (!upper) {
            return true;
        }
        return upper_closed ? days_before <= *upper : days_before < *upper;
    }
};

struct TimeWindowRule {
    FeatureClass feature_class = FeatureClass::chronic;
    std::vector<DayWindow> windows;

    /// Index of the window containing `days_before`, if any.
    std::optional<std::size_t> window_for(int days_before) const noexcept;
};

inline constexpr int blackout_days = 7;
inline constexpr int symptom_window_days = 14;

/// Window rule for a feature class. With `include_post_test` false the
/// symptom/vital window is truncated to [0, 14] days before the test.
const TimeWindowRule &window_rule(FeatureClass cls, bool include_post_test = true);

enum class MatcherKind { code_prefix, vital, baseline, category, age, sex };

/// What a catalog entry consumes from a SubjectRecord.
///
/// Text form:
///   code:J18|J12        event codes starting with any listed prefix
///   vital:heart_rate    nearest vital observation of that kind
///   baseline:bmi        continuous baseline measurement
///   category:smoking    categorical baseline; `category:smoking+Unknown`
///                       encodes a missing value as level "Unknown"
///   age | sex           demographics (sex encodes male = 1)
/// An optional `@0|2` suffix keeps only the listed windows of a windowed class.
struct Matcher {
    MatcherKind kind = MatcherKind::code_prefix;
    std::vector<std::string> prefixes;
    VitalKind vital = VitalKind::heart_rate;
    std::string key;
    std::optional<std::string> unknown_level;
    std::optional<std::vector<std::size_t>> kept_windows;

    static Matcher parse(std::string_view text);
    std::string to_string() const;
    bool matches_code(std::string_view code) const;
    bool keeps_window(std::size_t window) const;
};

struct CatalogEntry {
    std::string feature_name;
    Matcher matcher;
    FeatureClass feature_class = FeatureClass::chronic;
    std::optional<std::string> group_label;
    Encoding encoding = Encoding::binary_presence;
};

/// Ordered feature declarations. Records resolve to the first matching entry.
class FeatureCatalog {
public:
    FeatureCatalog() = default;
    /// Validates names, matcher/class/encoding compatibility. Throws ConfigError.
    explicit FeatureCatalog(std::vector<CatalogEntry> entries);

    const std::vector<CatalogEntry> &entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

    std::optional<std::size_t> match_event(std::string_view code) const;
    std::optional<std::size_t> match_vital(VitalKind kind) const;
    std::optional<std::size_t> find(std::string_view feature_name) const;

    /// CSV with header feature_name,matcher,feature_class,group_label,encoding.
    static FeatureCatalog read_csv(std::istream &in);
    void write_csv(std::ostream &out) const;

private:
    std::vector<CatalogEntry> entries_;
};

/// Window suffix used in encoded column names: "<feature>@<window>" for
/// classes with several windows, the bare name otherwise.
std::string windowed_column_name(const CatalogEntry &entry, std::size_t window);

} // namespace dynrisk
