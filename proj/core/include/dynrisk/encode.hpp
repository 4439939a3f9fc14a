#pragma once

#include "dynrisk/catalog.hpp"
#include "dynrisk/cohort.hpp"
#include "dynrisk/time_filter.hpp"

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace dynrisk {

enum class Normalization { none, zscore };

enum class ColumnKind { binary, continuous, one_hot };

struct ColumnStats {
    double mean = 0.0;
    double std_dev = 0.0; ///< sample SD of observed values
    std::size_t observed_count = 0;
    bool zero_variance = false;
};

/// Dense, fully imputed feature matrix with outcome columns.
///
/// `matrix` is row-major (n_rows x n_features). `observed` has the same
/// shape and marks values present in the source records; imputed entries
/// are 0. Column statistics describe observed values before normalization.
struct EncodedCohort {
    std::vector<std::string> feature_names;
    std::vector<ColumnKind> column_kinds;
    std::vector<ColumnStats> column_stats;
    std::vector<std::string> subject_ids;
    std::vector<std::uint8_t> labels; ///< 1 = died
    std::vector<int> survival_days;
    std::vector<double> matrix;
    std::vector<std::uint8_t> observed;
    Normalization normalization = Normalization::none;
    std::vector<std::string> warnings;

    std::size_t n_rows() const noexcept { return subject_ids.size(); }
    std::size_t n_features() const noexcept { return feature_names.size(); }
    double at(std::size_t row, std::size_t col) const { return matrix[row * n_features() + col]; }
    std::span<const double> row(std::size_t r) const {
        return {matrix.data() + r * n_features(), n_features()};
    }
    std::size_t column_index(std::string_view name) const; ///< throws ConfigError
    std::size_t n_positive() const;
};

struct EncodeOptions {
    Normalization normalization = Normalization::none;
    FilterOptions filter;
};

/// Builds the encoded matrix from ingested subjects.
///
/// Windowed code features become one binary column per window (the most
/// recent qualifying event wins); vitals take the observation nearest the
/// test; missing continuous values are imputed with the observed column
/// mean; categoricals become one-hot groups. Throws DomainError when fewer
/// than two subjects or one outcome class is present, or when a death
/// precedes the index test.
EncodedCohort encode_cohort(const std::vector<SubjectRecord> &subjects, const FeatureCatalog &catalog,
                            const EncodeOptions &options = {});

/// Copy of the matrix where every imputed entry is replaced by the mean of
/// observed values over `rows` only (in the column's normalized units).
/// Columns with no observed value among `rows` keep the cohort-wide fill.
std::vector<double> impute_from_rows(const EncodedCohort &cohort, std::span<const std::size_t> rows);

/// Cohort without the named columns. Throws ConfigError on unknown names.
EncodedCohort drop_columns(const EncodedCohort &cohort, const std::vector<std::string> &names);

/// Cohort restricted to the named columns, in the given order.
EncodedCohort select_columns(const EncodedCohort &cohort, const std::vector<std::string> &names);

/// CSV with header feature_names..., __label, __survival_days, __subject_id.
void write_cohort_csv(std::ostream &out, const EncodedCohort &cohort);

/// Reads an exported cohort. All values count as observed; binary columns
/// are recognised by containing only 0/1; statistics are recomputed.
EncodedCohort read_cohort_csv(std::istream &in);

} // namespace dynrisk
