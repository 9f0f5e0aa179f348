#pragma once

#include "scopefe/tabular.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace scopefe {

/// Symmetric feature-association matrix with unit diagonal and entries in [0, 1].
struct SimilarityMatrix {
    std::vector<std::string> names;
    Eigen::MatrixXd values;

    std::size_t order() const { return static_cast<std::size_t>(values.rows()); }
    double operator()(std::size_t i, std::size_t j) const {
        return values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
};

// All statistics use pairwise-complete rows: a row counts only when both
// cells are present.

/// |Pearson correlation|; 0 when either column is constant.
double pearson_abs(std::span<const double> x, std::span<const double> y);

/// Bias-corrected Cramer's V (no Yates correction). 0 when either effective
/// dimension collapses.
double cramers_v(std::span<const std::int32_t> x, std::span<const std::int32_t> y);

/// Correlation ratio SS_between / SS_total of `num` grouped by `cat`.
double eta_squared(std::span<const std::int32_t> cat, std::span<const double> num);

/// Type-dispatched similarity over the given rows. A pair whose statistic
/// cannot be computed gets 0 and a warning.
SimilarityMatrix similarity_matrix(const Dataset& ds, const RowIndexSet& rows);

/// CSV rendering: header of feature names, then one line per row.
std::string to_csv(const SimilarityMatrix& s);

}  // namespace scopefe
