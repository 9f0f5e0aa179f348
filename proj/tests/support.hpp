#pragma once

// Dataset builders and synthetic generators shared by the unit and
// acceptance tests.

#include "scopefe/tabular.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace testsupport {

using scopefe::Column;
using scopefe::ColumnKind;
using scopefe::Dataset;
using scopefe::Task;

inline Column numeric(std::vector<double> v) {
    Column c;
    c.kind = ColumnKind::Numeric;
    c.numeric = std::move(v);
    return c;
}

inline Column categorical(std::vector<std::int32_t> codes, std::int32_t cardinality) {
    Column c;
    c.kind = ColumnKind::Categorical;
    c.codes = std::move(codes);
    c.cardinality = cardinality;
    for (std::int32_t i = 0; i < cardinality; ++i) c.dictionary.push_back("c" + std::to_string(i));
    return c;
}

inline Dataset make_dataset(std::vector<Column> cols, std::vector<double> y,
                            Task task = Task::Regression, const std::string& prefix = "x") {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < cols.size(); ++i) names.push_back(prefix + std::to_string(i + 1));
    Dataset ds(std::move(names), std::move(cols), "y", std::move(y), task);
    if (task == Task::Binary) ds.set_class_labels({"0", "1"});
    return ds;
}

/// x_1..x_d ~ N(0,1), y = x1 * x2 + noise_sd * N(0,1).
inline Dataset planted_product(std::size_t n, std::size_t d, std::uint64_t seed, double noise_sd = 0.1) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<std::vector<double>> x(d, std::vector<double>(n));
    std::vector<double> y(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < d; ++j) x[j][r] = g(gen);
        y[r] = x[0][r] * x[1][r] + noise_sd * g(gen);
    }
    std::vector<Column> cols;
    for (auto& v : x) cols.push_back(numeric(std::move(v)));
    return make_dataset(std::move(cols), std::move(y));
}

/// d numeric features in groups of `group` consecutive columns; each group
/// shares a latent factor, so within-group correlation is high and
/// across-group correlation is near zero. y mixes the first features.
inline Dataset latent_groups(std::size_t n, std::size_t d, std::size_t group, std::uint64_t seed,
                             double loading = 0.9) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    const std::size_t groups = (d + group - 1) / group;
    std::vector<std::vector<double>> latent(groups, std::vector<double>(n));
    for (auto& l : latent) {
        for (auto& v : l) v = g(gen);
    }
    const double rest = std::sqrt(1.0 - loading * loading);
    std::vector<std::vector<double>> x(d, std::vector<double>(n));
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t r = 0; r < n; ++r) x[j][r] = loading * latent[j / group][r] + rest * g(gen);
    }
    std::vector<double> y(n);
    for (std::size_t r = 0; r < n; ++r) {
        y[r] = x[0][r] * x[1][r] + 0.5 * x[0][r] + 0.3 * g(gen);
    }
    std::vector<Column> cols;
    for (auto& v : x) cols.push_back(numeric(std::move(v)));
    return make_dataset(std::move(cols), std::move(y));
}

/// Binary task: y = 1 when x1 + x2 + noise > 0.
inline Dataset binary_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<std::vector<double>> x(d, std::vector<double>(n));
    std::vector<double> y(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < d; ++j) x[j][r] = g(gen);
        y[r] = x[0][r] + x[1 % d][r] + 0.5 * g(gen) > 0.0 ? 1.0 : 0.0;
    }
    std::vector<Column> cols;
    for (auto& v : x) cols.push_back(numeric(std::move(v)));
    return make_dataset(std::move(cols), std::move(y), Task::Binary);
}

}  // namespace testsupport
