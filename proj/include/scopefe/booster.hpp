#pragma once

#include "scopefe/tabular.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace scopefe {

struct BoostParams {
    int rounds = 100;
    double learning_rate = 0.1;
    int max_depth = 3;
    int min_leaf = 20;
    int bins = 32;
    int early_stop_patience = 5;

    void validate() const;
};

/// Maps raw cell values to histogram bins. The last bin (num_bins()) holds
/// missing values.
class FeatureBinner {
public:
    FeatureBinner() = default;
    /// Learns bin boundaries from the given rows of `column`.
    FeatureBinner(const ColumnView& column, std::span<const std::size_t> rows, int max_bins);

    std::uint16_t bin(const ColumnView& column, std::size_t row) const;
    int num_bins() const { return num_bins_; }
    std::uint16_t missing_bin() const { return static_cast<std::uint16_t>(num_bins_); }

private:
    ColumnKind kind_ = ColumnKind::Numeric;
    std::vector<double> thresholds_;
    std::vector<std::uint16_t> category_bin_;
    int num_bins_ = 0;
};

struct TreeNode {
    int feature = -1;  ///< -1 for leaves
    std::uint16_t split_bin = 0;  ///< bins <= split_bin go left
    bool missing_left = true;
    int left = -1;
    int right = -1;
    double weight = 0.0;  ///< leaf value before the learning rate
    double gain = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;
};

class BoostModel {
public:
    Task task = Task::Regression;
    double base_score = 0.0;
    double learning_rate = 0.1;
    std::vector<FeatureBinner> binners;
    std::vector<Tree> trees;
    /// Cumulative split gain per input feature.
    std::vector<double> feature_gain;

    /// base + lr * sum of leaf weights (margin space; excludes init scores).
    double predict(std::span<const ColumnView> features, std::size_t row) const;
};

struct FitResult {
    BoostModel model;
    /// Validation loss after each fitted round (round 0 not included).
    std::vector<double> valid_losses;
    /// Validation loss of the starting margin.
    double initial_valid_loss = 0.0;
    /// Number of trees kept (the best round); trees past it are dropped.
    int best_round = 0;
};

/// RMSE for regression, mean logistic loss for binary (margins).
double loss(Task task, std::span<const double> y, std::span<const double> margin,
            const RowIndexSet& rows);

/// Area under the ROC curve of margins over `rows` (ties averaged).
double auc(std::span<const double> y, std::span<const double> margin, const RowIndexSet& rows);

/// Histogram gradient boosting. `init_scores`, when non-empty, is indexed by
/// row id and gives the starting margin; otherwise the model starts from the
/// training mean (log-odds for binary). Stops after `early_stop_patience`
/// rounds without validation improvement.
FitResult fit(std::span<const ColumnView> features, std::span<const double> y, Task task,
              std::span<const double> init_scores, const RowIndexSet& train,
              const RowIndexSet& valid, const BoostParams& params, std::uint64_t seed);

struct Baseline {
    /// Indexed by row id; NaN outside train and valid.
    std::vector<double> predictions;
    double l_init = 0.0;
    /// Indexed by row id; -1 for rows that are not training rows.
    std::vector<int> fold_of_row;
    int folds = 0;
};

/// Out-of-fold predictions on the base features: each training row is
/// predicted by the model of the fold that held it out, validation rows by
/// the average of all fold models.
Baseline oof_baseline(const Dataset& ds, const RowIndexSet& train, const RowIndexSet& valid,
                      int folds, const BoostParams& params, std::uint64_t seed);

struct BoostEval {
    double delta = 0.0;
    double l_init = 0.0;
    double l_best = 0.0;
    std::vector<double> valid_losses;
};

/// Incremental value of candidate columns over the baseline: fits a booster
/// on the candidates alone starting from `baseline` and returns
/// l_init - min(validation loss over rounds 1..R).
BoostEval feature_boost(std::span<const ColumnView> candidate, std::span<const double> y,
                        Task task, const RowIndexSet& train, const RowIndexSet& valid,
                        std::span<const double> baseline, const BoostParams& params);

/// Per-feature cumulative split gain.
std::vector<double> attribution(const BoostModel& model);

}  // namespace scopefe
