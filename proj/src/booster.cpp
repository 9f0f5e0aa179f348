#include "scopefe/booster.hpp"

#include <algorithm>
#include <numeric>

namespace scopefe {

namespace {

constexpr double kLeafL2 = 1.0;
constexpr double kMinHessian = 1e-3;
constexpr double kMinGain = 1e-12;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// log(1 + exp(m)) without overflow.
double softplus(double m) { return m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m)); }

}  // namespace

void BoostParams::validate() const {
    if (rounds < 0) throw Error("booster: rounds must be non-negative");
    if (!(learning_rate > 0.0)) throw Error("booster: learning_rate must be positive");
    if (max_depth < 1) throw Error("booster: max_depth must be positive");
    if (min_leaf < 1) throw Error("booster: min_leaf must be positive");
    if (bins < 2 || bins > 4096) throw Error("booster: bins must be in [2, 4096]");
    if (early_stop_patience < 1) throw Error("booster: early_stop_patience must be positive");
}

FeatureBinner::FeatureBinner(const ColumnView& column, std::span<const std::size_t> rows,
                             int max_bins)
    : kind_(column.kind) {
    if (kind_ == ColumnKind::Numeric) {
        std::vector<double> values;
        values.reserve(rows.size());
        for (std::size_t r : rows) {
            if (!is_missing(column.numeric[r])) values.push_back(column.numeric[r]);
        }
        std::sort(values.begin(), values.end());
        std::vector<double> distinct = values;
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
            for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
                thresholds_.push_back(distinct[i] + 0.5 * (distinct[i + 1] - distinct[i]));
            }
        } else {
            // Quantile cut points; values <= threshold fall in the lower bin.
            for (int b = 1; b < max_bins; ++b) {
                const std::size_t pos = static_cast<std::size_t>(b) * values.size() /
                                        static_cast<std::size_t>(max_bins);
                const double cut = values[std::min(pos, values.size() - 1)];
                if (cut < values.back() && (thresholds_.empty() || cut > thresholds_.back())) {
                    thresholds_.push_back(cut);
                }
            }
        }
        num_bins_ = distinct.empty() ? 0 : static_cast<int>(thresholds_.size()) + 1;
        return;
    }

    // Categories ordered by training frequency, rarest lumped into the last bin.
    std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(0, column.cardinality)), 0);
    for (std::size_t r : rows) {
        const std::int32_t c = column.codes[r];
        if (!is_missing(c)) ++counts[c];
    }
    std::vector<std::int32_t> order;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] > 0) order.push_back(static_cast<std::int32_t>(c));
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::int32_t a, std::int32_t b) { return counts[a] > counts[b]; });
    num_bins_ = std::min<int>(static_cast<int>(order.size()), max_bins);
    category_bin_.assign(counts.size(), static_cast<std::uint16_t>(num_bins_));
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        category_bin_[order[rank]] =
            static_cast<std::uint16_t>(std::min<std::size_t>(rank, static_cast<std::size_t>(num_bins_ - 1)));
    }
}

std::uint16_t FeatureBinner::bin(const ColumnView& column, std::size_t row) const {
    if (kind_ == ColumnKind::Numeric) {
        const double v = column.numeric[row];
        if (is_missing(v) || num_bins_ == 0) return missing_bin();
        return static_cast<std::uint16_t>(
            std::lower_bound(thresholds_.begin(), thresholds_.end(), v) - thresholds_.begin());
    }
    const std::int32_t c = column.codes[row];
    if (is_missing(c) || static_cast<std::size_t>(c) >= category_bin_.size()) return missing_bin();
    return category_bin_[c];
}

double BoostModel::predict(std::span<const ColumnView> features, std::size_t row) const {
    double sum = 0.0;
    for (const Tree& tree : trees) {
        int n = 0;
        while (tree.nodes[n].feature >= 0) {
            const TreeNode& node = tree.nodes[n];
            const auto& binner = binners[node.feature];
            const std::uint16_t b = binner.bin(features[node.feature], row);
            const bool left = b == binner.missing_bin() ? node.missing_left : b <= node.split_bin;
            n = left ? node.left : node.right;
        }
        sum += tree.nodes[n].weight;
    }
    return base_score + learning_rate * sum;
}

double loss(Task task, std::span<const double> y, std::span<const double> margin,
            const RowIndexSet& rows) {
    if (rows.empty()) throw Error("loss: empty row set");
    double total = 0.0;
    for (std::size_t r : rows) {
        if (task == Task::Regression) {
            const double e = y[r] - margin[r];
            total += e * e;
        } else {
            total += softplus(margin[r]) - y[r] * margin[r];
        }
    }
    total /= static_cast<double>(rows.size());
    return task == Task::Regression ? std::sqrt(total) : total;
}

double auc(std::span<const double> y, std::span<const double> margin, const RowIndexSet& rows) {
    std::vector<std::size_t> order(rows.rows);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return margin[a] < margin[b]; });
    double pos = 0.0, neg = 0.0, rank_sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && margin[order[j]] == margin[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t) {
            if (y[order[t]] > 0.5) {
                rank_sum += avg_rank;
                pos += 1.0;
            } else {
                neg += 1.0;
            }
        }
        i = j;
    }
    if (pos == 0.0 || neg == 0.0) return 0.5;
    return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

namespace {

struct BinStat {
    double g = 0.0;
    double h = 0.0;
    std::size_t n = 0;
};

double leaf_score(double g, double h) { return g * g / (h + kLeafL2); }

struct SplitChoice {
    int feature = -1;
    std::uint16_t split_bin = 0;
    bool missing_left = true;
    double gain = 0.0;
};

/// Grows one depth-limited tree over the local training rows.
class TreeGrower {
public:
    TreeGrower(const std::vector<std::vector<std::uint16_t>>& bins,
               const std::vector<FeatureBinner>& binners, const std::vector<double>& grad,
               const std::vector<double>& hess, const BoostParams& params)
        : bins_(bins), binners_(binners), grad_(grad), hess_(hess), params_(params) {}

    /// Returns the tree and writes each training row's leaf weight.
    Tree grow(std::vector<double>& leaf_value) {
        Tree tree;
        std::vector<std::uint32_t> rows(grad_.size());
        std::iota(rows.begin(), rows.end(), 0u);
        leaf_value.assign(grad_.size(), 0.0);
        build(tree, rows, 0, leaf_value);
        return tree;
    }

private:
    int build(Tree& tree, std::vector<std::uint32_t>& rows, int depth,
              std::vector<double>& leaf_value) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        double g = 0.0, h = 0.0;
        for (std::uint32_t r : rows) {
            g += grad_[r];
            h += hess_[r];
        }

        SplitChoice best;
        if (depth < params_.max_depth &&
            rows.size() >= 2 * static_cast<std::size_t>(params_.min_leaf)) {
            best = find_split(rows, g, h);
        }
        if (best.feature < 0) {
            const double w = -g / (h + kLeafL2);
            tree.nodes[id].weight = w;
            for (std::uint32_t r : rows) leaf_value[r] = w;
            return id;
        }

        std::vector<std::uint32_t> left, right;
        const auto& col = bins_[best.feature];
        const std::uint16_t missing = binners_[best.feature].missing_bin();
        for (std::uint32_t r : rows) {
            const std::uint16_t b = col[r];
            const bool go_left = b == missing ? best.missing_left : b <= best.split_bin;
            (go_left ? left : right).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();

        tree.nodes[id].feature = best.feature;
        tree.nodes[id].split_bin = best.split_bin;
        tree.nodes[id].missing_left = best.missing_left;
        tree.nodes[id].gain = best.gain;
        const int l = build(tree, left, depth + 1, leaf_value);
        const int r = build(tree, right, depth + 1, leaf_value);
        tree.nodes[id].left = l;
        tree.nodes[id].right = r;
        return id;
    }

    SplitChoice find_split(const std::vector<std::uint32_t>& rows, double g, double h) {
        SplitChoice best;
        const double parent = leaf_score(g, h);
        const std::size_t min_leaf = static_cast<std::size_t>(params_.min_leaf);
        for (std::size_t f = 0; f < bins_.size(); ++f) {
            const int nb = binners_[f].num_bins();
            if (nb < 1) continue;
            hist_.assign(static_cast<std::size_t>(nb) + 1, BinStat{});
            const auto& col = bins_[f];
            for (std::uint32_t r : rows) {
                BinStat& s = hist_[col[r]];
                s.g += grad_[r];
                s.h += hess_[r];
                ++s.n;
            }
            const BinStat miss = hist_[nb];
            BinStat acc;
            for (int t = 0; t + 1 < nb; ++t) {
                acc.g += hist_[t].g;
                acc.h += hist_[t].h;
                acc.n += hist_[t].n;
                // Try the missing bin on each side; without missing rows,
                // default them to the larger child.
                for (int side = 0; side < 2; ++side) {
                    const bool missing_left = side == 0;
                    if (miss.n == 0 && side == 1) break;
                    const double gl = acc.g + (missing_left ? miss.g : 0.0);
                    const double hl = acc.h + (missing_left ? miss.h : 0.0);
                    const std::size_t nl = acc.n + (missing_left ? miss.n : 0);
                    const std::size_t nr = rows.size() - nl;
                    if (nl < min_leaf || nr < min_leaf) continue;
                    const double gr = g - gl, hr = h - hl;
                    if (hl < kMinHessian || hr < kMinHessian) continue;
                    const double gain = 0.5 * (leaf_score(gl, hl) + leaf_score(gr, hr) - parent);
                    if (gain > best.gain + kMinGain) {
                        best.feature = static_cast<int>(f);
                        best.split_bin = static_cast<std::uint16_t>(t);
                        best.missing_left = miss.n == 0 ? nl >= nr : missing_left;
                        best.gain = gain;
                    }
                }
            }
        }
        return best;
    }

    const std::vector<std::vector<std::uint16_t>>& bins_;
    const std::vector<FeatureBinner>& binners_;
    const std::vector<double>& grad_;
    const std::vector<double>& hess_;
    const BoostParams& params_;
    std::vector<BinStat> hist_;
};

int route(const Tree& tree, const std::vector<std::vector<std::uint16_t>>& bins,
          const std::vector<FeatureBinner>& binners, std::size_t i) {
    int n = 0;
    while (tree.nodes[n].feature >= 0) {
        const TreeNode& node = tree.nodes[n];
        const std::uint16_t b = bins[node.feature][i];
        const bool left = b == binners[node.feature].missing_bin() ? node.missing_left
                                                                   : b <= node.split_bin;
        n = left ? node.left : node.right;
    }
    return n;
}

}  // namespace

FitResult fit(std::span<const ColumnView> features, std::span<const double> y, Task task,
              std::span<const double> init_scores, const RowIndexSet& train,
              const RowIndexSet& valid, const BoostParams& params, std::uint64_t /*seed*/) {
    params.validate();
    if (features.empty()) throw Error("fit: no feature columns");
    if (train.empty()) throw Error("fit: empty training rows");

    // Sorted copies make the fit independent of the caller's row order.
    std::vector<std::size_t> tr = train.rows, va = valid.rows;
    std::sort(tr.begin(), tr.end());
    std::sort(va.begin(), va.end());

    FitResult result;
    BoostModel& model = result.model;
    model.task = task;
    model.learning_rate = params.learning_rate;
    model.feature_gain.assign(features.size(), 0.0);

    bool any_present = false;
    std::vector<std::vector<std::uint16_t>> train_bins(features.size()), valid_bins(features.size());
    for (std::size_t f = 0; f < features.size(); ++f) {
        model.binners.emplace_back(features[f], tr, params.bins);
        any_present = any_present || model.binners[f].num_bins() > 0;
        train_bins[f].reserve(tr.size());
        for (std::size_t r : tr) train_bins[f].push_back(model.binners[f].bin(features[f], r));
        valid_bins[f].reserve(va.size());
        for (std::size_t r : va) valid_bins[f].push_back(model.binners[f].bin(features[f], r));
    }
    if (!any_present) throw Error("fit: every feature is missing on the training rows");

    const bool has_init = !init_scores.empty();
    if (!has_init) {
        double mean = 0.0;
        for (std::size_t r : tr) mean += y[r];
        mean /= static_cast<double>(tr.size());
        if (task == Task::Regression) {
            model.base_score = mean;
        } else {
            const double p = std::clamp(mean, 1e-6, 1.0 - 1e-6);
            model.base_score = std::log(p / (1.0 - p));
        }
    }

    std::vector<double> train_margin(tr.size()), valid_margin(va.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
        train_margin[i] = model.base_score + (has_init ? init_scores[tr[i]] : 0.0);
    }
    for (std::size_t i = 0; i < va.size(); ++i) {
        valid_margin[i] = model.base_score + (has_init ? init_scores[va[i]] : 0.0);
    }

    auto valid_loss = [&] {
        double total = 0.0;
        for (std::size_t i = 0; i < va.size(); ++i) {
            const double yy = y[va[i]], m = valid_margin[i];
            if (task == Task::Regression) {
                total += (yy - m) * (yy - m);
            } else {
                total += softplus(m) - yy * m;
            }
        }
        total /= static_cast<double>(va.size());
        return task == Task::Regression ? std::sqrt(total) : total;
    };
    if (!va.empty()) result.initial_valid_loss = valid_loss();

    std::vector<double> grad(tr.size()), hess(tr.size()), leaf_value;
    TreeGrower grower(train_bins, model.binners, grad, hess, params);
    double best = std::numeric_limits<double>::infinity();
    int since_best = 0;
    for (int round = 1; round <= params.rounds; ++round) {
        for (std::size_t i = 0; i < tr.size(); ++i) {
            if (task == Task::Regression) {
                grad[i] = train_margin[i] - y[tr[i]];
                hess[i] = 1.0;
            } else {
                const double p = sigmoid(train_margin[i]);
                grad[i] = p - y[tr[i]];
                hess[i] = std::max(p * (1.0 - p), 1e-16);
            }
        }
        Tree tree = grower.grow(leaf_value);
        for (std::size_t i = 0; i < tr.size(); ++i) train_margin[i] += params.learning_rate * leaf_value[i];
        for (std::size_t i = 0; i < va.size(); ++i) {
            valid_margin[i] += params.learning_rate * tree.nodes[route(tree, valid_bins, model.binners, i)].weight;
        }
        model.trees.push_back(std::move(tree));

        if (va.empty()) {
            result.best_round = round;
            continue;
        }
        const double l = valid_loss();
        result.valid_losses.push_back(l);
        if (l < best) {
            best = l;
            result.best_round = round;
            since_best = 0;
        } else if (++since_best >= params.early_stop_patience) {
            break;
        }
    }

    model.trees.resize(static_cast<std::size_t>(result.best_round));
    for (const Tree& tree : model.trees) {
        for (const TreeNode& node : tree.nodes) {
            if (node.feature >= 0) model.feature_gain[node.feature] += node.gain;
        }
    }
    return result;
}

Baseline oof_baseline(const Dataset& ds, const RowIndexSet& train, const RowIndexSet& valid,
                      int folds, const BoostParams& params, std::uint64_t seed) {
    if (folds < 2) throw Error("oof_baseline: folds must be >= 2");
    if (train.size() < static_cast<std::size_t>(folds)) {
        throw Error("oof_baseline: fewer training rows than folds");
    }
    if (valid.empty()) throw Error("oof_baseline: empty validation rows");
    const std::size_t n = ds.num_rows();
    const auto& y = ds.target();

    Baseline out;
    out.folds = folds;
    out.fold_of_row.assign(n, -1);
    out.predictions.assign(n, kMissing);

    // Round-robin over a shuffled order; per class for binary targets.
    std::vector<std::vector<std::size_t>> strata;
    if (ds.task() == Task::Binary) {
        strata.resize(2);
        for (std::size_t r : train) strata[y[r] > 0.5 ? 1 : 0].push_back(r);
    } else {
        strata.push_back(train.rows);
    }
    std::size_t counter = 0;
    for (std::size_t s = 0; s < strata.size(); ++s) {
        std::sort(strata[s].begin(), strata[s].end());
        Rng rng(derive_seed(seed, "oof-folds", {s}));
        rng.shuffle(strata[s]);
        for (std::size_t r : strata[s]) out.fold_of_row[r] = static_cast<int>(counter++ % folds);
    }

    std::vector<RowIndexSet> held(folds), fit_rows(folds);
    for (std::size_t r : train) {
        const int f = out.fold_of_row[r];
        held[f].rows.push_back(r);
        for (int g = 0; g < folds; ++g) {
            if (g != f) fit_rows[g].rows.push_back(r);
        }
    }
    if (ds.task() == Task::Binary) {
        for (int f = 0; f < folds; ++f) {
            bool has0 = false, has1 = false;
            for (std::size_t r : held[f]) (y[r] > 0.5 ? has1 : has0) = true;
            if (!(has0 && has1)) throw Error("oof_baseline: fold with a single class");
        }
    }

    std::vector<ColumnView> views;
    for (std::size_t i = 0; i < ds.num_features(); ++i) views.push_back(ds.view(i));
    std::vector<double> valid_sum(n, 0.0);
    for (int f = 0; f < folds; ++f) {
        const FitResult fr = fit(views, y, ds.task(), {}, fit_rows[f], held[f], params,
                                 derive_seed(seed, "oof-fit", {static_cast<std::uint64_t>(f)}));
        for (std::size_t r : held[f]) out.predictions[r] = fr.model.predict(views, r);
        for (std::size_t r : valid) valid_sum[r] += fr.model.predict(views, r);
    }
    for (std::size_t r : valid) out.predictions[r] = valid_sum[r] / folds;
    out.l_init = loss(ds.task(), y, out.predictions, valid);
    return out;
}

BoostEval feature_boost(std::span<const ColumnView> candidate, std::span<const double> y,
                        Task task, const RowIndexSet& train, const RowIndexSet& valid,
                        std::span<const double> baseline, const BoostParams& params) {
    if (params.rounds < 1) throw Error("feature_boost: needs at least one round");
    if (valid.empty()) throw Error("feature_boost: empty validation rows");
    bool present = false;
    for (const ColumnView& c : candidate) {
        for (std::size_t r : train) {
            const bool missing = c.kind == ColumnKind::Numeric ? is_missing(c.numeric[r])
                                                               : is_missing(c.codes[r]);
            if (!missing) {
                present = true;
                break;
            }
        }
        if (present) break;
    }
    if (!present) throw Error("feature_boost: candidate column entirely missing on train");

    const FitResult fr = fit(candidate, y, task, baseline, train, valid, params, 0);
    BoostEval out;
    out.l_init = fr.initial_valid_loss;
    out.l_best = *std::min_element(fr.valid_losses.begin(), fr.valid_losses.end());
    out.delta = out.l_init - out.l_best;
    out.valid_losses = fr.valid_losses;
    return out;
}

std::vector<double> attribution(const BoostModel& model) { return model.feature_gain; }

}  // namespace scopefe
