#pragma once

#include "scopefe/booster.hpp"
#include "scopefe/oper.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace scopefe {

struct ProbeConfig {
    double r_probe = 0.1;
    /// Probe partitions never shrink below this many rows (or the partition size).
    std::size_t min_rows = 500;
    int n_cand = 32;
    int k = 8;
    /// 0 selects ceil(p / 2).
    int n_top = 0;
    int folds = 5;
    std::uint64_t seed = 0;
    std::size_t workers = 1;

    void validate(std::size_t p) const;
    int effective_n_top(std::size_t p) const;
};

struct OperatorScore {
    std::string op;
    std::vector<CandidateFeature> candidates;
    /// Delta per sampled candidate; NaN where the candidate could not be scored.
    std::vector<double> deltas;
    /// Mean of the top-k valid deltas; -inf without valid candidates.
    double score = -std::numeric_limits<double>::infinity();
    std::vector<double> top_deltas;
    bool selected = false;
};

struct ProbeResult {
    std::vector<OperatorScore> scores;
    /// Selected operators in roster order.
    std::vector<OperatorSpec> selected;
    double l_init = 0.0;
    std::size_t probe_train_rows = 0;
    std::size_t probe_valid_rows = 0;
};

/// Uniform sample without replacement from the operator's unconstrained,
/// type-compatible candidate universe; the whole universe when it is small.
std::vector<CandidateFeature> type_aware_sample(const OperatorSpec& op,
                                                const std::vector<ColumnMeta>& features,
                                                int n_cand, std::uint64_t seed);

/// Mean of the k largest finite values (fewer if fewer exist).
double top_k_mean(std::vector<double> deltas, int k, std::vector<double>* top = nullptr);

/// Scores every operator on a probe subsample and keeps the best n_top.
ProbeResult operator_probing(const Dataset& ds, const RowIndexSet& train, const RowIndexSet& valid,
                             const std::vector<OperatorSpec>& ops, const ProbeConfig& cfg,
                             const BoostParams& params);

}  // namespace scopefe
