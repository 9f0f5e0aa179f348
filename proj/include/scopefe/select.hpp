#pragma once

#include "scopefe/booster.hpp"
#include "scopefe/oper.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace scopefe {

/// Reliability statistics for one candidate.
struct ScoreRecord {
    /// Index into the evaluated candidate list.
    std::size_t candidate = 0;
    std::string key;
    std::vector<double> samples;
    double mu = 0.0;
    double sigma = 0.0;  ///< sample standard deviation, 0 for a single sample
    double se = 0.0;
    double r = 0.0;
    /// Round 0 holds R, later rounds the single-split delta.
    std::vector<double> round_scores;
    /// Last halving round the candidate was scored in.
    int survived_until = 0;
    double final_gain = 0.0;
    bool selected = false;
};

/// Fills mu, sigma, se and r from `samples`.
ScoreRecord make_record(std::size_t candidate, std::string key, std::vector<double> samples,
                        double lambda);

struct ReliabilityConfig {
    int n_sub = 3;
    double lambda = 0.2;
    double r_rel = 0.8;

    void validate() const;
};

/// Everything a delta evaluation needs.
struct EvalContext {
    const Dataset& ds;
    const std::vector<CandidateFeature>& candidates;
    /// Rows feeding frequency/group statistics during materialization.
    const RowIndexSet& stats_rows;
    std::span<const double> baseline;
    BoostParams params;
    std::size_t workers = 1;
};

/// Materializes every candidate, scores it on n_sub subsamples of `block0`
/// (the whole block when n_sub is 1) against the fixed validation rows, and
/// ranks by R descending, ties by expression string. Candidates that cannot
/// be scored are left out.
std::vector<ScoreRecord> reliability_round(const EvalContext& ctx, const RowIndexSet& block0,
                                           const RowIndexSet& valid, const ReliabilityConfig& cfg,
                                           std::uint64_t seed);

/// Ranks records by `score` descending, ties by key.
void rank_records(std::vector<ScoreRecord>& records, const std::vector<double>& score);

struct HalvingResult {
    /// Every round-0 record, with per-round scores filled in.
    std::vector<ScoreRecord> records;
    /// Indices into `records` of the final survivors, best first.
    std::vector<std::size_t> survivors;
    /// Candidates entering each round.
    std::vector<std::size_t> round_counts;
};

/// Successive halving over the block schedule. Round 0 is `ranked`; each
/// later round keeps ceil(keep_ratio * count) (at least one) and rescores on
/// the next block. Final-round candidates with delta <= 0 are dropped.
/// `round_baselines`, when non-empty, supplies one baseline per round.
HalvingResult successive_halving(const EvalContext& ctx, std::vector<ScoreRecord> ranked,
                                 const BlockSchedule& blocks, const RowIndexSet& valid,
                                 double keep_ratio,
                                 const std::vector<std::vector<double>>& round_baselines = {});

struct Selection {
    /// Indices into the candidate list, best first.
    std::vector<std::size_t> candidates;
    std::vector<double> gains;
    /// Gain of every survivor (aligned with the input survivor list).
    std::vector<double> survivor_gains;
};

/// Joint booster on all survivor columns; ranks by split gain and returns up
/// to top_k with positive gain.
Selection final_select(const EvalContext& ctx, const std::vector<std::size_t>& survivors,
                       const RowIndexSet& train, const RowIndexSet& valid, int top_k,
                       std::uint64_t seed);

}  // namespace scopefe
