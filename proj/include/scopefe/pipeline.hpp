#pragma once

#include "scopefe/assoc.hpp"
#include "scopefe/booster.hpp"
#include "scopefe/cluster.hpp"
#include "scopefe/oper.hpp"
#include "scopefe/probe.hpp"
#include "scopefe/select.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace scopefe {

enum class ClusteringMode { Off, Hard, Soft };

std::string to_string(ClusteringMode mode);
ClusteringMode parse_clustering_mode(const std::string& text);

struct PipelineConfig {
    ClusteringMode clustering = ClusteringMode::Soft;
    int tau = 16;
    FcmParams fcm;
    /// Soft-membership threshold; negative means K/10.
    double theta = -1.0;

    bool probing = true;
    ProbeConfig probe;

    bool reliability = true;
    ReliabilityConfig rel;

    BoostParams booster;
    int folds = 5;
    double valid_ratio = 0.2;
    int blocks_log2 = 3;
    double keep_ratio = 0.5;
    /// Recompute the OOF baseline on each halving block instead of once.
    bool baseline_per_round = false;
    int top_k = 10;
    std::uint64_t seed = 42;
    std::size_t workers = 0;
    std::vector<OperatorSpec> operators = default_operator_set();

    void validate() const;
};

/// Predicted binary-candidate shrinkage (N_top / p) * (tau / d).
double predicted_reduction(std::size_t d, std::size_t p, std::size_t tau, std::size_t n_top);

struct VariabilitySummary {
    struct Entry {
        std::string key;
        double ratio;  ///< |mu| / sigma
        double sigma;
    };
    std::vector<Entry> ratios;
    /// Candidates whose samples have sigma == 0.
    std::vector<std::string> zero_variance;
    /// Mean of |mu|/sigma over nonzero-sigma candidates (NaN when none).
    double mean_ratio = 0.0;
    double sigma_max = 0.0;
};

VariabilitySummary variability_summary(const std::vector<ScoreRecord>& records);

/// Wall-clock seconds per stage.
struct StageTimings {
    double similarity = 0.0;
    double clustering = 0.0;
    double probing = 0.0;
    double generation = 0.0;
    double baseline = 0.0;
    double scoring_round0 = 0.0;
    double halving = 0.0;
    double attribution = 0.0;
    double metric = 0.0;

    /// Search-space construction: stages A-C plus the baseline.
    double run() const { return similarity + clustering + probing + generation + baseline; }
    /// Candidate evaluation: reliability round, halving and attribution.
    double eval() const { return scoring_round0 + halving + attribution; }
    double total() const { return run() + eval(); }
};

/// Result of stages A-C.
struct SearchSpace {
    RowIndexSet train;
    RowIndexSet valid;
    std::optional<SimilarityMatrix> similarity;
    std::optional<ClusterAssignment> assignment;
    std::optional<Membership> membership;
    std::optional<ProbeResult> probe;
    std::vector<OperatorSpec> selected_ops;
    std::vector<CandidateFeature> candidates;
    CandidateCount unconstrained;
    CandidateCount generated;
};

struct PipelineReport {
    bool complete = true;
    std::string failed_stage;
    std::string error;

    StageTimings timings;
    Task task = Task::Regression;
    std::size_t rows = 0;
    std::size_t features = 0;
    std::size_t operators = 0;
    std::size_t train_rows = 0;
    std::size_t valid_rows = 0;

    int k = 0;
    double theta = 0.0;
    std::vector<std::vector<int>> cluster_labels;
    std::vector<std::string> feature_names;
    std::optional<ProbeResult> probe;
    std::vector<std::string> selected_ops;

    CandidateCount unconstrained;
    CandidateCount generated;
    /// Halving rounds actually used (may be below the configured value on
    /// small training sets).
    int blocks_log2 = 0;
    std::vector<std::size_t> round_counts;
    double predicted_reduction = 1.0;
    double measured_reduction = 1.0;
    double measured_binary_reduction = 1.0;

    double l_init = 0.0;
    std::vector<ScoreRecord> records;
    std::vector<std::string> selected;
    std::vector<double> selected_gains;
    VariabilitySummary variability;

    std::string metric_name;
    double metric_base = 0.0;
    double metric_engineered = 0.0;
};

struct PipelineResult {
    PipelineReport report;
    /// Materialized selected features over every dataset row.
    std::vector<Column> new_columns;
    std::vector<std::string> new_names;
};

/// Stages A-C: split, similarity + clustering, probing, constrained generation.
SearchSpace build_search_space(const Dataset& ds, const PipelineConfig& cfg,
                               StageTimings* timings = nullptr);

/// Runs every stage. Stage errors are caught and reported with
/// `report.complete == false`.
PipelineResult run(const Dataset& ds, const PipelineConfig& cfg);

/// Original columns (in source order) followed by the new columns.
std::string engineered_csv(const Dataset& ds, const PipelineResult& result);

nlohmann::json to_json(const PipelineConfig& cfg);
nlohmann::json to_json(const ProbeResult& probe);
/// Report JSON; wall times live under "timings" only.
nlohmann::json to_json(const PipelineReport& report);

}  // namespace scopefe
