#include "scopefe/pipeline.hpp"

#include <cmath>

namespace scopefe {

using nlohmann::json;

namespace {

/// Seconds rounded to the millisecond.
double ms_round(double seconds) { return std::round(seconds * 1000.0) / 1000.0; }

/// NaN and infinities become null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json numbers(const std::vector<double>& values) {
    json out = json::array();
    for (double v : values) out.push_back(number(v));
    return out;
}

json counts(const CandidateCount& c) {
    return {{"unary", c.unary}, {"binary", c.binary}, {"total", c.total()}};
}

}  // namespace

json to_json(const ProbeResult& p) {
    json ops = json::array();
    for (const auto& s : p.scores) {
        json cands = json::array();
        for (std::size_t i = 0; i < s.candidates.size(); ++i) {
            cands.push_back({{"expression", s.candidates[i].key}, {"delta", number(s.deltas[i])}});
        }
        ops.push_back({{"operator", s.op},
                       {"score", number(s.score)},
                       {"top_deltas", numbers(s.top_deltas)},
                       {"selected", s.selected},
                       {"candidates", std::move(cands)}});
    }
    json selected = json::array();
    for (const auto& op : p.selected) selected.push_back(op.name);
    return {{"l_init", number(p.l_init)},
            {"probe_train_rows", p.probe_train_rows},
            {"probe_valid_rows", p.probe_valid_rows},
            {"operators", std::move(ops)},
            {"selected", std::move(selected)}};
}

json to_json(const PipelineConfig& cfg) {
    json ops = json::array();
    for (const auto& op : cfg.operators) ops.push_back(op.name);
    return {
        {"clustering",
         {{"mode", to_string(cfg.clustering)},
          {"tau", cfg.tau},
          {"m", cfg.fcm.m},
          {"tol", cfg.fcm.tol},
          {"max_iter", cfg.fcm.max_iter},
          {"theta", cfg.theta < 0.0 ? json("K/10") : json(cfg.theta)}}},
        {"probing",
         {{"enabled", cfg.probing},
          {"r_probe", cfg.probe.r_probe},
          {"min_rows", cfg.probe.min_rows},
          {"n_cand", cfg.probe.n_cand},
          {"k", cfg.probe.k},
          {"n_top", cfg.probe.effective_n_top(cfg.operators.size())}}},
        {"reliability",
         {{"enabled", cfg.reliability},
          {"n_sub", cfg.rel.n_sub},
          {"lambda", cfg.rel.lambda},
          {"r_rel", cfg.rel.r_rel}}},
        {"booster",
         {{"rounds", cfg.booster.rounds},
          {"learning_rate", cfg.booster.learning_rate},
          {"max_depth", cfg.booster.max_depth},
          {"min_leaf", cfg.booster.min_leaf},
          {"bins", cfg.booster.bins},
          {"early_stop_patience", cfg.booster.early_stop_patience}}},
        {"folds", cfg.folds},
        {"valid_ratio", cfg.valid_ratio},
        {"blocks_log2", cfg.blocks_log2},
        {"keep_ratio", cfg.keep_ratio},
        {"baseline_per_round", cfg.baseline_per_round},
        {"top_k", cfg.top_k},
        {"seed", cfg.seed},
        {"operators", std::move(ops)},
    };
}

json to_json(const PipelineReport& r) {
    const StageTimings& t = r.timings;
    json timings = {{"similarity", ms_round(t.similarity)},
                    {"clustering", ms_round(t.clustering)},
                    {"probing", ms_round(t.probing)},
                    {"generation", ms_round(t.generation)},
                    {"baseline", ms_round(t.baseline)},
                    {"scoring_round0", ms_round(t.scoring_round0)},
                    {"halving", ms_round(t.halving)},
                    {"attribution", ms_round(t.attribution)},
                    {"metric", ms_round(t.metric)},
                    {"run", ms_round(t.run())},
                    {"eval", ms_round(t.eval())},
                    {"total", ms_round(t.total())}};

    json clusters = json::object();
    for (std::size_t i = 0; i < r.cluster_labels.size() && i < r.feature_names.size(); ++i) {
        clusters[r.feature_names[i]] = r.cluster_labels[i];
    }

    json records = json::array();
    for (const auto& rec : r.records) {
        records.push_back({{"expression", rec.key},
                           {"samples", numbers(rec.samples)},
                           {"mu", number(rec.mu)},
                           {"sigma", number(rec.sigma)},
                           {"se", number(rec.se)},
                           {"r", number(rec.r)},
                           {"round_scores", numbers(rec.round_scores)},
                           {"survived_until", rec.survived_until},
                           {"final_gain", number(rec.final_gain)},
                           {"selected", rec.selected}});
    }

    json selected = json::array();
    for (std::size_t i = 0; i < r.selected.size(); ++i) {
        selected.push_back({{"expression", r.selected[i]}, {"gain", number(r.selected_gains[i])}});
    }

    json ratios = json::array();
    for (const auto& e : r.variability.ratios) {
        ratios.push_back({{"expression", e.key}, {"ratio", number(e.ratio)}, {"sigma", number(e.sigma)}});
    }

    return {
        {"complete", r.complete},
        {"failed_stage", r.failed_stage.empty() ? json(nullptr) : json(r.failed_stage)},
        {"error", r.error.empty() ? json(nullptr) : json(r.error)},
        {"timings", std::move(timings)},
        {"task", to_string(r.task)},
        {"rows", r.rows},
        {"features", r.features},
        {"operators", r.operators},
        {"train_rows", r.train_rows},
        {"valid_rows", r.valid_rows},
        {"clustering", {{"k", r.k}, {"theta", r.theta}, {"assignments", std::move(clusters)}}},
        {"probe", r.probe ? to_json(*r.probe) : json(nullptr)},
        {"selected_operators", r.selected_ops},
        {"candidates",
         {{"unconstrained", counts(r.unconstrained)},
          {"generated", counts(r.generated)},
          {"round_counts", r.round_counts},
          {"selected", r.selected.size()}}},
        {"blocks_log2", r.blocks_log2},
        {"reduction",
         {{"predicted", number(r.predicted_reduction)},
          {"measured", number(r.measured_reduction)},
          {"measured_binary", number(r.measured_binary_reduction)}}},
        {"l_init", number(r.l_init)},
        {"records", std::move(records)},
        {"selected", std::move(selected)},
        {"variability",
         {{"ratios", std::move(ratios)},
          {"zero_variance", r.variability.zero_variance},
          {"mean_ratio", number(r.variability.mean_ratio)},
          {"sigma_max", number(r.variability.sigma_max)}}},
        {"metric",
         {{"name", r.metric_name},
          {"base", number(r.metric_base)},
          {"engineered", number(r.metric_engineered)}}},
    };
}

}  // namespace scopefe
