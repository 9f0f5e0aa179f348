#include "scopefe/pipeline.hpp"

#include "scopefe/csv.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace scopefe {

std::string to_string(ClusteringMode mode) {
    switch (mode) {
        case ClusteringMode::Off: return "off";
        case ClusteringMode::Hard: return "hard";
        case ClusteringMode::Soft: return "soft";
    }
    return "off";
}

ClusteringMode parse_clustering_mode(const std::string& text) {
    if (text == "off") return ClusteringMode::Off;
    if (text == "hard") return ClusteringMode::Hard;
    if (text == "soft") return ClusteringMode::Soft;
    throw Error("unknown clustering mode '" + text + "' (expected off, hard or soft)");
}

void PipelineConfig::validate() const {
    if (tau < 1) throw Error("config: tau must be >= 1");
    if (!(fcm.m > 1.0)) throw Error("config: fuzziness m must be > 1");
    if (!(fcm.tol > 0.0) || fcm.max_iter < 1) throw Error("config: invalid FCM stopping rule");
    if (operators.empty()) throw Error("config: empty operator list");
    if (probing) probe.validate(operators.size());
    rel.validate();
    booster.validate();
    if (folds < 2) throw Error("config: folds must be >= 2");
    if (!(valid_ratio > 0.0 && valid_ratio < 1.0)) throw Error("config: valid_ratio must be in (0, 1)");
    if (blocks_log2 < 0 || blocks_log2 > 20) throw Error("config: blocks_log2 must be in [0, 20]");
    if (!(keep_ratio > 0.0 && keep_ratio <= 1.0)) throw Error("config: keep_ratio must be in (0, 1]");
    if (top_k < 1) throw Error("config: top_k must be >= 1");
}

double predicted_reduction(std::size_t d, std::size_t p, std::size_t tau, std::size_t n_top) {
    if (d == 0 || p == 0 || tau == 0 || n_top == 0) {
        throw Error("predicted_reduction: arguments must be positive");
    }
    if (tau > d || n_top > p) throw Error("predicted_reduction: need tau <= d and N_top <= p");
    return (static_cast<double>(n_top) / static_cast<double>(p)) *
           (static_cast<double>(tau) / static_cast<double>(d));
}

VariabilitySummary variability_summary(const std::vector<ScoreRecord>& records) {
    VariabilitySummary out;
    double sum = 0.0;
    for (const auto& rec : records) {
        if (rec.samples.size() < 2) continue;
        const double n = static_cast<double>(rec.samples.size());
        const double mu = std::accumulate(rec.samples.begin(), rec.samples.end(), 0.0) / n;
        double ss = 0.0;
        for (double s : rec.samples) ss += (s - mu) * (s - mu);
        const double sigma = std::sqrt(ss / (n - 1.0));
        out.sigma_max = std::max(out.sigma_max, sigma);
        if (sigma == 0.0) {
            out.zero_variance.push_back(rec.key);
            continue;
        }
        out.ratios.push_back({rec.key, std::abs(mu) / sigma, sigma});
        sum += out.ratios.back().ratio;
    }
    out.mean_ratio = out.ratios.empty() ? kMissing : sum / static_cast<double>(out.ratios.size());
    return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Runs `fn` and adds its wall time to `slot`.
template <typename Fn>
auto timed(double* slot, Fn&& fn) {
    const auto start = Clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        if (slot) *slot += seconds_since(start);
    } else {
        auto result = fn();
        if (slot) *slot += seconds_since(start);
        return result;
    }
}

CandidateCount count_generated(const std::vector<CandidateFeature>& candidates) {
    CandidateCount c;
    for (const auto& cand : candidates) {
        if (cand.op.arity == Arity::Unary) {
            ++c.unary;
        } else {
            ++c.binary;
        }
    }
    return c;
}

/// Lowers blocks_log2 until the smallest block can still grow a tree on a
/// reliability subsample.
int usable_blocks_log2(std::size_t train, int wanted, const ReliabilityConfig& rel,
                       const BoostParams& params) {
    const double ratio = rel.n_sub == 1 ? 1.0 : rel.r_rel;
    const double need = 2.0 * static_cast<double>(params.min_leaf);
    int l = wanted;
    while (l > 0) {
        const double block = static_cast<double>(train) / static_cast<double>(std::size_t{1} << l);
        if (std::floor(block * ratio) >= need) break;
        --l;
    }
    if (l != wanted) {
        spdlog::warn("pipeline: {} training rows support only {} halving rounds (asked for {})",
                     train, l, wanted);
    }
    return l;
}

ReliabilityConfig effective_reliability(const PipelineConfig& cfg) {
    if (cfg.reliability) return cfg.rel;
    return ReliabilityConfig{1, 0.0, 1.0};
}

/// Validation quality of a booster on `features`: RMSE, or AUC for binary.
double validation_metric(std::span<const ColumnView> features, const Dataset& ds,
                         const RowIndexSet& train, const RowIndexSet& valid,
                         const BoostParams& params, std::uint64_t seed) {
    const FitResult fr = fit(features, ds.target(), ds.task(), {}, train, valid, params, seed);
    std::vector<double> margin(ds.num_rows(), 0.0);
    for (std::size_t r : valid) margin[r] = fr.model.predict(features, r);
    if (ds.task() == Task::Binary) return auc(ds.target(), margin, valid);
    return loss(Task::Regression, ds.target(), margin, valid);
}

}  // namespace

SearchSpace build_search_space(const Dataset& ds, const PipelineConfig& cfg, StageTimings* timings) {
    cfg.validate();
    SearchSpace out;
    const bool binary = ds.task() == Task::Binary;
    std::tie(out.train, out.valid) = split(ds, cfg.valid_ratio, binary, derive_seed(cfg.seed, "split"));

    const std::size_t d = ds.num_features();
    if (cfg.clustering != ClusteringMode::Off && d >= 2) {
        out.similarity = timed(timings ? &timings->similarity : nullptr,
                               [&] { return similarity_matrix(ds, out.train); });
        timed(timings ? &timings->clustering : nullptr, [&] {
            if (cfg.clustering == ClusteringMode::Hard) {
                out.assignment = hard_cluster(*out.similarity, cfg.tau);
                return;
            }
            const int k = cluster_count(d, cfg.tau);
            const Embedding emb = spectral_embed(*out.similarity, k);
            out.membership = fcm(emb.x, k, cfg.fcm, derive_seed(cfg.seed, "fcm"));
            out.assignment = soft_assign(out.membership->u, k, cfg.theta);
        });
    } else if (cfg.clustering != ClusteringMode::Off) {
        spdlog::info("pipeline: fewer than two features, clustering skipped");
    }

    if (cfg.probing) {
        ProbeConfig pc = cfg.probe;
        pc.seed = derive_seed(cfg.seed, "probe");
        pc.folds = cfg.folds;
        pc.workers = cfg.workers;
        out.probe = timed(timings ? &timings->probing : nullptr, [&] {
            return operator_probing(ds, out.train, out.valid, cfg.operators, pc, cfg.booster);
        });
        out.selected_ops = out.probe->selected;
    } else {
        out.selected_ops = cfg.operators;
    }

    timed(timings ? &timings->generation : nullptr, [&] {
        out.candidates = enumerate_candidates(ds.columns(), out.selected_ops,
                                              out.assignment ? &*out.assignment : nullptr);
        out.unconstrained = count_unconstrained(ds.columns(), cfg.operators);
        out.generated = count_generated(out.candidates);
    });
    return out;
}

PipelineResult run(const Dataset& ds, const PipelineConfig& cfg) {
    PipelineResult result;
    PipelineReport& rep = result.report;
    StageTimings& t = rep.timings;
    rep.task = ds.task();
    rep.rows = ds.num_rows();
    rep.features = ds.num_features();
    rep.operators = cfg.operators.size();
    for (const auto& c : ds.columns()) rep.feature_names.push_back(c.name);

    std::string stage = "config";
    try {
        cfg.validate();

        stage = "search-space";
        SearchSpace space = build_search_space(ds, cfg, &t);
        rep.train_rows = space.train.size();
        rep.valid_rows = space.valid.size();
        if (space.assignment) {
            rep.cluster_labels = label_sets(*space.assignment);
            if (const auto* h = std::get_if<HardAssignment>(&*space.assignment)) rep.k = h->k;
            if (const auto* s = std::get_if<SoftAssignment>(&*space.assignment)) {
                rep.k = s->k;
                rep.theta = s->theta;
            }
        }
        rep.probe = space.probe;
        for (const auto& op : space.selected_ops) rep.selected_ops.push_back(op.name);
        rep.unconstrained = space.unconstrained;
        rep.generated = space.generated;
        rep.measured_reduction =
            rep.unconstrained.total() == 0
                ? 1.0
                : static_cast<double>(rep.generated.total()) / static_cast<double>(rep.unconstrained.total());
        rep.measured_binary_reduction =
            rep.unconstrained.binary == 0
                ? 1.0
                : static_cast<double>(rep.generated.binary) / static_cast<double>(rep.unconstrained.binary);
        {
            const std::size_t d = std::max<std::size_t>(ds.num_features(), 1);
            const std::size_t tau = space.assignment
                                        ? std::min<std::size_t>(static_cast<std::size_t>(cfg.tau), d)
                                        : d;
            const std::size_t p = cfg.operators.size();
            const std::size_t n_top = std::clamp<std::size_t>(space.selected_ops.size(), 1, p);
            rep.predicted_reduction = predicted_reduction(d, p, tau, n_top);
        }

        stage = "baseline";
        const ReliabilityConfig rel = effective_reliability(cfg);
        rep.blocks_log2 = usable_blocks_log2(space.train.size(), cfg.blocks_log2, rel, cfg.booster);
        const BlockSchedule blocks = make_blocks(space.train, rep.blocks_log2, cfg.seed);
        Baseline baseline;
        std::vector<std::vector<double>> round_baselines;
        timed(&t.baseline, [&] {
            baseline = oof_baseline(ds, space.train, space.valid, cfg.folds, cfg.booster,
                                    derive_seed(cfg.seed, "oof"));
            if (!cfg.baseline_per_round) return;
            for (std::size_t r = 0; r < blocks.rounds.size(); ++r) {
                round_baselines.push_back(
                    oof_baseline(ds, blocks.rounds[r], space.valid, cfg.folds, cfg.booster,
                                 derive_seed(cfg.seed, "oof-round", {r}))
                        .predictions);
            }
        });
        rep.l_init = baseline.l_init;

        const EvalContext ctx{ds,
                              space.candidates,
                              space.train,
                              round_baselines.empty() ? std::span<const double>(baseline.predictions)
                                                      : std::span<const double>(round_baselines[0]),
                              cfg.booster,
                              cfg.workers};

        stage = "reliability";
        auto ranked = timed(&t.scoring_round0, [&] {
            return reliability_round(ctx, blocks.rounds[0], space.valid, rel,
                                     derive_seed(cfg.seed, "round0"));
        });

        stage = "halving";
        HalvingResult halving = timed(&t.halving, [&] {
            return successive_halving(ctx, std::move(ranked), blocks, space.valid, cfg.keep_ratio,
                                      round_baselines);
        });
        rep.round_counts = halving.round_counts;

        stage = "attribution";
        std::vector<std::size_t> survivor_candidates;
        for (std::size_t i : halving.survivors) survivor_candidates.push_back(halving.records[i].candidate);
        const EvalContext final_ctx{ds, space.candidates, space.train, baseline.predictions,
                                    cfg.booster, cfg.workers};
        const Selection sel = timed(&t.attribution, [&] {
            return final_select(final_ctx, survivor_candidates, space.train, space.valid, cfg.top_k,
                                cfg.seed);
        });
        for (std::size_t i = 0; i < halving.survivors.size(); ++i) {
            halving.records[halving.survivors[i]].final_gain = sel.survivor_gains.at(i);
        }
        for (std::size_t j = 0; j < sel.candidates.size(); ++j) {
            for (auto& rec : halving.records) {
                if (rec.candidate == sel.candidates[j]) rec.selected = true;
            }
            rep.selected.push_back(space.candidates[sel.candidates[j]].key);
            rep.selected_gains.push_back(sel.gains[j]);
        }
        rep.records = std::move(halving.records);
        rep.variability = variability_summary(rep.records);

        for (std::size_t c : sel.candidates) {
            result.new_columns.push_back(materialize_all(space.candidates[c], ds, space.train));
            result.new_names.push_back(space.candidates[c].key);
        }

        stage = "metric";
        timed(&t.metric, [&] {
            std::vector<ColumnView> views;
            for (std::size_t i = 0; i < ds.num_features(); ++i) views.push_back(ds.view(i));
            const std::uint64_t seed = derive_seed(cfg.seed, "metric");
            rep.metric_name = ds.task() == Task::Binary ? "auc" : "rmse";
            rep.metric_base =
                validation_metric(views, ds, space.train, space.valid, cfg.booster, seed);
            for (const auto& col : result.new_columns) views.push_back(col.view());
            rep.metric_engineered =
                validation_metric(views, ds, space.train, space.valid, cfg.booster, seed);
        });
    } catch (const std::exception& e) {
        rep.complete = false;
        rep.failed_stage = stage;
        rep.error = e.what();
        result.new_columns.clear();
        result.new_names.clear();
        spdlog::error("pipeline: stage '{}' failed: {}", stage, e.what());
    }
    return result;
}

namespace {

std::string cell_text(const ColumnView& v, const std::vector<std::string>& dictionary, std::size_t r) {
    if (v.kind == ColumnKind::Numeric) return csv::format_double(v.numeric[r]);
    const std::int32_t code = v.codes[r];
    if (is_missing(code)) return {};
    if (static_cast<std::size_t>(code) < dictionary.size()) return dictionary[static_cast<std::size_t>(code)];
    return std::to_string(code);
}

}  // namespace

std::string engineered_csv(const Dataset& ds, const PipelineResult& result) {
    const std::size_t d = ds.num_features();
    const std::size_t target_at = std::min(ds.target_position(), d);

    std::vector<std::string> header;
    for (std::size_t i = 0; i < d; ++i) {
        if (i == target_at) header.push_back(ds.target_name());
        header.push_back(ds.column(i).name);
    }
    if (target_at == d) header.push_back(ds.target_name());
    for (const auto& name : result.new_names) header.push_back(name);

    std::string out = csv::join(header) + "\n";
    std::vector<std::string> row;
    for (std::size_t r = 0; r < ds.num_rows(); ++r) {
        row.clear();
        auto target_cell = [&] {
            const double y = ds.target()[r];
            if (ds.task() == Task::Binary && !ds.class_labels().empty()) {
                return ds.class_labels().at(static_cast<std::size_t>(y));
            }
            return csv::format_double(y);
        };
        for (std::size_t i = 0; i < d; ++i) {
            if (i == target_at) row.push_back(target_cell());
            row.push_back(cell_text(ds.view(i), ds.dictionary(i), r));
        }
        if (target_at == d) row.push_back(target_cell());
        for (const auto& col : result.new_columns) row.push_back(cell_text(col.view(), col.dictionary, r));
        out += csv::join(row);
        out += '\n';
    }
    return out;
}

}  // namespace scopefe
