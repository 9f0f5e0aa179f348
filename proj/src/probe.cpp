#include "scopefe/probe.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <numeric>

namespace scopefe {

int ProbeConfig::effective_n_top(std::size_t p) const {
    return n_top > 0 ? n_top : static_cast<int>((p + 1) / 2);
}

void ProbeConfig::validate(std::size_t p) const {
    if (!(r_probe > 0.0 && r_probe <= 1.0)) throw Error("probe: r_probe must be in (0, 1]");
    if (n_cand < 1) throw Error("probe: n_cand must be >= 1");
    if (k < 1 || k > n_cand) throw Error("probe: k must be in [1, n_cand]");
    const int top = effective_n_top(p);
    if (top < 1 || static_cast<std::size_t>(top) > p) throw Error("probe: N_top must be in [1, p]");
}

std::vector<CandidateFeature> type_aware_sample(const OperatorSpec& op,
                                                const std::vector<ColumnMeta>& features,
                                                int n_cand, std::uint64_t seed) {
    auto universe = enumerate_candidates(features, {op}, nullptr);
    if (n_cand < 0) throw Error("type_aware_sample: negative n_cand");
    const std::size_t want = static_cast<std::size_t>(n_cand);
    if (universe.size() <= want) return universe;

    std::vector<std::size_t> order(universe.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Partial Fisher-Yates: the first `want` slots are a uniform sample.
    Rng rng(seed);
    for (std::size_t i = 0; i < want; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(order.size() - i));
        std::swap(order[i], order[j]);
    }
    order.resize(want);
    std::sort(order.begin(), order.end());
    std::vector<CandidateFeature> out;
    out.reserve(want);
    for (std::size_t i : order) out.push_back(std::move(universe[i]));
    return out;
}

double top_k_mean(std::vector<double> deltas, int k, std::vector<double>* top) {
    std::erase_if(deltas, [](double d) { return !std::isfinite(d); });
    if (deltas.empty() || k < 1) {
        if (top) top->clear();
        return -std::numeric_limits<double>::infinity();
    }
    std::sort(deltas.begin(), deltas.end(), std::greater<>());
    deltas.resize(std::min(deltas.size(), static_cast<std::size_t>(k)));
    const double mean = std::accumulate(deltas.begin(), deltas.end(), 0.0) /
                        static_cast<double>(deltas.size());
    if (top) *top = deltas;
    return mean;
}

namespace {

RowIndexSet probe_part(const Dataset& ds, const RowIndexSet& part, const ProbeConfig& cfg,
                       std::string_view stage) {
    double ratio = cfg.r_probe;
    if (!part.empty()) {
        const double floor_ratio =
            std::min(1.0, static_cast<double>(cfg.min_rows) / static_cast<double>(part.size()));
        ratio = std::max(ratio, floor_ratio);
    }
    const bool stratify = ds.task() == Task::Binary;
    return subsample(part, ratio, stratify, ds.target(), derive_seed(cfg.seed, stage));
}

/// Positions of `subset` rows within the concatenation `all`.
RowIndexSet remap(std::size_t offset, std::size_t count) {
    RowIndexSet out;
    out.rows.resize(count);
    std::iota(out.rows.begin(), out.rows.end(), offset);
    return out;
}

}  // namespace

ProbeResult operator_probing(const Dataset& ds, const RowIndexSet& train, const RowIndexSet& valid,
                             const std::vector<OperatorSpec>& ops, const ProbeConfig& cfg,
                             const BoostParams& params) {
    cfg.validate(ops.size());
    const RowIndexSet probe_train = probe_part(ds, train, cfg, "probe-train");
    const RowIndexSet probe_valid = probe_part(ds, valid, cfg, "probe-valid");
    if (probe_train.size() < static_cast<std::size_t>(std::max(cfg.folds, 2)) || probe_valid.empty()) {
        throw Error("probe: probe subset too small for the fold count");
    }

    // Work on a compact copy holding only the probe rows.
    RowIndexSet union_rows = probe_train;
    union_rows.rows.insert(union_rows.rows.end(), probe_valid.rows.begin(), probe_valid.rows.end());
    const Dataset probe = take_rows(ds, union_rows);
    const RowIndexSet ptrain = remap(0, probe_train.size());
    const RowIndexSet pvalid = remap(probe_train.size(), probe_valid.size());

    ProbeResult result;
    result.probe_train_rows = ptrain.size();
    result.probe_valid_rows = pvalid.size();
    const Baseline baseline =
        oof_baseline(probe, ptrain, pvalid, cfg.folds, params, derive_seed(cfg.seed, "probe-oof"));
    result.l_init = baseline.l_init;

    result.scores.resize(ops.size());
    struct Job {
        std::size_t op;
        std::size_t cand;
    };
    std::vector<Job> jobs;
    for (std::size_t o = 0; o < ops.size(); ++o) {
        auto& s = result.scores[o];
        s.op = ops[o].name;
        s.candidates = type_aware_sample(ops[o], ds.columns(), cfg.n_cand,
                                         derive_seed(cfg.seed, "probe-sample", {o}));
        for (auto& c : s.candidates) c.op_index = o;
        s.deltas.assign(s.candidates.size(), kMissing);
        for (std::size_t c = 0; c < s.candidates.size(); ++c) jobs.push_back({o, c});
    }

    parallel_for(jobs.size(), cfg.workers, [&](std::size_t j) {
        const Job job = jobs[j];
        auto& s = result.scores[job.op];
        try {
            const Column col = materialize_all(s.candidates[job.cand], probe, ptrain);
            const ColumnView view = col.view();
            s.deltas[job.cand] = feature_boost({&view, 1}, probe.target(), probe.task(), ptrain,
                                               pvalid, baseline.predictions, params)
                                     .delta;
        } catch (const Error& e) {
            spdlog::debug("probe: {} not scored: {}", s.candidates[job.cand].key, e.what());
        }
    });

    for (auto& s : result.scores) s.score = top_k_mean(s.deltas, cfg.k, &s.top_deltas);

    std::vector<std::size_t> order(ops.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return result.scores[a].score > result.scores[b].score;
    });
    const auto n_top = static_cast<std::size_t>(cfg.effective_n_top(ops.size()));
    std::size_t taken = 0;
    for (std::size_t o : order) {
        if (taken == n_top) break;
        if (!std::isfinite(result.scores[o].score)) continue;
        result.scores[o].selected = true;
        ++taken;
    }
    for (std::size_t o = 0; o < ops.size(); ++o) {
        if (result.scores[o].selected) result.selected.push_back(ops[o]);
    }
    return result;
}

}  // namespace scopefe
