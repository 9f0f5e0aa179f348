#include "scopefe/select.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <numeric>

namespace scopefe {

ScoreRecord make_record(std::size_t candidate, std::string key, std::vector<double> samples,
                        double lambda) {
    if (samples.empty()) throw Error("make_record: no samples");
    ScoreRecord rec;
    rec.candidate = candidate;
    rec.key = std::move(key);
    const double n = static_cast<double>(samples.size());
    rec.mu = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    if (samples.size() > 1) {
        double ss = 0.0;
        for (double s : samples) ss += (s - rec.mu) * (s - rec.mu);
        rec.sigma = std::sqrt(ss / (n - 1.0));
    }
    rec.se = rec.sigma / std::sqrt(n);
    rec.r = rec.mu - lambda * rec.se;
    rec.samples = std::move(samples);
    return rec;
}

void ReliabilityConfig::validate() const {
    if (n_sub < 1) throw Error("reliability: n_sub must be >= 1");
    if (!(r_rel > 0.0 && r_rel <= 1.0)) throw Error("reliability: r_rel must be in (0, 1]");
    if (!(lambda >= 0.0)) throw Error("reliability: lambda must be non-negative");
}

void rank_records(std::vector<ScoreRecord>& records, const std::vector<double>& score) {
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return records[a].key < records[b].key;
    });
    std::vector<ScoreRecord> sorted;
    sorted.reserve(records.size());
    for (std::size_t i : order) sorted.push_back(std::move(records[i]));
    records = std::move(sorted);
}

std::vector<ScoreRecord> reliability_round(const EvalContext& ctx, const RowIndexSet& block0,
                                           const RowIndexSet& valid, const ReliabilityConfig& cfg,
                                           std::uint64_t seed) {
    cfg.validate();
    std::vector<RowIndexSet> subsets;
    for (int s = 0; s < cfg.n_sub; ++s) {
        // A single evaluation uses the whole block, which is the plain
        // single-split round.
        const double ratio = cfg.n_sub == 1 ? 1.0 : cfg.r_rel;
        subsets.push_back(subsample(block0, ratio, false, {},
                                    derive_seed(seed, "reliability", {static_cast<std::uint64_t>(s)})));
        if (subsets.back().size() < static_cast<std::size_t>(ctx.params.min_leaf)) {
            throw Error("reliability_round: subsample smaller than the booster's min_leaf");
        }
    }

    const std::size_t n = ctx.candidates.size();
    std::vector<std::vector<double>> samples(n);
    std::vector<char> ok(n, 0);
    parallel_for(n, ctx.workers, [&](std::size_t c) {
        try {
            const Column col = materialize_all(ctx.candidates[c], ctx.ds, ctx.stats_rows);
            const ColumnView view = col.view();
            for (const auto& sub : subsets) {
                samples[c].push_back(feature_boost({&view, 1}, ctx.ds.target(), ctx.ds.task(), sub,
                                                   valid, ctx.baseline, ctx.params)
                                         .delta);
            }
            ok[c] = 1;
        } catch (const Error& e) {
            spdlog::debug("reliability: {} not scored: {}", ctx.candidates[c].key, e.what());
        }
    });

    std::vector<ScoreRecord> records;
    std::vector<double> score;
    for (std::size_t c = 0; c < n; ++c) {
        if (!ok[c]) continue;
        records.push_back(make_record(c, ctx.candidates[c].key, std::move(samples[c]), cfg.lambda));
        records.back().round_scores.push_back(records.back().r);
        score.push_back(records.back().r);
    }
    rank_records(records, score);
    return records;
}

HalvingResult successive_halving(const EvalContext& ctx, std::vector<ScoreRecord> ranked,
                                 const BlockSchedule& blocks, const RowIndexSet& valid,
                                 double keep_ratio,
                                 const std::vector<std::vector<double>>& round_baselines) {
    if (blocks.rounds.empty()) throw Error("successive_halving: empty block schedule");
    if (!(keep_ratio > 0.0 && keep_ratio <= 1.0)) {
        throw Error("successive_halving: keep_ratio must be in (0, 1]");
    }
    HalvingResult out;
    out.records = std::move(ranked);
    const std::size_t last = blocks.rounds.size() - 1;

    // Indices into out.records, in current rank order.
    std::vector<std::size_t> current(out.records.size());
    std::iota(current.begin(), current.end(), std::size_t{0});
    out.round_counts.push_back(current.size());

    if (last == 0) {
        std::erase_if(current, [&](std::size_t i) { return !(out.records[i].r > 0.0); });
        out.survivors = std::move(current);
        return out;
    }

    for (std::size_t round = 1; round <= last && !current.empty(); ++round) {
        const auto keep = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(keep_ratio * static_cast<double>(current.size()))));
        current.resize(std::min(keep, current.size()));
        out.round_counts.push_back(current.size());

        std::span<const double> baseline = ctx.baseline;
        if (!round_baselines.empty()) baseline = round_baselines.at(round);
        std::vector<double> delta(current.size(), -std::numeric_limits<double>::infinity());
        parallel_for(current.size(), ctx.workers, [&](std::size_t i) {
            const auto& rec = out.records[current[i]];
            try {
                const Column col = materialize_all(ctx.candidates[rec.candidate], ctx.ds, ctx.stats_rows);
                const ColumnView view = col.view();
                delta[i] = feature_boost({&view, 1}, ctx.ds.target(), ctx.ds.task(),
                                         blocks.rounds[round], valid, baseline, ctx.params)
                               .delta;
            } catch (const Error& e) {
                spdlog::debug("halving: {} not scored: {}", rec.key, e.what());
            }
        });
        for (std::size_t i = 0; i < current.size(); ++i) {
            auto& rec = out.records[current[i]];
            rec.round_scores.push_back(delta[i]);
            rec.survived_until = static_cast<int>(round);
        }

        std::vector<std::size_t> order(current.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (delta[a] != delta[b]) return delta[a] > delta[b];
            return out.records[current[a]].key < out.records[current[b]].key;
        });
        std::vector<std::size_t> next;
        for (std::size_t i : order) {
            if (round == last && !(delta[i] > 0.0)) continue;
            next.push_back(current[i]);
        }
        current = std::move(next);
    }
    out.survivors = std::move(current);
    return out;
}

Selection final_select(const EvalContext& ctx, const std::vector<std::size_t>& survivors,
                       const RowIndexSet& train, const RowIndexSet& valid, int top_k,
                       std::uint64_t seed) {
    if (top_k < 1) throw Error("final_select: top_k must be >= 1");
    Selection out;
    if (survivors.empty()) return out;

    std::vector<Column> columns;
    columns.reserve(survivors.size());
    for (std::size_t c : survivors) {
        columns.push_back(materialize_all(ctx.candidates.at(c), ctx.ds, ctx.stats_rows));
    }
    std::vector<ColumnView> views;
    for (const auto& c : columns) views.push_back(c.view());
    const FitResult fr = fit(views, ctx.ds.target(), ctx.ds.task(), ctx.baseline, train, valid,
                             ctx.params, derive_seed(seed, "final-select"));
    out.survivor_gains = attribution(fr.model);

    std::vector<std::size_t> order(survivors.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (out.survivor_gains[a] != out.survivor_gains[b]) {
            return out.survivor_gains[a] > out.survivor_gains[b];
        }
        return ctx.candidates[survivors[a]].key < ctx.candidates[survivors[b]].key;
    });
    for (std::size_t i : order) {
        if (out.candidates.size() == static_cast<std::size_t>(top_k)) break;
        if (!(out.survivor_gains[i] > 0.0)) break;
        out.candidates.push_back(survivors[i]);
        out.gains.push_back(out.survivor_gains[i]);
    }
    return out;
}

}  // namespace scopefe
