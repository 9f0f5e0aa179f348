#include "scopefe/oper.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

namespace scopefe {

bool OperatorSpec::accepts(std::size_t slot, ColumnKind kind) const {
    switch (slots.at(slot)) {
        case SlotKind::Any: return true;
        case SlotKind::Numeric: return kind == ColumnKind::Numeric;
        case SlotKind::Categorical: return kind == ColumnKind::Categorical;
    }
    return false;
}

namespace {

using enum OpCode;

struct RosterEntry {
    const char* name;
    OpCode code;
    Arity arity;
    std::vector<SlotKind> slots;
    bool commutative;
    ColumnKind output;
};

const std::vector<RosterEntry>& known_operators() {
    constexpr auto N = SlotKind::Numeric;
    constexpr auto C = SlotKind::Categorical;
    constexpr auto A = SlotKind::Any;
    constexpr auto U = Arity::Unary;
    constexpr auto B = Arity::Binary;
    constexpr auto num = ColumnKind::Numeric;
    constexpr auto cat = ColumnKind::Categorical;
    static const std::vector<RosterEntry> ops = {
        {"abs", Abs, U, {N}, false, num},
        {"log", Log, U, {N}, false, num},
        {"sqrt", Sqrt, U, {N}, false, num},
        {"square", Square, U, {N}, false, num},
        {"sigmoid", Sigmoid, U, {N}, false, num},
        {"round", Round, U, {N}, false, num},
        {"freq", Freq, U, {A}, false, num},
        {"add", Add, B, {N, N}, true, num},
        {"sub", Sub, B, {N, N}, false, num},
        {"mul", Mul, B, {N, N}, true, num},
        {"div", Div, B, {N, N}, false, num},
        {"min", Min, B, {N, N}, true, num},
        {"max", Max, B, {N, N}, true, num},
        {"GroupByThenMean", GroupByThenMean, B, {C, N}, false, num},
        {"GroupByThenMin", GroupByThenMin, B, {C, N}, false, num},
        {"GroupByThenMax", GroupByThenMax, B, {C, N}, false, num},
        {"GroupByThenMedian", GroupByThenMedian, B, {C, N}, false, num},
        {"GroupByThenStd", GroupByThenStd, B, {C, N}, false, num},
        {"GroupByThenRank", GroupByThenRank, B, {C, N}, false, num},
        {"Combine", Combine, B, {C, C}, true, cat},
        {"CombineThenFreq", CombineThenFreq, B, {C, C}, true, num},
        {"GroupByThenNUnique", GroupByThenNUnique, B, {C, C}, false, num},
        // Not in the default roster; available by name.
        {"sin", Sin, U, {N}, false, num},
        {"cos", Cos, U, {N}, false, num},
    };
    return ops;
}

constexpr std::size_t kDefaultRosterSize = 22;

OperatorSpec to_spec(const RosterEntry& e) {
    return {e.name, e.code, e.arity, e.slots, e.commutative, e.output};
}

}  // namespace

std::vector<OperatorSpec> default_operator_set() {
    const auto& known = known_operators();
    std::vector<OperatorSpec> out;
    for (std::size_t i = 0; i < kDefaultRosterSize; ++i) out.push_back(to_spec(known[i]));
    return out;
}

OperatorSpec operator_by_name(const std::string& name) {
    for (const auto& e : known_operators()) {
        if (name == e.name) return to_spec(e);
    }
    throw Error("unknown operator '" + name + "'");
}

std::string canonical_key(const OperatorSpec& op, const std::vector<std::size_t>& operands,
                          const std::vector<ColumnMeta>& features) {
    std::string key = op.name + "(";
    for (std::size_t i = 0; i < operands.size(); ++i) {
        if (i) key += ",";
        key += features.at(operands[i]).name;
    }
    return key + ")";
}

namespace {

/// Features are addressed by ColumnMeta::index; build a lookup so callers
/// may pass any subset of the dataset's columns.
std::vector<ColumnMeta> by_index(const std::vector<ColumnMeta>& features) {
    std::size_t max_index = 0;
    for (const auto& f : features) max_index = std::max(max_index, f.index);
    std::vector<ColumnMeta> table(features.empty() ? 0 : max_index + 1);
    for (const auto& f : features) table[f.index] = f;
    return table;
}

}  // namespace

std::vector<CandidateFeature> enumerate_candidates(const std::vector<ColumnMeta>& features,
                                                   const std::vector<OperatorSpec>& ops,
                                                   const ClusterAssignment* assign) {
    const auto table = by_index(features);
    std::vector<std::size_t> idx;
    for (const auto& f : features) idx.push_back(f.index);
    std::sort(idx.begin(), idx.end());

    std::vector<CandidateFeature> out;
    for (std::size_t o = 0; o < ops.size(); ++o) {
        const OperatorSpec& op = ops[o];
        auto emit = [&](std::vector<std::size_t> operands) {
            CandidateFeature c;
            c.op = op;
            c.op_index = o;
            c.key = canonical_key(op, operands, table);
            c.operands = std::move(operands);
            out.push_back(std::move(c));
        };
        if (op.arity == Arity::Unary) {
            for (std::size_t i : idx) {
                if (op.accepts(0, table[i].kind)) emit({i});
            }
            continue;
        }
        for (std::size_t i : idx) {
            for (std::size_t j : idx) {
                if (i == j) continue;
                const bool forward = op.accepts(0, table[i].kind) && op.accepts(1, table[j].kind);
                if (op.commutative) {
                    // Canonical form is ascending; visit each unordered pair once.
                    if (i > j) continue;
                    const bool backward =
                        op.accepts(0, table[j].kind) && op.accepts(1, table[i].kind);
                    if (!forward && !backward) continue;
                } else if (!forward) {
                    continue;
                }
                if (assign && !pair_allowed(*assign, i, j)) continue;
                emit({i, j});
            }
        }
    }
    return out;
}

CandidateCount count_unconstrained(const std::vector<ColumnMeta>& features,
                                   const std::vector<OperatorSpec>& ops) {
    CandidateCount count;
    for (const auto& op : ops) {
        if (op.arity == Arity::Unary) {
            for (const auto& f : features) count.unary += op.accepts(0, f.kind) ? 1 : 0;
            continue;
        }
        std::size_t a = 0, b = 0, both = 0;
        for (const auto& f : features) {
            const bool in_a = op.accepts(0, f.kind), in_b = op.accepts(1, f.kind);
            a += in_a;
            b += in_b;
            both += in_a && in_b;
        }
        // Ordered pairs i != j with i in slot 0's set and j in slot 1's.
        const std::size_t ordered = a * b - both;
        // Commutative: pairs with both members in both sets are counted twice.
        count.binary += op.commutative ? ordered - both * (both - 1) / 2 : ordered;
    }
    return count;
}

namespace {

double finite_or_missing(double v) { return std::isfinite(v) ? v : kMissing; }

double unary_value(OpCode code, double x) {
    switch (code) {
        case Abs: return std::abs(x);
        case Log: return std::log(std::abs(x) + 1e-10);
        case Sqrt: return std::sqrt(std::abs(x));
        case Square: return x * x;
        case Sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case Round: return std::round(x);
        case Sin: return std::sin(x);
        case Cos: return std::cos(x);
        default: throw Error("unknown unary operator");
    }
}

double binary_value(OpCode code, double x, double y) {
    switch (code) {
        case Add: return x + y;
        case Sub: return x - y;
        case Mul: return x * y;
        case Div: return x / y;
        case Min: return std::min(x, y);
        case Max: return std::max(x, y);
        default: throw Error("unknown binary operator");
    }
}

struct GroupStats {
    std::vector<double> values;  // sorted
    double sum = 0.0;
};

double group_statistic(OpCode code, const GroupStats& g, double own_value) {
    const auto& v = g.values;
    const double n = static_cast<double>(v.size());
    switch (code) {
        case GroupByThenMean: return g.sum / n;
        case GroupByThenMin: return v.front();
        case GroupByThenMax: return v.back();
        case GroupByThenMedian: {
            const std::size_t h = v.size() / 2;
            return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
        }
        case GroupByThenStd: {
            if (v.size() < 2) return kMissing;
            const double mean = g.sum / n;
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            return std::sqrt(ss / (n - 1.0));
        }
        case GroupByThenRank: {
            if (is_missing(own_value)) return kMissing;
            auto lo = std::lower_bound(v.begin(), v.end(), own_value);
            auto hi = std::upper_bound(lo, v.end(), own_value);
            const double less = static_cast<double>(lo - v.begin());
            const double equal = static_cast<double>(hi - lo);
            return (less + 0.5 * equal) / n;
        }
        default: throw Error("unknown group-by operator");
    }
}

void check_operands(const CandidateFeature& c, const Dataset& ds) {
    const std::size_t want = c.op.arity == Arity::Unary ? 1 : 2;
    if (c.operands.size() != want) throw Error("materialize: wrong operand count for " + c.op.name);
    for (std::size_t s = 0; s < want; ++s) {
        if (c.operands[s] >= ds.num_features()) throw Error("materialize: operand out of range");
        if (!c.op.accepts(s, ds.column(c.operands[s]).kind)) {
            throw Error("materialize: kind mismatch for " + c.op.name + " on '" +
                        ds.column(c.operands[s]).name + "'");
        }
    }
}

std::int64_t pair_key(std::int32_t a, std::int32_t b) {
    return (static_cast<std::int64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

Column materialize(const CandidateFeature& c, const Dataset& ds, const RowIndexSet& rows,
                   const RowIndexSet& stats_rows) {
    check_operands(c, ds);
    const OpCode code = c.op.code;
    Column out;
    out.kind = c.op.output;
    if (out.kind == ColumnKind::Numeric) out.numeric.assign(rows.size(), kMissing);

    const std::size_t a = c.operands[0];
    switch (code) {
        case Abs: case Log: case Sqrt: case Square: case Sigmoid: case Round: case Sin: case Cos: {
            auto x = ds.numeric(a);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const double v = x[rows.rows[i]];
                if (!is_missing(v)) out.numeric[i] = finite_or_missing(unary_value(code, v));
            }
            return out;
        }
        case Freq: {
            if (ds.column(a).kind == ColumnKind::Numeric) {
                auto x = ds.numeric(a);
                std::unordered_map<double, double> counts;
                for (std::size_t r : stats_rows) {
                    if (!is_missing(x[r])) counts[x[r]] += 1.0;
                }
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    const double v = x[rows.rows[i]];
                    if (is_missing(v)) continue;
                    if (auto it = counts.find(v); it != counts.end()) out.numeric[i] = it->second;
                }
            } else {
                auto x = ds.codes(a);
                std::vector<double> counts(static_cast<std::size_t>(ds.cardinality(a)), 0.0);
                for (std::size_t r : stats_rows) {
                    if (!is_missing(x[r])) counts[x[r]] += 1.0;
                }
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    const std::int32_t v = x[rows.rows[i]];
                    if (!is_missing(v) && counts[v] > 0.0) out.numeric[i] = counts[v];
                }
            }
            return out;
        }
        default: break;
    }

    const std::size_t b = c.operands[1];
    switch (code) {
        case Add: case Sub: case Mul: case Div: case Min: case Max: {
            auto x = ds.numeric(a);
            auto y = ds.numeric(b);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const double u = x[rows.rows[i]], v = y[rows.rows[i]];
                if (!is_missing(u) && !is_missing(v)) {
                    out.numeric[i] = finite_or_missing(binary_value(code, u, v));
                }
            }
            return out;
        }
        case GroupByThenMean: case GroupByThenMin: case GroupByThenMax: case GroupByThenMedian:
        case GroupByThenStd: case GroupByThenRank: {
            auto key = ds.codes(a);
            auto val = ds.numeric(b);
            std::vector<GroupStats> groups(static_cast<std::size_t>(ds.cardinality(a)));
            for (std::size_t r : stats_rows) {
                if (is_missing(key[r]) || is_missing(val[r])) continue;
                groups[key[r]].values.push_back(val[r]);
                groups[key[r]].sum += val[r];
            }
            for (auto& g : groups) std::sort(g.values.begin(), g.values.end());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const std::int32_t k = key[rows.rows[i]];
                if (is_missing(k) || groups[k].values.empty()) continue;
                out.numeric[i] = finite_or_missing(group_statistic(code, groups[k], val[rows.rows[i]]));
            }
            return out;
        }
        case Combine: case CombineThenFreq: {
            auto x = ds.codes(a);
            auto y = ds.codes(b);
            std::map<std::int64_t, std::int32_t> counts;
            for (std::size_t r : stats_rows) {
                if (!is_missing(x[r]) && !is_missing(y[r])) ++counts[pair_key(x[r], y[r])];
            }
            if (code == CombineThenFreq) {
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    const std::size_t r = rows.rows[i];
                    if (is_missing(x[r]) || is_missing(y[r])) continue;
                    if (auto it = counts.find(pair_key(x[r], y[r])); it != counts.end()) {
                        out.numeric[i] = it->second;
                    }
                }
                return out;
            }
            // Combine: one category per pair seen in the statistics rows.
            std::map<std::int64_t, std::int32_t> codes;
            for (const auto& [k, n] : counts) {
                const auto next = static_cast<std::int32_t>(codes.size());
                codes[k] = next;
                const auto ca = static_cast<std::int32_t>(k >> 32);
                const auto cb = static_cast<std::int32_t>(k & 0xffffffff);
                const auto& da = ds.dictionary(a);
                const auto& db = ds.dictionary(b);
                out.dictionary.push_back(
                    (ca < static_cast<std::int32_t>(da.size()) ? da[ca] : std::to_string(ca)) + "|" +
                    (cb < static_cast<std::int32_t>(db.size()) ? db[cb] : std::to_string(cb)));
            }
            out.cardinality = static_cast<std::int32_t>(codes.size());
            out.codes.assign(rows.size(), kMissingCode);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const std::size_t r = rows.rows[i];
                if (is_missing(x[r]) || is_missing(y[r])) continue;
                if (auto it = codes.find(pair_key(x[r], y[r])); it != codes.end()) {
                    out.codes[i] = it->second;
                }
            }
            return out;
        }
        case GroupByThenNUnique: {
            auto x = ds.codes(a);
            auto y = ds.codes(b);
            std::vector<std::set<std::int32_t>> seen(static_cast<std::size_t>(ds.cardinality(a)));
            for (std::size_t r : stats_rows) {
                if (!is_missing(x[r]) && !is_missing(y[r])) seen[x[r]].insert(y[r]);
            }
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const std::int32_t k = x[rows.rows[i]];
                if (!is_missing(k) && !seen[k].empty()) {
                    out.numeric[i] = static_cast<double>(seen[k].size());
                }
            }
            return out;
        }
        default: break;
    }
    throw Error("materialize: unknown operator '" + c.op.name + "'");
}

Column materialize_all(const CandidateFeature& c, const Dataset& ds, const RowIndexSet& stats_rows) {
    return materialize(c, ds, all_rows(ds.num_rows()), stats_rows);
}

}  // namespace scopefe
