#pragma once

#include "scopefe/cluster.hpp"
#include "scopefe/tabular.hpp"

#include <optional>
#include <string>
#include <vector>

namespace scopefe {

enum class Arity { Unary, Binary };

/// Operand requirement for one slot.
enum class SlotKind { Numeric, Categorical, Any };

enum class OpCode {
    Abs, Log, Sqrt, Square, Sigmoid, Round, Freq, Sin, Cos,
    Add, Sub, Mul, Div, Min, Max,
    GroupByThenMean, GroupByThenMin, GroupByThenMax, GroupByThenMedian, GroupByThenStd,
    GroupByThenRank,
    Combine, CombineThenFreq, GroupByThenNUnique,
};

struct OperatorSpec {
    std::string name;
    OpCode code = OpCode::Abs;
    Arity arity = Arity::Unary;
    std::vector<SlotKind> slots;
    bool commutative = false;
    ColumnKind output = ColumnKind::Numeric;

    bool accepts(std::size_t slot, ColumnKind kind) const;
};

/// The 22-operator default roster.
std::vector<OperatorSpec> default_operator_set();

/// Looks up a known operator by name (includes sin/cos, which are not in
/// the default roster). Throws on unknown names.
OperatorSpec operator_by_name(const std::string& name);

struct CandidateFeature {
    OperatorSpec op;
    /// Index of the operator in the list it was enumerated from.
    std::size_t op_index = 0;
    /// Feature indices, canonical order for commutative operators.
    std::vector<std::size_t> operands;
    /// `op(name)` or `op(name1,name2)`.
    std::string key;
};

std::string canonical_key(const OperatorSpec& op, const std::vector<std::size_t>& operands,
                          const std::vector<ColumnMeta>& features);

/// Every type-compatible candidate, ordered by (operator, operands). Binary
/// candidates are restricted to admissible pairs when an assignment is given;
/// unary candidates never are.
std::vector<CandidateFeature> enumerate_candidates(const std::vector<ColumnMeta>& features,
                                                   const std::vector<OperatorSpec>& ops,
                                                   const ClusterAssignment* assign = nullptr);

/// Closed-form candidate counts without clustering.
struct CandidateCount {
    std::size_t unary = 0;
    std::size_t binary = 0;
    std::size_t total() const { return unary + binary; }
};

CandidateCount count_unconstrained(const std::vector<ColumnMeta>& features,
                                   const std::vector<OperatorSpec>& ops);

/// Evaluates a candidate over `rows` (output aligned to `rows`). Every
/// data-dependent statistic comes from `stats_rows` only.
Column materialize(const CandidateFeature& c, const Dataset& ds, const RowIndexSet& rows,
                   const RowIndexSet& stats_rows);

/// Evaluates over every dataset row.
Column materialize_all(const CandidateFeature& c, const Dataset& ds, const RowIndexSet& stats_rows);

}  // namespace scopefe
