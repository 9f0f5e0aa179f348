#include "scopefe/oper.hpp"

#include "oracle.hpp"
#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace scopefe;
using testsupport::categorical;
using testsupport::make_dataset;
using testsupport::numeric;

namespace {

std::vector<ColumnMeta> metas(std::vector<ColumnKind> kinds) {
    std::vector<ColumnMeta> out;
    for (std::size_t i = 0; i < kinds.size(); ++i) out.push_back({"f" + std::to_string(i), kinds[i], i});
    return out;
}

std::vector<ColumnMeta> numeric_metas(std::size_t d) {
    return metas(std::vector<ColumnKind>(d, ColumnKind::Numeric));
}

std::vector<std::string> keys(const std::vector<CandidateFeature>& c) {
    std::vector<std::string> out;
    for (const auto& f : c) out.push_back(f.key);
    return out;
}

CandidateFeature candidate(const std::string& op, std::vector<std::size_t> operands, const Dataset& ds) {
    CandidateFeature c;
    c.op = operator_by_name(op);
    c.operands = std::move(operands);
    c.key = canonical_key(c.op, c.operands, ds.columns());
    return c;
}

}  // namespace

TEST_CASE("default roster") {
    const auto ops = default_operator_set();
    CHECK(ops.size() == 22);
    CHECK(std::count_if(ops.begin(), ops.end(), [](const OperatorSpec& o) { return o.arity == Arity::Unary; }) == 7);
    CHECK(operator_by_name("mul").commutative);
    CHECK_FALSE(operator_by_name("sub").commutative);
    const OperatorSpec g = operator_by_name("GroupByThenMean");
    CHECK(g.slots == std::vector<SlotKind>{SlotKind::Categorical, SlotKind::Numeric});
    CHECK(operator_by_name("sin").arity == Arity::Unary);
    CHECK(std::none_of(ops.begin(), ops.end(), [](const OperatorSpec& o) { return o.name == "sin"; }));
    CHECK_THROWS_AS(operator_by_name("tan"), Error);
}

TEST_CASE("enumeration counts") {
    const auto f6 = numeric_metas(6);
    const std::vector<OperatorSpec> mul{operator_by_name("mul")};
    CHECK(enumerate_candidates(f6, mul).size() == 15);

    const ClusterAssignment h = HardAssignment{{0, 0, 0, 1, 1, 1}, 2};
    CHECK(enumerate_candidates(f6, mul, &h).size() == 6);

    const auto sub3 = enumerate_candidates(numeric_metas(3), {operator_by_name("sub")});
    CHECK(keys(sub3) == std::vector<std::string>{"sub(f0,f1)", "sub(f0,f2)", "sub(f1,f0)", "sub(f1,f2)",
                                                 "sub(f2,f0)", "sub(f2,f1)"});

    const auto unary = enumerate_candidates(f6, {operator_by_name("log")}, &h);
    CHECK(unary.size() == 6);
}

TEST_CASE("canonical keys and commutative ordering") {
    const auto f = metas({ColumnKind::Numeric, ColumnKind::Categorical, ColumnKind::Numeric});
    const auto c = enumerate_candidates(f, {operator_by_name("mul"), operator_by_name("GroupByThenMean")});
    CHECK(keys(c) == std::vector<std::string>{"mul(f0,f2)", "GroupByThenMean(f1,f0)", "GroupByThenMean(f1,f2)"});
    CHECK(c[0].operands == std::vector<std::size_t>{0, 2});
    CHECK(c[1].op_index == 1);
}

TEST_CASE("constrained enumeration equals the brute-force filter") {
    std::mt19937_64 gen(12);
    const auto ops = default_operator_set();
    for (int t = 0; t < 20; ++t) {
        const std::size_t d = 2 + gen() % 12;
        std::vector<ColumnKind> kinds;
        for (std::size_t i = 0; i < d; ++i) kinds.push_back(gen() % 3 == 0 ? ColumnKind::Categorical : ColumnKind::Numeric);
        const auto f = metas(kinds);
        const int k = 1 + static_cast<int>(gen() % 3);
        SoftAssignment s;
        s.k = k;
        for (std::size_t i = 0; i < d; ++i) {
            std::vector<int> labels;
            for (int c = 0; c < k; ++c) {
                if (gen() % 2) labels.push_back(c);
            }
            if (labels.empty()) labels.push_back(static_cast<int>(gen() % k));
            s.labels.push_back(labels);
        }
        const ClusterAssignment a = s;
        CHECK(keys(enumerate_candidates(f, ops, &a)) == oracle::brute_candidates(f, ops, s.labels, true));
        const auto unconstrained = enumerate_candidates(f, ops);
        CHECK(keys(unconstrained) == oracle::brute_candidates(f, ops, s.labels, false));
        const CandidateCount cc = count_unconstrained(f, ops);
        CHECK(cc.total() == unconstrained.size());

        // One shared cluster admits everything.
        const ClusterAssignment one = HardAssignment{std::vector<int>(d, 0), 1};
        CHECK(keys(enumerate_candidates(f, ops, &one)) == keys(unconstrained));
    }
}

TEST_CASE("balanced hard clusters follow the closed-form binary count") {
    const std::size_t tau = 4, kk = 3, d = tau * kk;
    std::vector<int> labels;
    for (std::size_t i = 0; i < d; ++i) labels.push_back(static_cast<int>(i / tau));
    const ClusterAssignment h = HardAssignment{labels, static_cast<int>(kk)};
    const auto ops = default_operator_set();
    const auto c = enumerate_candidates(numeric_metas(d), ops, &h);
    std::size_t binary = 0;
    for (const auto& x : c) binary += x.op.arity == Arity::Binary;
    // 4 commutative and 2 ordered numeric binary operators.
    CHECK(binary == 4 * kk * (tau * (tau - 1) / 2) + 2 * kk * tau * (tau - 1));
}

TEST_CASE("materialize arithmetic and domain rules") {
    const Dataset ds = make_dataset({numeric({1, 2, 3}), numeric({4, 5, 6}), numeric({0, -4, kMissing})}, {0, 0, 0});
    const RowIndexSet all = all_rows(3);
    CHECK(materialize(candidate("mul", {0, 1}, ds), ds, all, all).numeric == std::vector<double>{4, 10, 18});

    const Dataset dz = make_dataset({numeric({1, 2}), numeric({0, 4})}, {0, 0});
    const Column div = materialize(candidate("div", {0, 1}, dz), dz, all_rows(2), all_rows(2));
    CHECK(is_missing(div.numeric[0]));
    CHECK(div.numeric[1] == 0.5);

    const Column lg = materialize(candidate("log", {2}, ds), ds, all, all);
    CHECK(lg.numeric[0] == doctest::Approx(std::log(1e-10)));
    CHECK(lg.numeric[1] == doctest::Approx(std::log(4.0)));
    CHECK(is_missing(lg.numeric[2]));
    CHECK(materialize(candidate("sqrt", {2}, ds), ds, all, all).numeric[1] == 2.0);
    CHECK(materialize(candidate("sigmoid", {2}, ds), ds, all, all).numeric[0] == 0.5);
    CHECK(materialize(candidate("round", {0}, ds), ds, all, all).numeric == std::vector<double>{1, 2, 3});
}

TEST_CASE("group-by statistics come from the statistics rows") {
    const Dataset ds = make_dataset({categorical({0, 0, 1, 1, 2}, 3), numeric({1, 3, 10, 20, 7})}, {0, 0, 0, 0, 0});
    const RowIndexSet first3{{0, 1, 2}, 0};
    const RowIndexSet all = all_rows(5);
    CHECK(materialize(candidate("GroupByThenMean", {0, 1}, ds), ds, first3, first3).numeric ==
          std::vector<double>{2, 2, 10});

    // Rows 3 and 4: group 1 uses training value 10 only; group 2 unseen.
    const Column m = materialize(candidate("GroupByThenMean", {0, 1}, ds), ds, all, first3);
    CHECK(m.numeric[3] == 10.0);
    CHECK(is_missing(m.numeric[4]));

    const Column sd = materialize(candidate("GroupByThenStd", {0, 1}, ds), ds, all, all);
    CHECK(sd.numeric[0] == doctest::Approx(std::sqrt(2.0)));
    CHECK(is_missing(sd.numeric[4]));
    CHECK(materialize(candidate("GroupByThenMedian", {0, 1}, ds), ds, all, all).numeric[2] == 15.0);
    CHECK(materialize(candidate("GroupByThenMax", {0, 1}, ds), ds, all, all).numeric[0] == 3.0);
    CHECK(materialize(candidate("GroupByThenMin", {0, 1}, ds), ds, all, all).numeric[3] == 10.0);
    const Column rank = materialize(candidate("GroupByThenRank", {0, 1}, ds), ds, all, all);
    CHECK(rank.numeric[0] == 0.25);
    CHECK(rank.numeric[1] == 0.75);

    const Column freq = materialize(candidate("freq", {0}, ds), ds, all, first3);
    CHECK(freq.numeric[0] == 2.0);
    CHECK(freq.numeric[3] == 1.0);
    CHECK(is_missing(freq.numeric[4]));
}

TEST_CASE("categorical pair operators") {
    const Dataset ds = make_dataset({categorical({0, 0, 1, 1}, 2), categorical({0, 1, 1, 1}, 2)}, {0, 0, 0, 0});
    const RowIndexSet all = all_rows(4);
    const Column comb = materialize(candidate("Combine", {0, 1}, ds), ds, all, all);
    CHECK(comb.kind == ColumnKind::Categorical);
    CHECK(comb.cardinality == 3);
    CHECK(comb.codes[2] == comb.codes[3]);
    CHECK(comb.dictionary[static_cast<std::size_t>(comb.codes[0])] == "c0|c0");
    CHECK(materialize(candidate("CombineThenFreq", {0, 1}, ds), ds, all, all).numeric ==
          std::vector<double>{1, 1, 2, 2});
    CHECK(materialize(candidate("GroupByThenNUnique", {0, 1}, ds), ds, all, all).numeric ==
          std::vector<double>{2, 2, 1, 1});
}

TEST_CASE("materialize rejects kind mismatches") {
    const Dataset ds = make_dataset({categorical({0, 1}, 2), numeric({1, 2})}, {0, 0});
    CandidateFeature bad;
    bad.op = operator_by_name("mul");
    bad.operands = {0, 1};
    CHECK_THROWS_AS(materialize_all(bad, ds, all_rows(2)), Error);
}

TEST_CASE("training-row materialization ignores validation rows") {
    const Dataset ds = make_dataset({categorical({0, 0, 1, 1, 0, 1}, 2), numeric({1, 2, 3, 4, 100, 200})},
                                    std::vector<double>(6, 0.0));
    const RowIndexSet train{{0, 1, 2, 3}, 0};
    const Dataset only_train = take_rows(ds, train);
    const Column full = materialize(candidate("GroupByThenMean", {0, 1}, ds), ds, train, train);
    const Column compact = materialize_all(candidate("GroupByThenMean", {0, 1}, only_train), only_train, all_rows(4));
    CHECK(full.numeric == compact.numeric);
}
