#include "scopefe/tabular.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace scopefe;

namespace {

LoadOptions opts(std::string target = "y") {
    LoadOptions o;
    o.target = std::move(target);
    return o;
}

bool disjoint_exhaustive(const RowIndexSet& a, const RowIndexSet& b, std::size_t n) {
    std::vector<int> seen(n, 0);
    for (auto r : a) ++seen[r];
    for (auto r : b) ++seen[r];
    return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
}

}  // namespace

TEST_CASE("type inference from parseability and repetition") {
    const Dataset ds = parse_csv("a,b,y\n1,x,0.5\n2,y,1.0\n", opts());
    REQUIRE(ds.num_features() == 2);
    CHECK(ds.column(0).kind == ColumnKind::Numeric);
    CHECK(ds.column(1).kind == ColumnKind::Categorical);
    CHECK(ds.target() == std::vector<double>{0.5, 1.0});
    CHECK(ds.dictionary(1) == std::vector<std::string>{"x", "y"});
}

TEST_CASE("low-cardinality numeric column becomes categorical") {
    std::string text = "flag,y\n";
    for (int i = 0; i < 100; ++i) text += std::to_string(i % 2) + "," + std::to_string(i) + "\n";
    const Dataset ds = parse_csv(text, opts());
    CHECK(ds.column(0).kind == ColumnKind::Categorical);
    CHECK(ds.cardinality(0) == 2);

    LoadOptions o = opts();
    o.kind_overrides["flag"] = ColumnKind::Numeric;
    CHECK(parse_csv(text, o).column(0).kind == ColumnKind::Numeric);
}

TEST_CASE("many distinct numeric values stay numeric") {
    std::string text = "v,y\n";
    for (int i = 0; i < 50; ++i) text += std::to_string(i % 25) + "," + std::to_string(i) + "\n";
    CHECK(parse_csv(text, opts()).column(0).kind == ColumnKind::Numeric);
}

TEST_CASE("missing cells and NA become missing") {
    std::string text = "a,c,y\n1,p,1\n,NA,2\nNA,q,3\n4,,4\n";
    const Dataset ds = parse_csv(text, opts());
    CHECK(is_missing(ds.numeric(0)[1]));
    CHECK(is_missing(ds.numeric(0)[2]));
    CHECK(ds.numeric(0)[3] == 4.0);
    CHECK(is_missing(ds.codes(1)[1]));
    CHECK(is_missing(ds.codes(1)[3]));
}

TEST_CASE("load errors") {
    CHECK_THROWS_WITH_AS(parse_csv("a,y\n", opts()), doctest::Contains("zero data rows"), Error);
    CHECK_THROWS_WITH_AS(parse_csv("a,b\n1,2\n", opts()), doctest::Contains("absent"), Error);
    CHECK_THROWS_WITH_AS(parse_csv("a,b,y\n1,,1\n2,,2\n", opts()), doctest::Contains("zero non-missing"),
                         Error);
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", opts()), Error);
    LoadOptions multi = opts();
    multi.task = Task::Binary;
    CHECK_THROWS_WITH_AS(parse_csv("a,y\n1,p\n2,q\n3,r\n", multi), doctest::Contains("unsupported task"),
                         Error);
    CHECK_THROWS_WITH_AS(parse_task("multiclass"), doctest::Contains("unsupported task"), Error);
}

TEST_CASE("binary target keeps labels and target position") {
    LoadOptions o = opts("label");
    o.task = Task::Binary;
    const Dataset ds = parse_csv("label,a\nno,1\nyes,2\nno,3\n", o);
    CHECK(ds.target() == std::vector<double>{0, 1, 0});
    CHECK(ds.class_labels() == std::vector<std::string>{"no", "yes"});
    CHECK(ds.target_position() == 0);
}

TEST_CASE("split sizes, disjointness and determinism") {
    const Dataset ds = testsupport::planted_product(10, 2, 1);
    const auto [train, valid] = split(ds, 0.2, false, 7);
    CHECK(valid.size() == 2);
    CHECK(train.size() == 8);
    CHECK(disjoint_exhaustive(train, valid, 10));
    const auto again = split(ds, 0.2, false, 7);
    CHECK(again.first == train);
    CHECK(again.second == valid);
    CHECK(split(ds, 0.2, false, 8).second != valid);
    CHECK_THROWS_AS(split(ds, 1.0, false, 7), Error);
}

TEST_CASE("stratified split keeps class proportions") {
    std::vector<double> y(100);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 2 == 0 ? 1.0 : 0.0;
    std::vector<Column> cols{testsupport::numeric(std::vector<double>(100, 1.0))};
    const Dataset ds = testsupport::make_dataset(std::move(cols), y, Task::Binary);
    const auto [train, valid] = split(ds, 0.2, true, 3);
    int ones = 0;
    for (auto r : valid) ones += static_cast<int>(y[r]);
    CHECK(valid.size() == 20);
    CHECK(ones == 10);
    CHECK(disjoint_exhaustive(train, valid, 100));

    std::vector<double> lonely(10, 0.0);
    lonely[0] = 1.0;
    std::vector<Column> c2{testsupport::numeric(std::vector<double>(10, 1.0))};
    const Dataset bad = testsupport::make_dataset(std::move(c2), lonely, Task::Binary);
    CHECK_THROWS_AS(split(bad, 0.2, true, 3), Error);
    CHECK_THROWS_AS(split(testsupport::planted_product(10, 2, 1), 0.2, true, 3), Error);
}

TEST_CASE("subsample sizes and stratification") {
    const RowIndexSet src = all_rows(1000);
    CHECK(subsample(src, 0.1, false, {}, 1).size() == 100);
    CHECK(subsample(src, 1.0, false, {}, 1).rows == src.rows);
    CHECK(subsample(all_rows(3), 0.01, false, {}, 1).size() == 1);

    std::vector<double> labels(1000, 0.0);
    for (std::size_t i = 0; i < 100; ++i) labels[i * 10] = 1.0;
    const RowIndexSet s = subsample(src, 0.1, true, labels, 4);
    int ones = 0;
    for (auto r : s) ones += static_cast<int>(labels[r]);
    CHECK(s.size() == 100);
    CHECK(ones == 10);
    CHECK(std::is_sorted(s.rows.begin(), s.rows.end()));
    CHECK(subsample(src, 0.1, true, labels, 4) == s);
    CHECK_THROWS_AS(subsample(src, 0.1, true, {}, 4), Error);
    CHECK_THROWS_AS(subsample(src, 0.0, false, {}, 4), Error);
}

TEST_CASE("make_blocks doubles and nests") {
    const RowIndexSet train = all_rows(800);
    const BlockSchedule b = make_blocks(train, 3, 9);
    REQUIRE(b.rounds.size() == 4);
    CHECK(b.rounds[0].size() == 100);
    CHECK(b.rounds[1].size() == 200);
    CHECK(b.rounds[2].size() == 400);
    CHECK(b.rounds[3].rows == train.rows);
    for (std::size_t r = 1; r < b.rounds.size(); ++r) {
        CHECK(std::includes(b.rounds[r].begin(), b.rounds[r].end(), b.rounds[r - 1].begin(),
                            b.rounds[r - 1].end()));
    }
    const BlockSchedule single = make_blocks(train, 0, 9);
    REQUIRE(single.rounds.size() == 1);
    CHECK(single.rounds[0].rows == train.rows);
    CHECK_THROWS_AS(make_blocks(train, -1, 9), Error);
    CHECK_THROWS_AS(make_blocks(all_rows(4), 3, 9), Error);
}

TEST_CASE("take_rows copies the selected rows") {
    const Dataset ds = testsupport::planted_product(20, 3, 2);
    RowIndexSet rows{{3, 7, 11}, 0};
    const Dataset sub = take_rows(ds, rows);
    CHECK(sub.num_rows() == 3);
    CHECK(sub.numeric(1)[2] == ds.numeric(1)[11]);
    CHECK(sub.target()[0] == ds.target()[3]);
}

TEST_CASE("dataset constructor validation") {
    using testsupport::numeric;
    CHECK_THROWS_AS(Dataset({"a", "a"}, {numeric({1.0}), numeric({2.0})}, "y", {0.0}, Task::Regression),
                    Error);
    CHECK_THROWS_AS(Dataset({"a"}, {numeric({1.0, 2.0})}, "y", {0.0}, Task::Regression), Error);
    CHECK_THROWS_AS(Dataset({"a"}, {testsupport::categorical({0, 3}, 2)}, "y", {0.0, 1.0}, Task::Regression),
                    Error);
}
