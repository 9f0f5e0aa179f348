#include "scopefe/assoc.hpp"

#include "oracle.hpp"
#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace scopefe;

namespace {

std::vector<std::int32_t> codes(const std::vector<int>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("pearson_abs hand cases") {
    CHECK(pearson_abs(std::vector<double>{1, 2, 3}, std::vector<double>{2, 4, 6}) == doctest::Approx(1.0));
    CHECK(pearson_abs(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) == doctest::Approx(1.0));
    CHECK(pearson_abs(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, -1, 1, -1}) ==
          doctest::Approx(0.5 / std::sqrt(1.25)).epsilon(1e-12));
    CHECK(pearson_abs(std::vector<double>{0.1, 0.1, 0.1}, std::vector<double>{1, 2, 3}) == 0.0);
    CHECK_THROWS_AS(pearson_abs(std::vector<double>{1, kMissing}, std::vector<double>{kMissing, 2}), Error);
}

TEST_CASE("pearson_abs uses pairwise-complete rows") {
    const std::vector<double> x{1, 2, kMissing, 3, 100};
    const std::vector<double> y{2, 4, 5, 6, kMissing};
    CHECK(pearson_abs(x, y) == doctest::Approx(1.0));
}

TEST_CASE("cramers_v hand cases") {
    std::vector<std::int32_t> a, b;
    for (int i = 0; i < 10; ++i) a.push_back(0), b.push_back(0);
    for (int i = 0; i < 10; ++i) a.push_back(1), b.push_back(1);
    CHECK(cramers_v(a, b) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<std::int32_t> constant(20, 0);
    CHECK(cramers_v(constant, b) == 0.0);

    std::vector<std::int32_t> three;
    for (int i = 0; i < 300; ++i) three.push_back(i % 3);
    CHECK(std::abs(cramers_v(three, three) - 1.0) <= 1e-9);
    CHECK(std::abs(cramers_v(three, three) - oracle::cramers_v({three.begin(), three.end()},
                                                               {three.begin(), three.end()})) <= 1e-9);

    CHECK_THROWS_AS(cramers_v(std::vector<std::int32_t>{-1}, std::vector<std::int32_t>{0}), Error);
}

TEST_CASE("eta_squared hand cases") {
    CHECK(eta_squared(codes({0, 0, 1, 1}), std::vector<double>{1, 2, 3, 4}) ==
          doctest::Approx(0.8).epsilon(1e-12));
    CHECK(eta_squared(codes({0, 0, 1, 1}), std::vector<double>{1, 3, 3, 1}) == doctest::Approx(0.0));
    CHECK(eta_squared(codes({0, 0, 1, 1}), std::vector<double>{5, 5, 7, 7}) == doctest::Approx(1.0));
    CHECK(eta_squared(codes({0, 1, 2}), std::vector<double>{4, 4, 4}) == 0.0);
    CHECK_THROWS_AS(eta_squared(codes({-1}), std::vector<double>{1}), Error);
}

TEST_CASE("statistics agree with the oracle on random inputs") {
    std::mt19937_64 gen(2024);
    for (int t = 0; t < 60; ++t) {
        const std::size_t n = 5 + gen() % 200;
        const int kx = 1 + static_cast<int>(gen() % 6), ky = 1 + static_cast<int>(gen() % 6);
        std::vector<double> x(n), y(n);
        std::vector<int> cx(n), cy(n);
        std::normal_distribution<double> g;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = g(gen);
            y[i] = 0.5 * x[i] + g(gen);
            cx[i] = static_cast<int>(gen() % kx);
            cy[i] = (gen() % 3 == 0) ? cx[i] % ky : static_cast<int>(gen() % ky);
            if (gen() % 10 == 0) x[i] = kMissing;
            if (gen() % 10 == 0) cy[i] = -1;
        }
        CHECK(std::abs(pearson_abs(x, y) - oracle::pearson_abs(x, y)) <= 1e-9);
        CHECK(std::abs(cramers_v(codes(cx), codes(cy)) - oracle::cramers_v(cx, cy)) <= 1e-9);
        CHECK(std::abs(eta_squared(codes(cx), y) - oracle::eta_squared(cx, y)) <= 1e-9);
        // Same-type statistics are symmetric.
        CHECK(pearson_abs(x, y) == pearson_abs(y, x));
        CHECK(std::abs(cramers_v(codes(cx), codes(cy)) - cramers_v(codes(cy), codes(cx))) <= 1e-15);
    }
}

TEST_CASE("similarity_matrix dispatch, shape and degenerate pairs") {
    using namespace testsupport;
    std::mt19937_64 gen(5);
    std::normal_distribution<double> g;
    const std::size_t n = 500;
    std::vector<double> a(n), noise_y(n, 0.0);
    std::vector<std::int32_t> cat(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = g(gen);
        cat[i] = static_cast<std::int32_t>(gen() % 4);
    }
    std::vector<Column> cols{numeric(a), numeric(a), categorical(cat, 4), numeric(std::vector<double>(n, 2.0))};
    const Dataset ds = make_dataset(std::move(cols), noise_y);
    const SimilarityMatrix s = similarity_matrix(ds, all_rows(n));
    REQUIRE(s.order() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(s(i, i) == 1.0);
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(s(i, j) == s(j, i));
            CHECK(s(i, j) >= 0.0);
            CHECK(s(i, j) <= 1.0);
        }
    }
    CHECK(s(0, 1) == doctest::Approx(1.0));
    const std::vector<int> cat_int(cat.begin(), cat.end());
    CHECK(std::abs(s(0, 2) - oracle::eta_squared(cat_int, a)) <= 1e-12);
    CHECK(s(0, 2) < 0.1);
    CHECK(s(0, 3) == 0.0);  // constant column
    CHECK(s.names[2] == "x3");

    const std::string text = to_csv(s);
    CHECK(std::count(text.begin(), text.end(), '\n') == 5);
    CHECK(text.rfind("x1,x2,x3,x4\n", 0) == 0);

    std::vector<Column> one{numeric(a)};
    CHECK_THROWS_AS(similarity_matrix(make_dataset(std::move(one), noise_y), all_rows(n)), Error);
}

TEST_CASE("similarity is invariant to joint row permutation") {
    const Dataset ds = testsupport::latent_groups(200, 6, 3, 4);
    RowIndexSet rows = all_rows(200);
    const SimilarityMatrix a = similarity_matrix(ds, rows);
    std::reverse(rows.rows.begin(), rows.rows.end());
    const SimilarityMatrix b = similarity_matrix(ds, rows);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-12);
}
