#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "loctail/field_model.hpp"
#include "loctail/rng.hpp"
#include "loctail/tour.hpp"
#include "oracle_helpers.hpp"

using namespace loctail;

namespace {

Eigen::VectorXd vec1(double x) {
    Eigen::VectorXd v(1);
    v << x;
    return v;
}

Eigen::VectorXd vec2(double x, double y) {
    Eigen::VectorXd v(2);
    v << x, y;
    return v;
}

std::vector<Eigen::VectorXd> random_cube_points(RngStream& rng, int n, int N) {
    std::vector<Eigen::VectorXd> pts;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd t(N);
        for (int j = 0; j < N; ++j) t[j] = rng.next_unit();
        pts.push_back(std::move(t));
    }
    return pts;
}

}  // namespace

TEST_CASE("alpha normalization restores the triangle inequality") {
    ScalingVector a({1.0, 0.5});
    auto na = normalized_alpha(a);
    CHECK(na[0] == doctest::Approx(2.0));
    CHECK(na[1] == doctest::Approx(1.0));
    ScalingVector b({1.0, 2.0});
    auto nb = normalized_alpha(b);
    CHECK(nb[0] == doctest::Approx(1.0));
    CHECK(nb[1] == doctest::Approx(2.0));
}

TEST_CASE("narrowing order on a hand-checked configuration") {
    // line positions 0.9, 0.1, 0.85, 0.3: start = argmax norm = index 0
    std::vector<Eigen::VectorXd> pts{vec1(0.9), vec1(0.1), vec1(0.85), vec1(0.3)};
    ScalingVector alpha({1.0});
    auto order = narrowing_order(pts, alpha);
    REQUIRE(order.size() == 4);
    // t_4 = 0.9; nearest remaining: 0.85; then 0.3 is nearest to 0.85? no: walk
    // continues from each new point: t_3 = 0.85, t_2 = nearest to 0.85 -> 0.3,
    // t_1 = nearest to 0.3 -> 0.1.  Returned as (t_1, t_2, t_3, t_4).
    CHECK(order[3] == 0);
    CHECK(order[2] == 2);
    CHECK(order[1] == 3);
    CHECK(order[0] == 1);
    CHECK(oracle::narrowing_holds(pts, order, alpha));
}

TEST_CASE("narrowing property holds on random configurations") {
    RngStream rng(61, 0);
    for (const auto& alpha : {ScalingVector({1.0, 1.0}), ScalingVector({1.0, 2.0}),
                              ScalingVector({1.5, 1.0, 1.0})}) {
        for (int trial = 0; trial < 60; ++trial) {
            int n = 2 + static_cast<int>(rng.next_u64() % 12);
            auto pts = random_cube_points(rng, n, alpha.size());
            auto order = narrowing_order(pts, alpha);
            CHECK(oracle::narrowing_holds(pts, order, alpha));
            std::vector<int> sorted = order;
            std::sort(sorted.begin(), sorted.end());
            for (int i = 0; i < n; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
        }
    }
}

TEST_CASE("narrowing rejects duplicates and honors an explicit start") {
    ScalingVector alpha({1.0, 1.0});
    std::vector<Eigen::VectorXd> dup{vec2(0.5, 0.5), vec2(0.5, 0.5)};
    CHECK_THROWS_AS(narrowing_order(dup, alpha), std::invalid_argument);

    std::vector<Eigen::VectorXd> pts{vec2(0.1, 0.1), vec2(0.9, 0.9), vec2(0.5, 0.4)};
    auto order = narrowing_order(pts, alpha, 2);
    CHECK(order.back() == 2);  // requested start becomes t_n
}

TEST_CASE("one-dimensional tours sort the line") {
    std::vector<Eigen::VectorXd> pts{vec1(0.7), vec1(0.2), vec1(0.4)};
    auto order = sorted_tour(pts);
    REQUIRE(order.size() == 3);
    CHECK(pts[static_cast<std::size_t>(order[0])][0] == doctest::Approx(0.2));
    CHECK(pts[static_cast<std::size_t>(order[2])][0] == doctest::Approx(0.7));
    ScalingVector alpha({1.0});
    // ascending visits then closing at the origin: (max - min) + max
    CHECK(nn_tour_length(pts, order, alpha) == doctest::Approx(0.5 + 0.7).epsilon(1e-12));
}

TEST_CASE("tour length validates the ordering and sums alpha hops") {
    std::vector<Eigen::VectorXd> pts{vec2(0.2, 0.1), vec2(0.6, 0.5)};
    ScalingVector alpha({1.0, 1.0});
    double len = nn_tour_length(pts, {1, 0}, alpha);
    CHECK(len == doctest::Approx(0.8 + 0.3).epsilon(1e-12));
    CHECK_THROWS_AS(nn_tour_length(pts, {0, 0}, alpha), std::invalid_argument);
    CHECK_THROWS_AS(nn_tour_length(pts, {0}, alpha), std::invalid_argument);
}

TEST_CASE("grid coverings have diameter N/m and exact cardinalities") {
    auto c2 = grid_covering(2, ScalingVector({1.0, 1.0}));
    CHECK(c2.cells_per_axis[0] == doctest::Approx(2.0));
    CHECK(c2.diameter == doctest::Approx(1.0));
    CHECK(c2.cardinality == doctest::Approx(4.0));
    CHECK(c2.cells().size() == 4);

    auto c3 = grid_covering(3, ScalingVector({1.0, 0.5}));
    // exponents normalize to (2, 1): counts ceil(3^2), ceil(3^1)
    CHECK(c3.cells_per_axis[0] == doctest::Approx(9.0));
    CHECK(c3.cells_per_axis[1] == doctest::Approx(3.0));
    CHECK(c3.diameter == doctest::Approx(2.0 / 3.0).epsilon(1e-12));  // N/m always
    CHECK(c3.cardinality == doctest::Approx(27.0));

    CHECK_THROWS_AS(grid_covering(0, ScalingVector({1.0})), std::invalid_argument);
}

TEST_CASE("covering bound telescopes and rejects non-nested input") {
    ScalingVector alpha({1.0, 1.0});
    std::vector<Covering> chain{grid_covering(1, alpha), grid_covering(2, alpha),
                                grid_covering(4, alpha)};
    double b = covering_bound(10, chain, 2.0);
    // n D_M + |P_3| (D_2 - D_3) + |P_2| (D_1 - D_2) + |P_1| (D_A - D_1)
    double expect = 10 * 0.5 + 16 * (1.0 - 0.5) + 4 * (2.0 - 1.0) + 1 * (2.0 - 2.0);
    CHECK(b == doctest::Approx(expect).epsilon(1e-12));

    std::vector<Covering> reversed{grid_covering(2, alpha), grid_covering(1, alpha)};
    CHECK_THROWS_AS(covering_bound(10, reversed, 2.0), std::invalid_argument);
}

TEST_CASE("grid covering bound: frozen value and growth exponent") {
    ScalingVector alpha({1.0, 1.0});
    CHECK(grid_covering_bound(16, alpha) == doctest::Approx(53.0 / 3.0).epsilon(1e-12));
    std::vector<double> ln, lb;
    for (long n : {16L, 64L, 256L, 1024L}) {
        ln.push_back(std::log(static_cast<double>(n)));
        lb.push_back(std::log(grid_covering_bound(n, alpha)));
    }
    double slope = oracle::ols_slope(ln, lb);
    CHECK(slope == doctest::Approx(0.5).epsilon(0.1));  // 1 - 1/sum(alpha)
}

TEST_CASE("single point tours are exact corner cases") {
    ScalingVector alpha({1.0, 1.0});
    auto report = worst_case_search(1, alpha, 2, 62);
    CHECK(report.length == doctest::Approx(2.0));  // corner (1,1), closing at 0
    CHECK(report.length <= report.bound + 1e-9);
}

TEST_CASE("worst case search stays under the bound and beats random configurations") {
    ScalingVector alpha({1.0, 1.0});
    RngStream rng(63, 0);
    const long n = 24;
    double best_random = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        auto pts = random_cube_points(rng, n, 2);
        auto order = narrowing_order(pts, alpha);
        std::vector<int> tour(order.rbegin(), order.rend());
        best_random = std::max(best_random, nn_tour_length(pts, tour, alpha));
    }
    auto report = worst_case_search(n, alpha, 8, 64);
    CHECK(report.length <= report.bound + 1e-9);
    CHECK(report.length >= best_random * 0.95);
    CHECK(report.n == n);
    CHECK(static_cast<long>(report.points.size()) == n);
    auto rerun = worst_case_search(n, alpha, 8, 64);
    CHECK(report.length == rerun.length);
    CHECK(report.best_restart == rerun.best_restart);
}

TEST_CASE("exponent sweep fits a growth slope across sizes") {
    ScalingVector alpha({1.0, 1.0});
    auto report = tour_exponent_sweep({8, 16, 32, 64}, alpha, 4, 65);
    REQUIRE(report.sweep_n.size() == 4);
    CHECK(report.n == 64);
    CHECK(std::isfinite(report.sweep_slope));
    CHECK(report.sweep_slope > 0.2);
    CHECK(report.sweep_slope < 0.8);
    for (std::size_t i = 0; i < 4; ++i) CHECK(report.sweep_length[i] > 0.0);
}

TEST_CASE("line tours stay under the harmonic covering bound") {
    ScalingVector alpha({1.0});
    // the walk descends monotonically from the far point and closes at the
    // inner one, so its total is exactly max|t|, at most 1 on the unit segment
    std::vector<Eigen::VectorXd> pts{vec1(0.2), vec1(0.9), vec1(0.5)};
    auto order = narrowing_order(pts, alpha);
    std::vector<int> walk(order.rbegin(), order.rend());
    CHECK(nn_tour_length(pts, walk, alpha) == doctest::Approx(0.9).epsilon(1e-12));

    auto report = worst_case_search(64, alpha, 6, 66);
    CHECK(report.length <= report.bound + 1e-9);
    CHECK(report.length >= 0.95);  // the search drives the far point to the corner
    CHECK(report.length <= 1.0 + 1e-9);
}
