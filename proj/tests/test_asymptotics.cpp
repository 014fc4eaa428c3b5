#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include "loctail/asymptotics.hpp"
#include "loctail/covariance.hpp"
#include "loctail/field_model.hpp"
#include "loctail/kernel.hpp"
#include "loctail/path_sim.hpp"
#include "loctail/rng.hpp"
#include "oracle_helpers.hpp"

using namespace loctail;

namespace {

FieldSpec bm_spec() {
    return FieldSpec(1, 1, ScalingVector({1.0}),
                     ScalingMatrix(Eigen::MatrixXd::Constant(1, 1, 0.5)),
                     std::make_shared<MultiFbm>(1, 0.5));
}

}  // namespace

TEST_CASE("kasahara map: closed form, monotonicity, edge cases") {
    // lambda/(e A^{1/lambda}); brownian motion: lambda=1/2, A=e^{-1/2} -> 1/2
    CHECK(kasahara_tail_constant(0.5, std::exp(-0.5)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(kasahara_tail_constant(1.0, 1.0) == doctest::Approx(1.0 / M_E).epsilon(1e-12));
    CHECK(kasahara_tail_constant(0.5, std::numeric_limits<double>::infinity()) == 0.0);
    CHECK(kasahara_tail_constant(0.5, 0.5) > kasahara_tail_constant(0.5, 0.6));
    CHECK_THROWS_AS(kasahara_tail_constant(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(kasahara_tail_constant(0.5, -1.0), std::invalid_argument);
}

TEST_CASE("limit diagnostics close the loop on a brownian monte carlo run") {
    auto spec = bm_spec();
    auto series = moment_series(spec, 6, 400000, 71);
    auto curve = tail_curve(spec, {1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0}, 4000, {2048}, {}, 71);
    auto verdict = limit_diagnostics(series, curve, 0.5);
    CHECK(verdict.insufficient == false);
    CHECK(verdict.lambda == doctest::Approx(0.5));
    CHECK(verdict.orders_used >= 3);
    // both routes target e^{-1/2} = 0.6065; the hull must cover desk-scale bias
    CHECK(verdict.a_extrapolated > 0.55);
    CHECK(verdict.a_extrapolated < 0.68);
    CHECK(verdict.a_lo < verdict.a_hi);
    CHECK(verdict.implied == doctest::Approx(kasahara_tail_constant(0.5, verdict.a_extrapolated))
                                 .epsilon(1e-12));
    CHECK(verdict.implied_lo <= verdict.implied);
    CHECK(verdict.implied_hi >= verdict.implied);
    CHECK(std::abs(verdict.implied - 0.5) < 0.15);
    CHECK(std::abs(verdict.slope - 0.5) < 0.15);
    CHECK(verdict.consistent);
}

TEST_CASE("limit diagnostics refuse to guess from thin data") {
    auto spec = bm_spec();
    auto series = moment_series(spec, 2, 20000, 72);
    auto curve = tail_curve(spec, {1.5, 2.0}, 300, {512}, {}, 72);
    auto verdict = limit_diagnostics(series, curve, 0.5);
    CHECK(verdict.insufficient);
    CHECK(verdict.note.size() > 0);
    CHECK(verdict.consistent == false);
}

TEST_CASE("limit diagnostics reject mismatched fingerprints") {
    auto spec = bm_spec();
    auto series = moment_series(spec, 3, 30000, 73);
    auto curve = tail_curve(spec, {1.5, 2.0, 2.5}, 300, {512}, {}, 73);
    curve.fingerprint = "someone-else";
    CHECK_THROWS_AS(limit_diagnostics(series, curve, 0.5), std::invalid_argument);
}

TEST_CASE("subdivision diagnostic on the exact brownian sequence") {
    auto spec = bm_spec();
    auto series = oracle::exact_bm_series(12);
    series.fingerprint = spec.fingerprint();  // the oracle IS this spec's sequence
    auto pt = subdivision_diagnostic(spec, series, 2.0, 2);
    CHECK(pt.M == 2);
    CHECK(pt.exact_m);
    CHECK(pt.order_low == 2);
    CHECK(pt.order_high == 6);
    // E(Z^6) / [ 2^{2} * (E Z^2)^2 * 2^{4} / 2^{4} ] = 15/4
    CHECK(pt.ratio == doctest::Approx(3.75).epsilon(1e-9));

    auto pt3 = subdivision_diagnostic(spec, series, 2.0, 3);
    CHECK(pt3.order_high == 8);
    CHECK(pt3.ratio > 0.0);

    auto thin = oracle::exact_bm_series(4);
    thin.fingerprint = spec.fingerprint();
    CHECK_THROWS_AS(subdivision_diagnostic(spec, thin, 2.0, 2), std::invalid_argument);
    CHECK_THROWS_AS(subdivision_diagnostic(spec, series, 0.9, 2), std::invalid_argument);
}

TEST_CASE("partition counts match exhaustive enumeration") {
    struct Probe {
        int n, m;
    } probes[] = {{1, 1}, {1, 5}, {2, 2}, {2, 3}, {3, 2}, {2, 4}, {4, 2}, {3, 3}, {2, 5}, {5, 2},
                  {3, 4}, {4, 3}, {6, 2}, {2, 6}, {7, 1}, {8, 1}};
    for (const auto& pr : probes) {
        auto pc = partition_count(pr.n, pr.m);
        long long truth = oracle::exhaustive_partition_count(pr.n, pr.m);
        CHECK(pc.digits == std::to_string(truth));
        CHECK(pc.log_value == doctest::Approx(std::log(static_cast<double>(truth))).epsilon(1e-9));
    }
    CHECK(partition_count(2, 2).digits == "6");
    CHECK_THROWS_AS(partition_count(20, 10), std::invalid_argument);  // nm > 170
}

TEST_CASE("large partition counts stay exact in decimal") {
    auto pc = partition_count(10, 3);  // 30! / 6^10
    CHECK(pc.digits.size() > 15);      // far beyond 2^53; exactness needs big integers
    double digits_log10 = pc.log_value / std::log(10.0);
    CHECK(static_cast<double>(pc.digits.size()) == doctest::Approx(std::ceil(digits_log10)).epsilon(0.1));
}

TEST_CASE("dirichlet direction approximation meets the 1/n guarantee") {
    auto exact = dirichlet_approx(0.5, 100);
    CHECK(exact.q == 2);
    CHECK(exact.p == 1);
    CHECK(exact.error == doctest::Approx(0.0));

    auto third = dirichlet_approx(1.0 / 3.0, 50);
    CHECK(third.q == 3);
    CHECK(third.p == 1);

    RngStream rng(74, 0);
    for (int trial = 0; trial < 300; ++trial) {
        double alpha = 0.05 + 4.0 * rng.next_unit();
        long n = 2 + static_cast<long>(rng.next_u64() % 998);
        auto appr = dirichlet_approx(alpha, n);
        CHECK(appr.q >= 1);
        CHECK(appr.q <= n);
        CHECK(appr.error <= 1.0 / static_cast<double>(n) + 1e-12);
        CHECK(appr.error == doctest::Approx(std::abs(appr.p - appr.q * alpha)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(dirichlet_approx(0.5, 0), std::invalid_argument);
}
