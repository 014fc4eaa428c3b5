#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "loctail/field_model.hpp"
#include "loctail/kernel.hpp"
#include "loctail/path_sim.hpp"

namespace loctail {

// lambda / (e * A^{1/lambda}); the constant translating the moment-growth
// limit A into the tail-decay constant.  A = +inf maps to 0.
double kasahara_tail_constant(double lambda, double A);

struct LimitVerdict {
    double lambda = 0.0;
    double a_plateau = 0.0;  // median growth ratio over the top third of orders
    double a_plateau_se = 0.0;
    double a_extrapolated = 0.0;  // intercept of ratio ~ A + b/n, de-biasing the
    double a_extrapolated_se = 0.0;  // finite-order drift of the plateau
    double a_lo = 0.0, a_hi = 0.0;   // hull of both routes' 95% intervals
    double implied = 0.0;            // kasahara image of a_extrapolated
    double implied_lo = 0.0, implied_hi = 0.0;  // kasahara image of [a_lo, a_hi]
    double slope = 0.0;  // tail route
    double slope_lo = 0.0, slope_hi = 0.0;
    bool curvature_flag = false;  // propagated from the tail fit
    bool consistent = false;      // implied and slope intervals overlap
    bool insufficient = false;    // not enough data; never guessed
    std::string note;
    int orders_used = 0;
};

// Closes the moment-route / tail-route loop: fits A from the growth-ratio
// tail of the series (plateau median and 1/n extrapolation), the decay slope
// from the tail curve, and compares through kasahara_tail_constant.
LimitVerdict limit_diagnostics(const MomentSeries& series, const TailCurve& curve,
                               double lambda);

struct SubdivisionPoint {
    int r = 0;
    long M = 0;  // prod floor(omega^{alpha_i})
    double ratio = 0.0;
    bool exact_m = true;  // every omega^{alpha_i} integral (within 1e-9)
    int order_low = 0;    // r
    int order_high = 0;   // M (r+1)
};

// Observable part of the moment-subdivision inequality: the ratio
// E(Z^{M(r+1)}) / [ omega^{rM tr(H)} (E Z^r)^M M^{rM} / omega^{rM sum(alpha)} ]
// whose positivity and stability in r carry the testable content.
SubdivisionPoint subdivision_diagnostic(const FieldSpec& spec, const MomentSeries& series,
                                        double omega, int r);

struct PartitionCount {
    std::string digits;      // exact decimal value of (nm)! / (m!)^n
    double log_value = 0.0;  // natural log, for asymptotic comparisons
};

// number of ways to split nm labeled items into n unlabeled-content baskets of
// m; exact big-integer arithmetic, nm <= 170
PartitionCount partition_count(int n, int m);

struct DirichletApprox {
    long p = 0;
    long q = 1;
    double error = 0.0;  // |p - q alpha| <= 1/n, guaranteed
};

// best rational direction p/q with q <= n minimizing |p - q alpha|
DirichletApprox dirichlet_approx(double alpha, long n);

}  // namespace loctail
