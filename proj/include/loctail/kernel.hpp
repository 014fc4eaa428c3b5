#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "loctail/covariance.hpp"
#include "loctail/field_model.hpp"

namespace loctail {

// Nonnegative quantity carried in the log domain; ok=false marks a degenerate
// configuration (singular covariance), signalling rejection to MC callers.
struct KernelValue {
    double log_k = -std::numeric_limits<double>::infinity();
    bool ok = false;

    double value() const;
};

// K_n^beta at one point tuple: beta * ( -(n*d/2) log 2pi - 1/2 logdet )
KernelValue kernel_K_n(const FieldSpec& spec, const std::vector<Eigen::VectorXd>& points,
                       double beta = 1.0);

struct MomentOptions {
    bool median_of_means = true;  // plain mean by flag
    int blocks = 32;
    std::uint64_t stream_base = 0;  // offset of the per-sample RNG stream ids
};

struct MomentEstimate {
    int n = 0;
    double value = 0.0;  // selected estimator
    double se = 0.0;
    double mean = 0.0;  // plain sample mean over accepted draws
    double mean_se = 0.0;
    double mom = 0.0;  // median of block means
    double mom_se = 0.0;
    long samples = 0;
    long rejected = 0;
    bool warning = false;  // rejected/samples > 1%
    bool median_of_means = true;
    double beta = 1.0;
    std::uint64_t seed = 0;
};

// E(Z^n) as the mean of K_n^beta over iid uniform point tuples in the unit
// cube.  Refuses beta at/above the integrability frontier sum(alpha)/tr(H).
// Bit-identical results for fixed (spec, n, samples, seed) at any worker count.
MomentEstimate moment_mc(const FieldSpec& spec, int n, long samples, std::uint64_t seed,
                         double beta = 1.0, const MomentOptions& options = {});

struct MomentSeries {
    std::string fingerprint;
    double beta = 1.0;
    std::vector<MomentEstimate> entries;  // orders 1..n_max
};

// Orders 1..n_max sharing a total sample budget: a pilot pass measures the
// per-order relative variance, the remainder is allocated proportionally and
// the reported estimates come from the main pass alone.
MomentSeries moment_series(const FieldSpec& spec, int n_max, long budget, std::uint64_t seed,
                           double beta = 1.0, const MomentOptions& options = {});

// E(Z^n)^{1/n} nondecreasing within k_sigma propagated standard errors
bool lyapunov_consistent(const MomentSeries& series, double k_sigma = 3.0);

struct GrowthPoint {
    int n = 0;
    double ratio = 0.0;  // value^{1/n} / n^lambda
    double se = 0.0;     // delta method: ratio * se(value) / (n * value)
    double lo = 0.0;     // ratio -+ 1.96 se
    double hi = 0.0;
};

std::vector<GrowthPoint> growth_ratio(const MomentSeries& series, double lambda);

struct FactorialBound {
    double c = 0.0;            // smallest c with value_n <= c^n (n!)^{beta/xi_sum}
    double trend_slope = 0.0;  // OLS slope of log c_n^{1/n} against log n
    bool stable = false;       // slope below the drift tolerance
    std::vector<double> roots;  // c_n^{1/n} per order
};

inline constexpr double kFactorialTrendTol = 0.15;

FactorialBound factorial_bound_check(const MomentSeries& series, double xi_sum, double beta);

// Field of consecutive differences (X_1-X_2, ..., X_{m-1}-X_m) of independent
// fields sharing d and H.  lambda of the result is (m-1) tr(H) / sum alpha.
FieldSpec intersection_field(const std::vector<FieldSpec>& specs);

struct HolderCheck {
    std::vector<double> margins;  // log K_Delta - sum_k q_k log K_k, per config
    double max_margin = -std::numeric_limits<double>::infinity();
    long rejected = 0;  // degenerate draws skipped
};

// Interpolation bound on the intersection kernel: requires sum(q) = m-1 with
// 0 <= q_k <= 1; every margin must be <= 1e-9.
HolderCheck holder_kernel_bound_check(const std::vector<FieldSpec>& specs,
                                      const std::vector<double>& q, long configs, int n_max,
                                      std::uint64_t seed);

}  // namespace loctail
