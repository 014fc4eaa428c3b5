#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "loctail/field_model.hpp"

namespace loctail {

// metric normalization: divide by min(alpha) when any entry is below 1, so
// ||.||_alpha satisfies the triangle inequality
ScalingVector normalized_alpha(const ScalingVector& alpha);

// Greedy narrowing labels t_1..t_n (returned as input indices): the start
// point becomes t_n and each t_k is the remaining point closest to t_{k+1},
// ties resolved to the lowest input index.  The result satisfies
// d(t_{k+1}, t_k) = min_{i<=k} d(t_{k+1}, t_i) for every k, and its reversal
// is a nearest-neighbor tour.  Default start: the point of largest alpha-norm.
std::vector<int> narrowing_order(const std::vector<Eigen::VectorXd>& points,
                                 const ScalingVector& alpha, std::optional<int> start = {});

// 1-d specialization: ascending coordinate order, which is the narrowing
// labeling on the line
std::vector<int> sorted_tour(const std::vector<Eigen::VectorXd>& points);

// sum_{k=1..n} ||t_{k+1} - t_k||_alpha over the toured sequence, closing at
// t_{n+1} = 0
double nn_tour_length(const std::vector<Eigen::VectorXd>& points,
                      const std::vector<int>& ordering, const ScalingVector& alpha);

struct Cell {
    Eigen::VectorXd base;
    Eigen::VectorXd sides;
};

struct Covering {
    std::vector<double> cells_per_axis;  // ceil(m^{alpha_i}); double: can exceed 2^63
    Eigen::VectorXd sides;               // m^{-alpha_i}
    double diameter = 0.0;               // alpha-metric cell diameter, corner sum
    double cardinality = 0.0;
    ScalingVector alpha;  // normalized exponents the covering was built with

    std::vector<Cell> cells() const;  // materialized list; throws above 10^6 cells
};

// Anisotropic grid covering of [0,1]^N with cell sides m^{-alpha_i}; its
// diameter is N/m
Covering grid_covering(int m, const ScalingVector& alpha);

// n D(P_M) + sum_{m=2..M} |P_m| (D(P_{m-1}) - D(P_m)) + |P_1| (D(A) - D(P_1))
// over a decreasing-diameter list P_1..P_M
double covering_bound(long n, const std::vector<Covering>& coverings, double ambient_diameter);

// the bound with grid coverings m = 1..M, M = ceil(n^{1/sum alpha}), ambient
// diameter N; scales as n^{1 - 1/sum alpha}
double grid_covering_bound(long n, const ScalingVector& alpha);

struct TourReport {
    std::vector<Eigen::VectorXd> points;
    std::vector<int> ordering;  // toured sequence (narrowing reversal)
    double length = 0.0;
    double bound = 0.0;
    ScalingVector alpha;  // normalized metric actually used
    long n = 0;
    int restarts = 0;
    int best_restart = -1;
    std::uint64_t seed = 0;
    std::vector<long> sweep_n;  // exponent-fit data, filled by tour_exponent_sweep
    std::vector<double> sweep_length;
    double sweep_slope = std::numeric_limits<double>::quiet_NaN();
};

// Multi-start coordinate-perturbation hill climbing for an adversarial
// instance maximizing the narrowing-reversal tour length.  The best length is
// asserted against the covering bound - a violation throws, since it would
// falsify the bound.  n <= 1024.
TourReport worst_case_search(long n, const ScalingVector& alpha, int restarts = 32,
                             std::uint64_t seed = 0);

// worst_case_search across instance sizes plus a log-log slope of the maxima;
// returns the largest-n report with the sweep attached
TourReport tour_exponent_sweep(const std::vector<long>& ns, const ScalingVector& alpha,
                               int restarts, std::uint64_t seed);

}  // namespace loctail
