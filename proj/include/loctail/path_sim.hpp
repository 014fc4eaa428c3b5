#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "loctail/field_model.hpp"

namespace loctail {

enum class BallNorm { kSup, kEuclidean };

// Field values on the uniform grid {k_i/G_i : k_i = 0..G_i-1} over the unit
// cube, row-major with the last axis fastest.  Nodes whose own covariance
// vanishes (the origin for models with X_0 = 0) carry exactly 0.
struct GridPath {
    std::vector<int> shape;  // per-axis node count G_i
    Eigen::MatrixXd values;  // n_nodes x d
    int d = 1;
    std::string fingerprint;
    std::uint64_t seed = 0;

    long n_nodes() const { return values.rows(); }
    double cell_volume() const;
    Eigen::VectorXd node_point(long flat) const;
};

// Exact Gaussian sampler on a fixed grid: one factorization, any number of
// replications.  Column r is a pure function of (spec, shape, seed, r), so
// ensembles are reproducible at any worker count.
class GridSampler {
  public:
    GridSampler(const FieldSpec& spec, std::vector<int> shape);

    const std::vector<int>& shape() const { return shape_; }
    long n_nodes() const { return n_nodes_; }
    int value_dim() const { return d_; }
    long active_values() const { return chol_.rows(); }

    GridPath sample(std::uint64_t seed, std::uint64_t replication = 0) const;

    // stacked active-node values, one column per replication index
    Eigen::MatrixXd sample_columns(std::uint64_t seed, std::uint64_t first, int count) const;

    GridPath column_to_path(const Eigen::VectorXd& col, std::uint64_t seed) const;

    // flat indices of nodes with nonzero own covariance, ascending
    const std::vector<long>& active_nodes() const { return active_; }

  private:
    std::vector<int> shape_;
    long n_nodes_ = 0;
    int d_ = 1;
    std::string fingerprint_;
    std::vector<long> active_;
    Eigen::MatrixXd chol_;  // lower factor of the active-node covariance
};

GridPath sample_field(const FieldSpec& spec, const std::vector<int>& shape, std::uint64_t seed);

// (1/V_eps) * sum_nodes 1{ ||X_node - x|| < eps } * cellvolume with the exact
// ball volume V_eps of the chosen norm ((2 eps)^d for sup)
double local_time_eps(const GridPath& path, const Eigen::VectorXd& x, double eps,
                      BallNorm norm = BallNorm::kSup);

// heuristic: expected in-band cell count (2 eps)^d * n_nodes >= 10
bool eps_grid_adequate(const GridPath& path, double eps);

// Occupation histogram with bins [j w, (j+1) w) per axis; masses sum to the
// parameter-cube volume exactly.
struct OccupationHistogram {
    double bin_width = 0.0;
    int d = 1;
    std::map<std::vector<int>, double> mass;

    double total_mass() const;
    Eigen::VectorXd bin_center(const std::vector<int>& idx) const;

    // sum over bins of f(center) * mass, the space side of the occupation
    // identity; the time side is sum f(X_node) * cellvolume
    template <class Fn>
    double integrate(Fn&& f) const {
        double acc = 0.0;
        for (const auto& [idx, m] : mass) acc += f(bin_center(idx)) * m;
        return acc;
    }
};

OccupationHistogram occupation_density(const GridPath& path, double bin_width);

// time side of the identity, for tests and the validate command
template <class Fn>
double path_time_integral(const GridPath& path, Fn&& f) {
    double acc = 0.0;
    const double cv = path.cell_volume();
    for (long i = 0; i < path.n_nodes(); ++i) acc += f(path.values.row(i).transpose()) * cv;
    return acc;
}

std::vector<double> default_eps_schedule();  // 2^-4 .. 2^-8, descending

// index of the fine member of the Richardson pair: the schedule entry nearest
// 2^{-k*} with k* = round(log2 sqrt(n_nodes)); finer levels are dominated by
// grid artifacts (origin node mass, left-endpoint bias), coarser ones by the
// mollifier itself
int richardson_fine_index(const std::vector<double>& eps_schedule, long n_nodes);

// 2 Z(eps_fine) - Z(eps_coarse) over the selected pair
double richardson_local_time(const std::vector<double>& z_by_eps, int fine_index);

struct TailCurve {
    std::vector<double> x;  // ascending thresholds
    std::vector<double> p_hat;
    std::vector<double> lo, hi;  // Wilson interval at 95%
    std::vector<long> exceed;
    long replications = 0;
    std::vector<double> eps;      // schedule used, descending
    int fine_index = 0;           // Richardson pair (fine_index-1, fine_index)
    std::vector<double> eps_gap;  // mean |Z(eps_{j+1}) - Z(eps_j)| over replications
    std::vector<double> z_values;  // extrapolated local time per replication
    std::string fingerprint;
    std::uint64_t seed = 0;
};

// Exceedance curve of the Richardson-extrapolated local time at level 0
// across independent replications; deterministic given seed.
TailCurve tail_curve(const FieldSpec& spec, const std::vector<double>& thresholds,
                     long replications, const std::vector<int>& shape,
                     const std::vector<double>& eps_schedule, std::uint64_t seed);

struct TailFit {
    double slope = 0.0;  // -log p against x^{1/lambda}
    double se = 0.0;
    double lo = 0.0, hi = 0.0;  // 95% interval
    double curvature = 0.0;     // quadratic coefficient in the same variable
    double curvature_se = 0.0;
    bool curvature_flag = false;  // significant bend: the probed lambda is off
    double split_drift = 0.0;     // slope difference between window halves, in se units
    double lambda = 0.0;
    int n_used = 0;
};

inline constexpr long kTailFitMinExceed = 20;

// Weighted least squares of -log p_hat on x^{1/lambda} over the usable window
// (exceedance count >= 20, 0 < p_hat < 1, extreme bucket trimmed).
TailFit tail_exponent_fit(const TailCurve& curve, double lambda);

}  // namespace loctail
