#include "loctail/path_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "loctail/covariance.hpp"
#include "loctail/parallel.hpp"
#include "loctail/rng.hpp"

namespace loctail {

namespace {

long checked_node_count(const std::vector<int>& shape, int d) {
    if (shape.empty()) throw std::invalid_argument("grid shape is empty");
    long n = 1;
    for (int g : shape) {
        if (g < 1) throw std::invalid_argument("grid shape entries must be positive");
        n *= g;
    }
    if (n * d > kDefaultFactorCap)
        throw std::invalid_argument("grid nodes * d exceeds the factorization cap");
    return n;
}

Eigen::VectorXd decode_node(const std::vector<int>& shape, long flat) {
    const int N = static_cast<int>(shape.size());
    Eigen::VectorXd t(N);
    for (int i = N - 1; i >= 0; --i) {
        int g = shape[static_cast<std::size_t>(i)];
        t[i] = static_cast<double>(flat % g) / static_cast<double>(g);
        flat /= g;
    }
    return t;
}

double ball_volume(double eps, int d, BallNorm norm) {
    if (norm == BallNorm::kSup) return std::pow(2.0 * eps, d);
    // euclidean: pi^{d/2} eps^d / Gamma(d/2+1)
    return std::pow(std::sqrt(M_PI) * eps, d) / std::tgamma(0.5 * d + 1.0);
}

struct Wilson {
    double lo, hi;
};

Wilson wilson_interval(long hits, long n) {
    const double z = 1.96;
    double p = static_cast<double>(hits) / static_cast<double>(n);
    double denom = 1.0 + z * z / static_cast<double>(n);
    double center = (p + z * z / (2.0 * static_cast<double>(n))) / denom;
    double half = z *
                  std::sqrt(p * (1.0 - p) / static_cast<double>(n) +
                            z * z / (4.0 * static_cast<double>(n) * static_cast<double>(n))) /
                  denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

}  // namespace

double GridPath::cell_volume() const {
    double v = 1.0;
    for (int g : shape) v /= static_cast<double>(g);
    return v;
}

Eigen::VectorXd GridPath::node_point(long flat) const { return decode_node(shape, flat); }

GridSampler::GridSampler(const FieldSpec& spec, std::vector<int> shape)
    : shape_(std::move(shape)), d_(spec.d()), fingerprint_(spec.fingerprint()) {
    if (static_cast<int>(shape_.size()) != spec.N())
        throw std::invalid_argument("GridSampler: shape must have one entry per axis");
    n_nodes_ = checked_node_count(shape_, d_);

    const CovModel& model = spec.model();
    std::vector<Eigen::VectorXd> pts;
    pts.reserve(static_cast<std::size_t>(n_nodes_));
    for (long f = 0; f < n_nodes_; ++f) pts.push_back(decode_node(shape_, f));

    active_.reserve(static_cast<std::size_t>(n_nodes_));
    for (long f = 0; f < n_nodes_; ++f) {
        Eigen::MatrixXd own = model.cross_cov(pts[static_cast<std::size_t>(f)],
                                              pts[static_cast<std::size_t>(f)]);
        if (own.cwiseAbs().maxCoeff() >= 1e-300) active_.push_back(f);
    }

    const long na = static_cast<long>(active_.size());
    if (na == 0) {
        chol_.resize(0, 0);
        return;
    }
    Eigen::MatrixXd cov(na * d_, na * d_);
    for (long i = 0; i < na; ++i)
        for (long j = i; j < na; ++j) {
            Eigen::MatrixXd blk =
                model.cross_cov(pts[static_cast<std::size_t>(active_[static_cast<std::size_t>(i)])],
                                pts[static_cast<std::size_t>(active_[static_cast<std::size_t>(j)])]);
            cov.block(i * d_, j * d_, d_, d_) = blk;
            if (j > i) cov.block(j * d_, i * d_, d_, d_) = blk.transpose();
        }
    cov = ((cov + cov.transpose()) * 0.5).eval();
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error(
            "GridSampler: grid covariance is not positive definite - covariance model defect");
    chol_ = llt.matrixL();
}

GridPath GridSampler::sample(std::uint64_t seed, std::uint64_t replication) const {
    Eigen::MatrixXd cols = sample_columns(seed, replication, 1);
    return column_to_path(cols.col(0), seed);
}

Eigen::MatrixXd GridSampler::sample_columns(std::uint64_t seed, std::uint64_t first,
                                            int count) const {
    const long rows = chol_.rows();
    Eigen::MatrixXd z(rows, count);
    for (int c = 0; c < count; ++c) {
        RngStream rng(seed, first + static_cast<std::uint64_t>(c));
        for (long i = 0; i < rows; ++i) z(i, c) = rng.next_gaussian();
    }
    if (rows == 0) return z;
    return chol_.triangularView<Eigen::Lower>() * z;
}

GridPath GridSampler::column_to_path(const Eigen::VectorXd& col, std::uint64_t seed) const {
    GridPath path;
    path.shape = shape_;
    path.d = d_;
    path.fingerprint = fingerprint_;
    path.seed = seed;
    path.values = Eigen::MatrixXd::Zero(n_nodes_, d_);
    for (std::size_t i = 0; i < active_.size(); ++i)
        path.values.row(active_[i]) =
            col.segment(static_cast<long>(i) * d_, d_).transpose();
    return path;
}

GridPath sample_field(const FieldSpec& spec, const std::vector<int>& shape, std::uint64_t seed) {
    return GridSampler(spec, shape).sample(seed);
}

double local_time_eps(const GridPath& path, const Eigen::VectorXd& x, double eps, BallNorm norm) {
    if (!(eps > 0.0)) throw std::invalid_argument("local_time_eps: eps must be positive");
    if (x.size() != path.d) throw std::invalid_argument("local_time_eps: level dimension != d");
    const double cellvol = path.cell_volume();
    long count = 0;
    for (long i = 0; i < path.n_nodes(); ++i) {
        double dist;
        if (norm == BallNorm::kSup)
            dist = (path.values.row(i).transpose() - x).cwiseAbs().maxCoeff();
        else
            dist = (path.values.row(i).transpose() - x).norm();
        if (dist < eps) ++count;
    }
    return static_cast<double>(count) * cellvol / ball_volume(eps, path.d, norm);
}

bool eps_grid_adequate(const GridPath& path, double eps) {
    return std::pow(2.0 * eps, path.d) * static_cast<double>(path.n_nodes()) >= 10.0;
}

double OccupationHistogram::total_mass() const {
    double acc = 0.0;
    for (const auto& [idx, m] : mass) acc += m;
    return acc;
}

Eigen::VectorXd OccupationHistogram::bin_center(const std::vector<int>& idx) const {
    Eigen::VectorXd c(d);
    for (int i = 0; i < d; ++i)
        c[i] = (static_cast<double>(idx[static_cast<std::size_t>(i)]) + 0.5) * bin_width;
    return c;
}

OccupationHistogram occupation_density(const GridPath& path, double bin_width) {
    if (!(bin_width > 0.0))
        throw std::invalid_argument("occupation_density: bin_width must be positive");
    OccupationHistogram h;
    h.bin_width = bin_width;
    h.d = path.d;
    const double cellvol = path.cell_volume();
    std::vector<int> idx(static_cast<std::size_t>(path.d));
    for (long i = 0; i < path.n_nodes(); ++i) {
        for (int j = 0; j < path.d; ++j)
            idx[static_cast<std::size_t>(j)] =
                static_cast<int>(std::floor(path.values(i, j) / bin_width));
        h.mass[idx] += cellvol;
    }
    return h;
}

std::vector<double> default_eps_schedule() {
    return {0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625};
}

int richardson_fine_index(const std::vector<double>& eps_schedule, long n_nodes) {
    if (eps_schedule.size() < 2)
        throw std::invalid_argument("richardson_fine_index: need at least two levels");
    double target = 0.5 * std::log2(static_cast<double>(n_nodes));
    int best = 1;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < eps_schedule.size(); ++i) {
        double k = -std::log2(eps_schedule[i]);
        double gap = std::abs(k - target);
        if (gap < best_gap) {
            best_gap = gap;
            best = static_cast<int>(i);
        }
    }
    return best;
}

double richardson_local_time(const std::vector<double>& z_by_eps, int fine_index) {
    if (fine_index < 1 || fine_index >= static_cast<int>(z_by_eps.size()))
        throw std::invalid_argument("richardson_local_time: pair index out of range");
    return 2.0 * z_by_eps[static_cast<std::size_t>(fine_index)] -
           z_by_eps[static_cast<std::size_t>(fine_index - 1)];
}

TailCurve tail_curve(const FieldSpec& spec, const std::vector<double>& thresholds,
                     long replications, const std::vector<int>& shape,
                     const std::vector<double>& eps_schedule, std::uint64_t seed) {
    if (thresholds.empty()) throw std::invalid_argument("tail_curve: no thresholds");
    for (std::size_t i = 0; i + 1 < thresholds.size(); ++i)
        if (!(thresholds[i] < thresholds[i + 1]))
            throw std::invalid_argument("tail_curve: thresholds must be ascending");
    if (replications < 1) throw std::invalid_argument("tail_curve: need replications >= 1");
    std::vector<double> eps = eps_schedule.empty() ? default_eps_schedule() : eps_schedule;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (!(eps[i] > 0.0)) throw std::invalid_argument("tail_curve: eps must be positive");
        if (i > 0 && !(eps[i] < eps[i - 1]))
            throw std::invalid_argument("tail_curve: eps schedule must be descending");
    }

    GridSampler sampler(spec, shape);
    const int d = sampler.value_dim();
    const long n_nodes = sampler.n_nodes();
    const long n_pinned = n_nodes - static_cast<long>(sampler.active_nodes().size());
    const double cellvol = [&] {
        double v = 1.0;
        for (int g : shape) v /= static_cast<double>(g);
        return v;
    }();
    const int fine_idx = richardson_fine_index(eps, n_nodes);
    const std::size_t n_eps = eps.size();

    std::vector<double> z_values(static_cast<std::size_t>(replications));
    const long chunk = 64;
    const std::size_t n_chunks =
        static_cast<std::size_t>((replications + chunk - 1) / chunk);
    std::vector<std::vector<double>> gap_partials(
        n_chunks, std::vector<double>(n_eps - 1, 0.0));

    parallel_chunks(static_cast<std::size_t>(replications), static_cast<std::size_t>(chunk),
                    [&](std::size_t ci, std::size_t begin, std::size_t end) {
                        const int count = static_cast<int>(end - begin);
                        Eigen::MatrixXd cols = sampler.sample_columns(seed, begin, count);
                        std::vector<double> z(n_eps);
                        std::vector<long> hits(n_eps);
                        for (int c = 0; c < count; ++c) {
                            std::fill(hits.begin(), hits.end(), n_pinned);
                            const long na = cols.rows() / d;
                            for (long a = 0; a < na; ++a) {
                                double dist = cols.col(c).segment(a * d, d).cwiseAbs().maxCoeff();
                                for (std::size_t e = 0; e < n_eps; ++e)
                                    if (dist < eps[e]) ++hits[e];
                            }
                            for (std::size_t e = 0; e < n_eps; ++e)
                                z[e] = static_cast<double>(hits[e]) * cellvol /
                                       std::pow(2.0 * eps[e], d);
                            z_values[begin + static_cast<std::size_t>(c)] =
                                richardson_local_time(z, fine_idx);
                            for (std::size_t e = 0; e + 1 < n_eps; ++e)
                                gap_partials[ci][e] += std::abs(z[e + 1] - z[e]);
                        }
                    });

    TailCurve curve;
    curve.x = thresholds;
    curve.replications = replications;
    curve.eps = eps;
    curve.fine_index = fine_idx;
    curve.fingerprint = spec.fingerprint();
    curve.seed = seed;
    curve.eps_gap.assign(n_eps - 1, 0.0);
    for (const auto& part : gap_partials)
        for (std::size_t e = 0; e + 1 < n_eps; ++e) curve.eps_gap[e] += part[e];
    for (std::size_t e = 0; e + 1 < n_eps; ++e)
        curve.eps_gap[e] /= static_cast<double>(replications);

    for (double x : thresholds) {
        long hits = 0;
        for (double z : z_values)
            if (z > x) ++hits;
        curve.exceed.push_back(hits);
        curve.p_hat.push_back(static_cast<double>(hits) / static_cast<double>(replications));
        Wilson w = wilson_interval(hits, replications);
        curve.lo.push_back(w.lo);
        curve.hi.push_back(w.hi);
    }
    curve.z_values = std::move(z_values);
    return curve;
}

TailFit tail_exponent_fit(const TailCurve& curve, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("tail_exponent_fit: lambda must be positive");
    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < curve.x.size(); ++i) {
        if (curve.exceed[i] >= kTailFitMinExceed && curve.exceed[i] < curve.replications)
            usable.push_back(i);
    }
    if (!usable.empty()) usable.pop_back();  // trim the extreme bucket
    if (usable.size() < 4)
        throw std::runtime_error(
            "tail_exponent_fit: fewer than 4 usable thresholds (need exceedance >= 20 and "
            "0 < p < 1 after trimming the extreme bucket)");

    const long R = curve.replications;
    std::vector<double> u, y, w;
    for (std::size_t i : usable) {
        double p = curve.p_hat[i];
        u.push_back(std::pow(curve.x[i], 1.0 / lambda));
        y.push_back(-std::log(p));
        w.push_back(static_cast<double>(R) * p / (1.0 - p));
    }
    const std::size_t m = u.size();

    auto wls_line = [](const std::vector<double>& uu, const std::vector<double>& yy,
                       const std::vector<double>& ww, double* slope, double* se) {
        double sw = 0.0, su = 0.0, sy = 0.0;
        for (std::size_t i = 0; i < uu.size(); ++i) {
            sw += ww[i];
            su += ww[i] * uu[i];
            sy += ww[i] * yy[i];
        }
        double ubar = su / sw, ybar = sy / sw;
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < uu.size(); ++i) {
            sxx += ww[i] * (uu[i] - ubar) * (uu[i] - ubar);
            sxy += ww[i] * (uu[i] - ubar) * (yy[i] - ybar);
        }
        *slope = sxy / sxx;
        *se = std::sqrt(1.0 / sxx);
    };

    TailFit fit;
    fit.lambda = lambda;
    fit.n_used = static_cast<int>(m);
    wls_line(u, y, w, &fit.slope, &fit.se);
    fit.lo = fit.slope - 1.96 * fit.se;
    fit.hi = fit.slope + 1.96 * fit.se;

    // weighted quadratic for the curvature diagnostic
    Eigen::Matrix3d xtx = Eigen::Matrix3d::Zero();
    Eigen::Vector3d xty = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < m; ++i) {
        Eigen::Vector3d row(1.0, u[i], u[i] * u[i]);
        xtx += w[i] * row * row.transpose();
        xty += w[i] * row * y[i];
    }
    Eigen::Matrix3d inv = xtx.inverse();
    Eigen::Vector3d coef = inv * xty;
    fit.curvature = coef[2];
    fit.curvature_se = std::sqrt(std::max(0.0, inv(2, 2)));
    double span = u.back() - u.front();
    fit.curvature_flag = std::abs(fit.curvature) > 3.0 * fit.curvature_se &&
                         std::abs(fit.curvature) * span > 0.02 * std::abs(fit.slope);

    if (m >= 4) {
        std::size_t half = m / 2;
        std::vector<double> ul(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(half));
        std::vector<double> yl(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(half));
        std::vector<double> wl(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(half));
        std::vector<double> uh(u.begin() + static_cast<std::ptrdiff_t>(half), u.end());
        std::vector<double> yh(y.begin() + static_cast<std::ptrdiff_t>(half), y.end());
        std::vector<double> wh(w.begin() + static_cast<std::ptrdiff_t>(half), w.end());
        double bl, sl, bh, sh;
        wls_line(ul, yl, wl, &bl, &sl);
        wls_line(uh, yh, wh, &bh, &sh);
        fit.split_drift = std::abs(bh - bl) / std::sqrt(sl * sl + sh * sh);
    }
    return fit;
}

}  // namespace loctail
