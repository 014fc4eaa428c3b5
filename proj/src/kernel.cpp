#include "loctail/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "loctail/parallel.hpp"
#include "loctail/rng.hpp"

namespace loctail {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// nd x nd covariance of the stacked values at pts, assembled into buf
void assemble_cov(const CovModel& model, const std::vector<Eigen::VectorXd>& pts, int d,
                  Eigen::MatrixXd& buf) {
    const int n = static_cast<int>(pts.size());
    buf.resize(n * d, n * d);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            Eigen::MatrixXd blk = model.cross_cov(pts[static_cast<std::size_t>(i)],
                                                  pts[static_cast<std::size_t>(j)]);
            if (j == i) {
                buf.block(i * d, i * d, d, d) = (blk + blk.transpose()) * 0.5;
            } else {
                buf.block(i * d, j * d, d, d) = blk;
                buf.block(j * d, i * d, d, d) = blk.transpose();
            }
        }
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    if (m == 0) return 0.0;
    return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

double sd_ddof1(const std::vector<double>& v) {
    const std::size_t m = v.size();
    if (m < 2) return 0.0;
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(m);
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(m - 1));
}

struct ChunkAcc {
    long count = 0;  // accepted draws
    double mean = 0.0;
    double m2 = 0.0;
    long rejected = 0;
    std::vector<double> gsum;
    std::vector<long> gcnt;
};

void welford_push(ChunkAcc& a, double x) {
    ++a.count;
    double delta = x - a.mean;
    a.mean += delta / static_cast<double>(a.count);
    a.m2 += delta * (x - a.mean);
}

void chan_merge(ChunkAcc& into, const ChunkAcc& b) {
    if (b.count > 0) {
        if (into.count == 0) {
            into.count = b.count;
            into.mean = b.mean;
            into.m2 = b.m2;
        } else {
            double delta = b.mean - into.mean;
            long n = into.count + b.count;
            into.m2 += b.m2 + delta * delta * static_cast<double>(into.count) *
                                   static_cast<double>(b.count) / static_cast<double>(n);
            into.mean += delta * static_cast<double>(b.count) / static_cast<double>(n);
            into.count = n;
        }
    }
    into.rejected += b.rejected;
    for (std::size_t g = 0; g < into.gsum.size(); ++g) {
        into.gsum[g] += b.gsum[g];
        into.gcnt[g] += b.gcnt[g];
    }
}

}  // namespace

double KernelValue::value() const {
    if (!ok) return std::numeric_limits<double>::quiet_NaN();
    return std::exp(log_k);
}

KernelValue kernel_K_n(const FieldSpec& spec, const std::vector<Eigen::VectorXd>& points,
                       double beta) {
    if (points.empty()) throw std::invalid_argument("kernel_K_n: no points");
    if (!(beta > 0.0)) throw std::invalid_argument("kernel_K_n: beta must be positive");
    const int d = spec.d();
    const int n = static_cast<int>(points.size());
    if (static_cast<long>(n) * d > kDefaultFactorCap)
        throw std::invalid_argument("kernel_K_n: n*d exceeds the factorization cap");
    for (const auto& p : points)
        if (p.size() != spec.N())
            throw std::invalid_argument("kernel_K_n: point dimension != N");
    Eigen::MatrixXd cov;
    assemble_cov(spec.model(), points, d, cov);
    double logdet;
    KernelValue out;
    if (!cholesky_logdet(cov, &logdet)) return out;  // degenerate: reject
    out.log_k = beta * (-0.5 * n * d * kLog2Pi - 0.5 * logdet);
    out.ok = true;
    return out;
}

MomentEstimate moment_mc(const FieldSpec& spec, int n, long samples, std::uint64_t seed,
                         double beta, const MomentOptions& options) {
    if (n < 1) throw std::invalid_argument("moment_mc: order must be positive");
    if (samples <= 0)
        throw std::invalid_argument("moment_mc: samples must be positive, refusing a vacuous estimate");
    if (!(beta > 0.0)) throw std::invalid_argument("moment_mc: beta must be positive");
    if (options.blocks < 1) throw std::invalid_argument("moment_mc: blocks must be positive");
    if (!spec.integrable(beta)) {
        std::ostringstream os;
        os << "moment_mc: non-integrable kernel power: require sum(alpha) > beta*tr(H), got "
           << spec.alpha_sum() << " <= " << beta * spec.trace_H();
        throw std::invalid_argument(os.str());
    }
    const int N = spec.N();
    const int d = spec.d();
    if (static_cast<long>(n) * d > kDefaultFactorCap)
        throw std::invalid_argument("moment_mc: n*d exceeds the factorization cap");

    const int blocks = options.blocks;
    const long chunk = 8192;
    const std::size_t n_chunks = static_cast<std::size_t>((samples + chunk - 1) / chunk);
    std::vector<ChunkAcc> accs(n_chunks);
    const CovModel& model = spec.model();
    const double log_pref = -0.5 * n * d * kLog2Pi;

    parallel_chunks(samples, chunk, [&](std::size_t ci, long begin, long end) {
        ChunkAcc acc;
        acc.gsum.assign(static_cast<std::size_t>(blocks), 0.0);
        acc.gcnt.assign(static_cast<std::size_t>(blocks), 0);
        std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n));
        for (auto& p : pts) p.resize(N);
        Eigen::MatrixXd cov;
        for (long idx = begin; idx < end; ++idx) {
            RngStream rng(seed, options.stream_base + static_cast<std::uint64_t>(idx));
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < N; ++i) pts[static_cast<std::size_t>(j)][i] = rng.next_unit();
            assemble_cov(model, pts, d, cov);
            double logdet;
            if (!cholesky_logdet(cov, &logdet)) {
                ++acc.rejected;
                continue;
            }
            double v = std::exp(beta * (log_pref - 0.5 * logdet));
            welford_push(acc, v);
            std::size_t g = static_cast<std::size_t>(
                (static_cast<unsigned long long>(idx) * static_cast<unsigned long long>(blocks)) /
                static_cast<unsigned long long>(samples));
            acc.gsum[g] += v;
            ++acc.gcnt[g];
        }
        accs[ci] = std::move(acc);
    });

    ChunkAcc total;
    total.gsum.assign(static_cast<std::size_t>(blocks), 0.0);
    total.gcnt.assign(static_cast<std::size_t>(blocks), 0);
    for (const auto& acc : accs) chan_merge(total, acc);

    if (total.count == 0)
        throw std::runtime_error("moment_mc: every sampled configuration was degenerate");

    MomentEstimate est;
    est.n = n;
    est.samples = samples;
    est.rejected = total.rejected;
    est.beta = beta;
    est.seed = seed;
    est.median_of_means = options.median_of_means;
    est.warning = total.rejected * 100 > samples;  // > 1%

    est.mean = total.mean;
    double var = total.count > 1 ? total.m2 / static_cast<double>(total.count - 1) : 0.0;
    est.mean_se = std::sqrt(var / static_cast<double>(total.count));

    std::vector<double> gmeans;
    gmeans.reserve(static_cast<std::size_t>(blocks));
    for (int g = 0; g < blocks; ++g)
        if (total.gcnt[static_cast<std::size_t>(g)] > 0)
            gmeans.push_back(total.gsum[static_cast<std::size_t>(g)] /
                             static_cast<double>(total.gcnt[static_cast<std::size_t>(g)]));
    est.mom = median_of(gmeans);
    est.mom_se = gmeans.size() > 1
                     ? 1.2533 * sd_ddof1(gmeans) / std::sqrt(static_cast<double>(gmeans.size()))
                     : est.mean_se;

    if (options.median_of_means) {
        est.value = est.mom;
        est.se = est.mom_se;
    } else {
        est.value = est.mean;
        est.se = est.mean_se;
    }
    return est;
}

MomentSeries moment_series(const FieldSpec& spec, int n_max, long budget, std::uint64_t seed,
                           double beta, const MomentOptions& options) {
    if (n_max < 1) throw std::invalid_argument("moment_series: n_max must be positive");
    if (budget <= 0) throw std::invalid_argument("moment_series: budget must be positive");

    const long pilot_n = std::max<long>(1000, budget / (2 * n_max));
    std::vector<double> weight(static_cast<std::size_t>(n_max), 1.0);
    for (int n = 1; n <= n_max; ++n) {
        MomentOptions opt = options;
        opt.stream_base = static_cast<std::uint64_t>(2 * n) << 40;
        MomentEstimate pilot = moment_mc(spec, n, pilot_n, seed, beta, opt);
        double relvar = 1.0;
        if (pilot.mean > 0.0) {
            double v = pilot.mean_se * pilot.mean_se * static_cast<double>(pilot_n);
            relvar = v / (pilot.mean * pilot.mean);
        } else {
            relvar = 1e6;
        }
        weight[static_cast<std::size_t>(n - 1)] = std::clamp(relvar, 1e-3, 1e6);
    }
    double wsum = std::accumulate(weight.begin(), weight.end(), 0.0);
    long remaining = std::max<long>(0, budget - pilot_n * n_max);

    MomentSeries series;
    series.fingerprint = spec.fingerprint();
    series.beta = beta;
    for (int n = 1; n <= n_max; ++n) {
        long alloc = std::max<long>(
            1000, std::lround(static_cast<double>(remaining) *
                              weight[static_cast<std::size_t>(n - 1)] / wsum));
        MomentOptions opt = options;
        opt.stream_base = static_cast<std::uint64_t>(2 * n + 1) << 40;
        series.entries.push_back(moment_mc(spec, n, alloc, seed, beta, opt));
    }
    return series;
}

bool lyapunov_consistent(const MomentSeries& series, double k_sigma) {
    for (std::size_t i = 0; i + 1 < series.entries.size(); ++i) {
        const MomentEstimate& a = series.entries[i];
        const MomentEstimate& b = series.entries[i + 1];
        if (!(a.value > 0.0) || !(b.value > 0.0)) return false;
        double ra = std::pow(a.value, 1.0 / a.n);
        double rb = std::pow(b.value, 1.0 / b.n);
        double sa = ra * a.se / (a.n * a.value);
        double sb = rb * b.se / (b.n * b.value);
        if (rb + k_sigma * sb < ra - k_sigma * sa) return false;
    }
    return true;
}

std::vector<GrowthPoint> growth_ratio(const MomentSeries& series, double lambda) {
    if (series.entries.empty()) throw std::invalid_argument("growth_ratio: empty series");
    if (lambda < 0.0) throw std::invalid_argument("growth_ratio: lambda must be nonnegative");
    std::vector<GrowthPoint> out;
    out.reserve(series.entries.size());
    for (const MomentEstimate& e : series.entries) {
        GrowthPoint p;
        p.n = e.n;
        if (e.value > 0.0) {
            p.ratio = std::pow(e.value, 1.0 / e.n) / std::pow(static_cast<double>(e.n), lambda);
            p.se = p.ratio * e.se / (e.n * e.value);
        }
        p.lo = p.ratio - 1.96 * p.se;
        p.hi = p.ratio + 1.96 * p.se;
        out.push_back(p);
    }
    return out;
}

FactorialBound factorial_bound_check(const MomentSeries& series, double xi_sum, double beta) {
    if (series.entries.empty())
        throw std::invalid_argument("factorial_bound_check: empty series");
    if (!(xi_sum > 0.0))
        throw std::invalid_argument("factorial_bound_check: xi_sum must be positive");
    const double expo = beta / xi_sum;
    FactorialBound out;
    std::vector<double> xs, ys;
    double best = -std::numeric_limits<double>::infinity();
    for (const MomentEstimate& e : series.entries) {
        if (!(e.value > 0.0)) {
            out.roots.push_back(0.0);
            continue;
        }
        double log_cn = std::log(e.value) - expo * std::lgamma(static_cast<double>(e.n) + 1.0);
        double log_root = log_cn / e.n;
        out.roots.push_back(std::exp(log_root));
        best = std::max(best, log_root);
        xs.push_back(std::log(static_cast<double>(e.n)));
        ys.push_back(log_root);
    }
    if (!std::isfinite(best)) return out;  // no usable orders: c stays 0, unstable
    out.c = std::exp(best);
    if (xs.size() < 2) {
        out.trend_slope = 0.0;  // single point: c = value_1, trivially stable
        out.stable = true;
        return out;
    }
    double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    out.trend_slope = sxx > 0.0 ? sxy / sxx : 0.0;
    out.stable = out.trend_slope <= kFactorialTrendTol;
    return out;
}

FieldSpec intersection_field(const std::vector<FieldSpec>& specs) {
    if (specs.size() < 2)
        throw std::invalid_argument("intersection_field: need at least two fields");
    const int d = specs.front().d();
    const Eigen::MatrixXd& H0 = specs.front().H().H;
    for (const FieldSpec& s : specs) {
        if (s.d() != d)
            throw std::invalid_argument("intersection_field: component fields must share d");
        if (s.H().H.rows() != H0.rows() ||
            (s.H().H - H0).cwiseAbs().maxCoeff() > 1e-12)
            throw std::invalid_argument("intersection_field: component fields must share H");
    }
    const int m = static_cast<int>(specs.size());
    std::vector<std::shared_ptr<const CovModel>> parts;
    parts.reserve(specs.size());
    std::vector<double> alpha;
    double c0 = 0.0;
    for (const FieldSpec& s : specs) {
        parts.push_back(s.model_ptr());
        alpha.insert(alpha.end(), s.alpha().alpha.begin(), s.alpha().alpha.end());
        c0 = std::max(c0, s.c0());
    }
    auto model = std::make_shared<IntersectionModel>(std::move(parts));
    const int Nt = model->param_dim();
    const int dt = model->value_dim();
    Eigen::MatrixXd Ht = Eigen::MatrixXd::Zero(dt, dt);
    for (int j = 0; j < m - 1; ++j) Ht.block(j * d, j * d, d, d) = H0;
    SpecLimits limits{std::max(4, Nt), std::max(4, dt)};
    return FieldSpec(Nt, dt, ScalingVector(std::move(alpha)), ScalingMatrix(std::move(Ht)),
                     std::move(model), 2.0 * c0, limits);
}

HolderCheck holder_kernel_bound_check(const std::vector<FieldSpec>& specs,
                                      const std::vector<double>& q, long configs, int n_max,
                                      std::uint64_t seed) {
    const std::size_t m = specs.size();
    if (q.size() != m)
        throw std::invalid_argument("holder_kernel_bound_check: need one weight per field");
    double qsum = 0.0;
    for (double w : q) {
        if (w < -1e-12 || w > 1.0 + 1e-12)
            throw std::invalid_argument(
                "holder_kernel_bound_check: weights must satisfy 0 <= q_k <= 1");
        qsum += w;
    }
    if (std::abs(qsum - (static_cast<double>(m) - 1.0)) > 1e-9)
        throw std::invalid_argument(
            "holder_kernel_bound_check: weights must satisfy sum(q) = m-1");
    if (configs < 1 || n_max < 1)
        throw std::invalid_argument("holder_kernel_bound_check: need configs >= 1, n_max >= 1");

    FieldSpec delta = intersection_field(specs);
    std::vector<int> offsets(m + 1, 0);
    for (std::size_t k = 0; k < m; ++k)
        offsets[k + 1] = offsets[k] + specs[k].N();

    HolderCheck out;
    out.margins.reserve(static_cast<std::size_t>(configs));
    for (long cfg = 0; cfg < configs; ++cfg) {
        RngStream rng(seed, static_cast<std::uint64_t>(cfg));
        int n = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n_max));
        std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n));
        for (auto& p : pts) {
            p.resize(delta.N());
            for (int i = 0; i < delta.N(); ++i) p[i] = rng.next_unit();
        }
        KernelValue kd = kernel_K_n(delta, pts, 1.0);
        if (!kd.ok) {
            ++out.rejected;
            continue;
        }
        double rhs = 0.0;
        bool usable = true;
        for (std::size_t k = 0; k < m && usable; ++k) {
            if (q[k] == 0.0) continue;  // zero weight: component kernel unused
            std::vector<Eigen::VectorXd> sub(static_cast<std::size_t>(n));
            for (int j = 0; j < n; ++j)
                sub[static_cast<std::size_t>(j)] =
                    pts[static_cast<std::size_t>(j)].segment(offsets[k], specs[k].N());
            KernelValue kk = kernel_K_n(specs[k], sub, 1.0);
            if (!kk.ok) {
                usable = false;
                break;
            }
            rhs += q[k] * kk.log_k;
        }
        if (!usable) {
            ++out.rejected;
            continue;
        }
        double margin = kd.log_k - rhs;
        out.margins.push_back(margin);
        out.max_margin = std::max(out.max_margin, margin);
    }
    return out;
}

}  // namespace loctail
