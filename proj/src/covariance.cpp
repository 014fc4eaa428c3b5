#include "loctail/covariance.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "loctail/rng.hpp"

namespace loctail {

namespace {

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double stationary_pair(double s2s, double s2t, double s2st) {
    return 0.5 * (s2s + s2t - s2st);
}

}  // namespace

// ---- MultiFbm --------------------------------------------------------------

MultiFbm::MultiFbm(int N, double hurst) : N_(N), h_(hurst) {
    if (N < 1) throw std::invalid_argument("MultiFbm: N must be positive");
    if (!(hurst > 0.0 && hurst <= 1.0))
        throw std::invalid_argument("MultiFbm: hurst must lie in (0,1]");
}

double MultiFbm::sigma2(const Eigen::VectorXd& t) const {
    return std::pow(t.squaredNorm(), h_);
}

Eigen::MatrixXd MultiFbm::cross_cov(const Eigen::VectorXd& s, const Eigen::VectorXd& t) const {
    Eigen::MatrixXd out(1, 1);
    out(0, 0) = stationary_pair(sigma2(s), sigma2(t), sigma2(s - t));
    return out;
}

ScalingVector MultiFbm::alpha() const {
    return ScalingVector(std::vector<double>(static_cast<std::size_t>(N_), 1.0));
}

Eigen::MatrixXd MultiFbm::scaling_matrix() const {
    Eigen::MatrixXd H(1, 1);
    H(0, 0) = h_;
    return H;
}

std::string MultiFbm::describe() const {
    return "multi_fbm(N=" + std::to_string(N_) + ",h=" + fmt_num(h_) + ")";
}

// ---- AnisoFbm --------------------------------------------------------------

AnisoFbm::AnisoFbm(std::vector<double> c, std::vector<double> p, double hurst)
    : c_(std::move(c)), p_(std::move(p)), h_(hurst) {
    if (c_.empty() || c_.size() != p_.size())
        throw std::invalid_argument("AnisoFbm: c and p must be nonempty, same length");
    for (double v : c_)
        if (!(v > 0.0)) throw std::invalid_argument("AnisoFbm: c entries must be positive");
    for (double v : p_)
        if (!(v > 0.0 && v <= 2.0))
            throw std::invalid_argument("AnisoFbm: p entries must lie in (0,2]");
    // (sum c|t_i|^{p_i})^{2h} is a valid variogram only for 2h <= 1: each
    // |t_i|^{p_i} is negative definite, sums stay so, and fractional powers
    // preserve that only up to exponent 1 (already sharp for p = (2,...,2))
    if (!(h_ > 0.0 && 2.0 * h_ <= 1.0))
        throw std::invalid_argument("AnisoFbm: need 0 < 2*hurst <= 1 for a valid covariance");
}

double AnisoFbm::sigma2(const Eigen::VectorXd& t) const {
    double acc = 0.0;
    for (int i = 0; i < t.size(); ++i)
        acc += c_[static_cast<std::size_t>(i)] *
               std::pow(std::abs(t[i]), p_[static_cast<std::size_t>(i)]);
    return std::pow(acc, 2.0 * h_);
}

Eigen::MatrixXd AnisoFbm::cross_cov(const Eigen::VectorXd& s, const Eigen::VectorXd& t) const {
    Eigen::MatrixXd out(1, 1);
    out(0, 0) = stationary_pair(sigma2(s), sigma2(t), sigma2(s - t));
    return out;
}

ScalingVector AnisoFbm::alpha() const {
    std::vector<double> a(p_.size());
    for (std::size_t i = 0; i < p_.size(); ++i) a[i] = 1.0 / p_[i];
    return ScalingVector(std::move(a));
}

Eigen::MatrixXd AnisoFbm::scaling_matrix() const {
    Eigen::MatrixXd H(1, 1);
    H(0, 0) = h_;
    return H;
}

std::string AnisoFbm::describe() const {
    std::ostringstream os;
    os << "aniso_fbm(c=";
    for (std::size_t i = 0; i < c_.size(); ++i) os << (i ? "," : "") << fmt_num(c_[i]);
    os << ";p=";
    for (std::size_t i = 0; i < p_.size(); ++i) os << (i ? "," : "") << fmt_num(p_[i]);
    os << ";h=" << fmt_num(h_) << ")";
    return os.str();
}

// ---- IndependentComponents -------------------------------------------------

IndependentComponents::IndependentComponents(std::vector<std::shared_ptr<const CovModel>> comps)
    : comps_(std::move(comps)) {
    if (comps_.empty()) throw std::invalid_argument("IndependentComponents: empty");
    for (const auto& c : comps_) {
        if (!c) throw std::invalid_argument("IndependentComponents: null component");
        if (c->value_dim() != 1)
            throw std::invalid_argument("IndependentComponents: components must be scalar");
        if (c->param_dim() != comps_.front()->param_dim())
            throw std::invalid_argument("IndependentComponents: components must share N");
    }
}

int IndependentComponents::param_dim() const { return comps_.front()->param_dim(); }

Eigen::MatrixXd IndependentComponents::cross_cov(const Eigen::VectorXd& s,
                                                 const Eigen::VectorXd& t) const {
    int d = value_dim();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
    for (int a = 0; a < d; ++a)
        out(a, a) = comps_[static_cast<std::size_t>(a)]->cross_cov(s, t)(0, 0);
    return out;
}

ScalingVector IndependentComponents::alpha() const { return comps_.front()->alpha(); }

Eigen::MatrixXd IndependentComponents::scaling_matrix() const {
    int d = value_dim();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(d, d);
    for (int a = 0; a < d; ++a)
        H(a, a) = comps_[static_cast<std::size_t>(a)]->scaling_matrix()(0, 0);
    return H;
}

std::string IndependentComponents::describe() const {
    std::string s = "independent(";
    for (std::size_t i = 0; i < comps_.size(); ++i)
        s += (i ? ";" : "") + comps_[i]->describe();
    return s + ")";
}

// ---- ExplicitKernel ----------------------------------------------------------

ExplicitKernel::ExplicitKernel(int N, int d, Kernel k, ScalingVector alpha, Eigen::MatrixXd H)
    : N_(N), d_(d), kernel_(std::move(k)), alpha_(std::move(alpha)), H_(std::move(H)) {
    if (N_ < 1 || d_ < 1) throw std::invalid_argument("ExplicitKernel: bad dimensions");
    if (!kernel_) throw std::invalid_argument("ExplicitKernel: missing kernel");
}

Eigen::MatrixXd ExplicitKernel::cross_cov(const Eigen::VectorXd& s,
                                          const Eigen::VectorXd& t) const {
    return kernel_(s, t);
}

// ---- IntersectionModel -------------------------------------------------------

IntersectionModel::IntersectionModel(std::vector<std::shared_ptr<const CovModel>> parts)
    : parts_(std::move(parts)) {
    if (parts_.size() < 2) throw std::invalid_argument("IntersectionModel: need m >= 2 fields");
    sub_d_ = parts_.front()->value_dim();
    offsets_.resize(parts_.size() + 1, 0);
    for (std::size_t k = 0; k < parts_.size(); ++k) {
        if (!parts_[k]) throw std::invalid_argument("IntersectionModel: null component");
        if (parts_[k]->value_dim() != sub_d_)
            throw std::invalid_argument("IntersectionModel: value dimensions disagree");
        offsets_[k + 1] = offsets_[k] + parts_[k]->param_dim();
    }
}

int IntersectionModel::param_dim() const { return offsets_.back(); }

int IntersectionModel::value_dim() const {
    return static_cast<int>(parts_.size() - 1) * sub_d_;
}

Eigen::MatrixXd IntersectionModel::cross_cov(const Eigen::VectorXd& s,
                                             const Eigen::VectorXd& t) const {
    int m = static_cast<int>(parts_.size());
    auto part_point = [&](const Eigen::VectorXd& v, int k) {
        return Eigen::VectorXd(v.segment(offsets_[static_cast<std::size_t>(k)],
                                         parts_[static_cast<std::size_t>(k)]->param_dim()));
    };
    // R_k = E[X_k(s_k) X_k(t_k)^T], needed for blocks (j,j), (j,j+1), (j+1,j)
    std::vector<Eigen::MatrixXd> R;
    R.reserve(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k)
        R.push_back(parts_[static_cast<std::size_t>(k)]->cross_cov(part_point(s, k),
                                                                   part_point(t, k)));
    int dd = value_dim();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dd, dd);
    for (int j = 0; j + 1 < m; ++j) {
        out.block(j * sub_d_, j * sub_d_, sub_d_, sub_d_) =
            R[static_cast<std::size_t>(j)] + R[static_cast<std::size_t>(j + 1)];
        if (j + 2 < m) {
            out.block(j * sub_d_, (j + 1) * sub_d_, sub_d_, sub_d_) =
                -R[static_cast<std::size_t>(j + 1)];
            out.block((j + 1) * sub_d_, j * sub_d_, sub_d_, sub_d_) =
                -R[static_cast<std::size_t>(j + 1)].transpose();
        }
    }
    return out;
}

ScalingVector IntersectionModel::alpha() const {
    std::vector<double> a;
    for (const auto& p : parts_) {
        ScalingVector ap = p->alpha();
        a.insert(a.end(), ap.alpha.begin(), ap.alpha.end());
    }
    return ScalingVector(std::move(a));
}

Eigen::MatrixXd IntersectionModel::scaling_matrix() const {
    Eigen::MatrixXd Hsub = parts_.front()->scaling_matrix();
    int copies = static_cast<int>(parts_.size()) - 1;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(copies * sub_d_, copies * sub_d_);
    for (int j = 0; j < copies; ++j) H.block(j * sub_d_, j * sub_d_, sub_d_, sub_d_) = Hsub;
    return H;
}

std::string IntersectionModel::describe() const {
    std::string s = "intersection(";
    for (std::size_t i = 0; i < parts_.size(); ++i)
        s += (i ? ";" : "") + parts_[i]->describe();
    return s + ")";
}

// ---- factorization -----------------------------------------------------------

bool cholesky_logdet(Eigen::MatrixXd& a, double* logdet) {
    const Eigen::Index n = a.rows();
    double max_diag = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) max_diag = std::max(max_diag, a(j, j));
    // relative pivot floor: rounding-level pivots mean a singular matrix
    const double floor = std::max(1e-300, static_cast<double>(n) * 2.22e-16 * max_diag);
    double ld = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        double diag = a(j, j);
        for (Eigen::Index k = 0; k < j; ++k) diag -= a(j, k) * a(j, k);
        if (!(diag >= floor)) return false;  // reject, never jitter
        double root = std::sqrt(diag);
        a(j, j) = root;
        ld += std::log(root);
        double inv = 1.0 / root;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double v = a(i, j);
            for (Eigen::Index k = 0; k < j; ++k) v -= a(i, k) * a(j, k);
            a(i, j) = v * inv;
        }
    }
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < j; ++i) a(i, j) = 0.0;
    if (logdet) *logdet = 2.0 * ld;
    return true;
}

CovMatrix cov_matrix(const FieldSpec& spec, const std::vector<Eigen::VectorXd>& points, int cap) {
    const int n = static_cast<int>(points.size());
    const int d = spec.d();
    if (n < 1) throw std::invalid_argument("cov_matrix: no points");
    if (static_cast<long>(n) * d > cap)
        throw std::invalid_argument("cov_matrix: n*d exceeds the factorization cap");
    for (const auto& p : points)
        if (p.size() != spec.N())
            throw std::invalid_argument("cov_matrix: point dimension != N");

    CovMatrix out;
    out.n_points = n;
    out.d = d;
    out.cov.resize(n * d, n * d);
    const CovModel& model = spec.model();
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            Eigen::MatrixXd blk = model.cross_cov(points[static_cast<std::size_t>(i)],
                                                  points[static_cast<std::size_t>(j)]);
            out.cov.block(i * d, j * d, d, d) = blk;
            if (j > i) out.cov.block(j * d, i * d, d, d) = blk.transpose();
        }
    }
    // enforce exact symmetry before factorizing
    out.cov = ((out.cov + out.cov.transpose()) * 0.5).eval();
    Eigen::MatrixXd fac = out.cov;
    double ld;
    if (cholesky_logdet(fac, &ld)) {
        out.chol = std::move(fac);
        out.logdet = ld;
        out.ok = true;
    }
    return out;
}

// ---- residuals and checks ------------------------------------------------------

double self_similarity_residual(const FieldSpec& spec, double omega,
                                const std::vector<Eigen::VectorXd>& sample) {
    if (!(omega > 0.0)) throw std::invalid_argument("self_similarity_residual: omega > 0");
    const CovModel& model = spec.model();
    Eigen::MatrixXd wH = matrix_power(omega, spec.H());
    double worst = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        for (std::size_t j = i; j < sample.size(); ++j) {
            Eigen::VectorXd ss = schur_scale(sample[i], omega, spec.alpha());
            Eigen::VectorXd ts = schur_scale(sample[j], omega, spec.alpha());
            Eigen::MatrixXd lhs = model.cross_cov(ss, ts);
            Eigen::MatrixXd rhs = wH * model.cross_cov(sample[i], sample[j]) * wH.transpose();
            double scale = std::max({1e-300, lhs.cwiseAbs().maxCoeff(), rhs.cwiseAbs().maxCoeff()});
            worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff() / scale);
        }
    }
    return worst;
}

std::optional<double> conditional_detcov(const FieldSpec& spec, const Eigen::VectorXd& u,
                                         const std::vector<Eigen::VectorXd>& raw_conditioners) {
    const int d = spec.d();
    const CovModel& model = spec.model();
    // an a.s.-deterministic value (zero variance, e.g. the pinned origin)
    // carries no information: conditioning on it is a no-op, and keeping it
    // would make the conditioner covariance singular by construction
    std::vector<Eigen::VectorXd> conditioners;
    conditioners.reserve(raw_conditioners.size());
    for (const auto& t : raw_conditioners)
        if (model.cross_cov(t, t).diagonal().maxCoeff() > 1e-300) conditioners.push_back(t);
    if (conditioners.empty()) {
        Eigen::MatrixXd own = model.cross_cov(u, u);
        if (d == 1) return own(0, 0);
        Eigen::MatrixXd fac = own;
        double ld;
        if (!cholesky_logdet(fac, &ld)) return 0.0;  // PSD: zero determinant
        return std::exp(ld);
    }
    const int m = static_cast<int>(conditioners.size());
    Eigen::MatrixXd C(m * d, m * d);
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) {
            Eigen::MatrixXd blk = model.cross_cov(conditioners[static_cast<std::size_t>(i)],
                                                  conditioners[static_cast<std::size_t>(j)]);
            C.block(i * d, j * d, d, d) = blk;
            if (j > i) C.block(j * d, i * d, d, d) = blk.transpose();
        }
    C = ((C + C.transpose()) * 0.5).eval();
    double ldC;
    Eigen::MatrixXd L = C;
    if (!cholesky_logdet(L, &ldC)) return std::nullopt;  // singular conditioners

    Eigen::MatrixXd cross(m * d, d);  // E[cond u^T]
    for (int i = 0; i < m; ++i)
        cross.block(i * d, 0, d, d) =
            model.cross_cov(conditioners[static_cast<std::size_t>(i)], u);
    Eigen::MatrixXd own = model.cross_cov(u, u);
    Eigen::MatrixXd w = L.triangularView<Eigen::Lower>().solve(cross);
    Eigen::MatrixXd schur = own - w.transpose() * w;
    if (d == 1) return std::max(0.0, schur(0, 0));
    schur = ((schur + schur.transpose()) * 0.5).eval();
    Eigen::MatrixXd fac = schur;
    double ld;
    if (!cholesky_logdet(fac, &ld)) return 0.0;
    return std::exp(ld);
}

ChainReport detcov_chain_check(const FieldSpec& spec,
                               const std::vector<Eigen::VectorXd>& points) {
    ChainReport rep;
    CovMatrix joint = cov_matrix(spec, points);
    if (!joint.ok) {
        rep.degenerate = true;
        return rep;
    }
    rep.logdet_joint = joint.logdet;
    double acc = 0.0;
    for (std::size_t k = 0; k < points.size(); ++k) {
        std::vector<Eigen::VectorXd> prefix(points.begin(),
                                            points.begin() + static_cast<std::ptrdiff_t>(k));
        auto v = conditional_detcov(spec, points[k], prefix);
        if (!v || !(*v > 0.0)) {
            rep.degenerate = true;
            return rep;
        }
        acc += std::log(*v);
    }
    rep.sum_log_conditionals = acc;
    rep.rel_error = std::abs(rep.logdet_joint - acc) /
                    std::max({1.0, std::abs(rep.logdet_joint), std::abs(acc)});
    return rep;
}

namespace {

// covariance of the stacked blocks, each block flattened to m_i*d values
Eigen::MatrixXd blocks_cov(const FieldSpec& spec,
                           const std::vector<std::vector<Eigen::VectorXd>>& blocks) {
    std::vector<Eigen::VectorXd> all;
    for (const auto& b : blocks) all.insert(all.end(), b.begin(), b.end());
    const int d = spec.d();
    const int total = static_cast<int>(all.size()) * d;
    Eigen::MatrixXd C(total, total);
    const CovModel& model = spec.model();
    for (std::size_t i = 0; i < all.size(); ++i)
        for (std::size_t j = i; j < all.size(); ++j) {
            Eigen::MatrixXd blk = model.cross_cov(all[i], all[j]);
            C.block(static_cast<int>(i) * d, static_cast<int>(j) * d, d, d) = blk;
            if (j > i)
                C.block(static_cast<int>(j) * d, static_cast<int>(i) * d, d, d) =
                    blk.transpose();
        }
    return ((C + C.transpose()) * 0.5).eval();
}

std::optional<double> logdet_of(const Eigen::MatrixXd& m) {
    Eigen::MatrixXd fac = m;
    double ld;
    if (!cholesky_logdet(fac, &ld)) return std::nullopt;
    return ld;
}

}  // namespace

ReductionReport reduction_inequality_check(const FieldSpec& spec,
                                           const std::vector<std::vector<Eigen::VectorXd>>& blocks,
                                           int pivot) {
    const int n = static_cast<int>(blocks.size());
    if (n < 1) throw std::invalid_argument("reduction_inequality_check: no blocks");
    if (pivot < 0 || pivot >= n)
        throw std::invalid_argument("reduction_inequality_check: pivot out of range");
    const std::size_t m = blocks.front().size();
    for (const auto& b : blocks)
        if (b.size() != m)
            throw std::invalid_argument("reduction_inequality_check: blocks must share size");

    ReductionReport rep;
    const int d = spec.d();
    const int bs = static_cast<int>(m) * d;  // flattened block size
    Eigen::MatrixXd C = blocks_cov(spec, blocks);
    auto ld_all = logdet_of(C);
    if (!ld_all) {
        rep.degenerate = true;
        return rep;
    }

    // product inequality: detcov(all) <= prod detcov(Y_i)
    double sum_parts = 0.0;
    for (int i = 0; i < n; ++i) {
        auto ld = logdet_of(C.block(i * bs, i * bs, bs, bs));
        if (!ld) {
            rep.degenerate = true;
            return rep;
        }
        sum_parts += *ld;
    }
    rep.margin_product = sum_parts - *ld_all;

    // pivot inequality: detcov(all) <= detcov(Y_k) * detcov(Y_i - Y_k, i != k)
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero((n - 1) * bs, n * bs);
    {
        int row = 0;
        for (int i = 0; i < n; ++i) {
            if (i == pivot) continue;
            A.block(row * bs, i * bs, bs, bs) = Eigen::MatrixXd::Identity(bs, bs);
            A.block(row * bs, pivot * bs, bs, bs) = -Eigen::MatrixXd::Identity(bs, bs);
            ++row;
        }
    }
    double ld_pivot, ld_diff = 0.0;
    {
        auto ld = logdet_of(C.block(pivot * bs, pivot * bs, bs, bs));
        if (!ld) {
            rep.degenerate = true;
            return rep;
        }
        ld_pivot = *ld;
    }
    if (n > 1) {
        Eigen::MatrixXd D = A * C * A.transpose();
        D = ((D + D.transpose()) * 0.5).eval();
        auto ld = logdet_of(D);
        if (!ld) {
            rep.degenerate = true;
            return rep;
        }
        ld_diff = *ld;
    }
    rep.margin_pivot = ld_pivot + ld_diff - *ld_all;
    rep.ok = rep.margin_pivot >= -1e-9 && rep.margin_product >= -1e-9;
    return rep;
}

SlndProbe slnd_probe(const FieldSpec& spec, const SLNDSpec& slnd, long trials,
                     int n_max, std::uint64_t seed) {
    if (n_max < 1) throw std::invalid_argument("slnd_probe: n_max must be positive");
    if (static_cast<long>(spec.d()) * (n_max + 1) > kDefaultFactorCap)
        throw std::invalid_argument("slnd_probe: configuration exceeds factorization cap");
    SlndProbe probe;
    const int N = spec.N();
    for (long trial = 0; trial < trials; ++trial) {
        RngStream rng(seed, static_cast<std::uint64_t>(trial));
        int n = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n_max));
        Eigen::VectorXd u(N);
        for (int i = 0; i < N; ++i) u[i] = rng.next_unit();
        std::vector<Eigen::VectorXd> cond;
        cond.reserve(static_cast<std::size_t>(n) + 1);
        for (int j = 0; j < n; ++j) {
            Eigen::VectorXd t(N);
            for (int i = 0; i < N; ++i) t[i] = rng.next_unit();
            cond.push_back(std::move(t));
        }
        // t_0 = 0 is always part of the conditioning set
        cond.push_back(Eigen::VectorXd::Zero(N));

        double dist = std::numeric_limits<double>::infinity();
        for (const auto& t : cond) dist = std::min(dist, alpha_dist(u, t, spec.alpha()));
        if (!(dist > 1e-9)) {  // u (nearly) coincides with a conditioner: 0/0 guard
            ++probe.rejected;
            continue;
        }
        auto v = conditional_detcov(spec, u, cond);
        if (!v) {
            ++probe.rejected;
            continue;
        }
        double ratio = *v / std::pow(dist, 2.0 * slnd.H_slnd);
        ++probe.trials;
        if (ratio < probe.min_ratio) {
            probe.min_ratio = ratio;
            probe.argmin_u = u;
            probe.argmin_conditioners = cond;
        }
    }
    return probe;
}

}  // namespace loctail
