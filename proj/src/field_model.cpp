#include "loctail/field_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

#include "loctail/covariance.hpp"

namespace loctail {

ScalingVector::ScalingVector(std::vector<double> a) : alpha(std::move(a)) {
    if (alpha.empty()) throw std::invalid_argument("ScalingVector: empty");
    for (double v : alpha)
        if (!(v >= 1e-3 && v <= 1e3))
            throw std::invalid_argument("ScalingVector: entries must lie in [1e-3, 1e3]");
}

double ScalingVector::sum() const {
    return std::accumulate(alpha.begin(), alpha.end(), 0.0);
}

double ScalingVector::min() const {
    return *std::min_element(alpha.begin(), alpha.end());
}

namespace {

// best rational approximation p/q of x with q <= qmax, by continued fractions
bool rational_within(double x, std::int64_t qmax, double rel_tol) {
    double frac = x;
    std::int64_t p_prev = 1, q_prev = 0, p = static_cast<std::int64_t>(std::floor(frac)), q = 1;
    double rem = frac - std::floor(frac);
    for (int iter = 0; iter < 64; ++iter) {
        if (q <= qmax && std::abs(static_cast<double>(p) / static_cast<double>(q) - x) <= rel_tol * std::abs(x))
            return true;
        if (rem < 1e-15) break;
        double inv = 1.0 / rem;
        double a_f = std::floor(inv);
        if (a_f > 9.2e18) break;
        std::int64_t a = static_cast<std::int64_t>(a_f);
        rem = inv - a_f;
        std::int64_t p_next = a * p + p_prev;
        std::int64_t q_next = a * q + q_prev;
        p_prev = p; q_prev = q; p = p_next; q = q_next;
        if (q > qmax) break;
    }
    return q <= qmax && q >= 1 &&
           std::abs(static_cast<double>(p) / static_cast<double>(q) - x) <= rel_tol * std::abs(x);
}

}  // namespace

bool ScalingVector::mutually_rational() const {
    for (std::size_t i = 0; i < alpha.size(); ++i)
        for (std::size_t j = i + 1; j < alpha.size(); ++j)
            if (!rational_within(alpha[i] / alpha[j], 1000000, 1e-12)) return false;
    return true;
}

ScalingMatrix::ScalingMatrix(Eigen::MatrixXd h) : H(std::move(h)) {
    if (H.rows() == 0 || H.rows() != H.cols())
        throw std::invalid_argument("ScalingMatrix: square nonempty matrix required");
    if (!(H.trace() > 0.0))
        throw std::invalid_argument("ScalingMatrix: tr(H) must be positive");
}

FieldSpec::FieldSpec(int N, int d, ScalingVector alpha, ScalingMatrix H,
                     std::shared_ptr<const CovModel> model, double c0, SpecLimits limits)
    : N_(N), d_(d), alpha_(std::move(alpha)), H_(std::move(H)), model_(std::move(model)), c0_(c0) {
    if (N_ < 1 || d_ < 1) throw std::invalid_argument("FieldSpec: N and d must be positive");
    if (N_ > limits.max_N || d_ > limits.max_d)
        throw std::invalid_argument("FieldSpec: exceeds configured desk-scale caps");
    if (alpha_.size() != N_) throw std::invalid_argument("FieldSpec: alpha length != N");
    if (H_.dim() != d_) throw std::invalid_argument("FieldSpec: H dimension != d");
    if (!model_) throw std::invalid_argument("FieldSpec: missing covariance model");
    if (model_->param_dim() != N_ || model_->value_dim() != d_)
        throw std::invalid_argument("FieldSpec: model (N,d) disagree with declared dimensions");
    if (!(c0_ > 0.0)) throw std::invalid_argument("FieldSpec: c0 must be positive");
}

bool FieldSpec::theorem_ready(std::string* reason) const {
    double lam = lambda_exponent(*this);
    if (!(lam > 0.0 && lam < 1.0)) {
        if (reason)
            *reason = "lambda = tr(H)/sum(alpha) = " + std::to_string(lam) +
                      " outside (0,1)";
        return false;
    }
    if (!integrable(1.0)) {
        if (reason)
            *reason = "moment integrability requires sum(alpha) > tr(H): " +
                      std::to_string(alpha_sum()) + " <= " + std::to_string(trace_H());
        return false;
    }
    return true;
}

SLNDSpec FieldSpec::slnd(double C) const {
    SLNDSpec s;
    double trH = trace_H();
    s.xi.resize(N_);
    for (int i = 0; i < N_; ++i) s.xi[i] = alpha_[i] / trH;
    s.H_slnd = trH;
    s.C_slnd = C;
    return s;
}

double alpha_norm(const Eigen::VectorXd& t, const ScalingVector& alpha) {
    if (t.size() != alpha.size())
        throw std::invalid_argument("alpha_norm: dimension mismatch");
    double acc = 0.0;
    for (int i = 0; i < t.size(); ++i) {
        double a = alpha[i];
        double x = std::abs(t[i]);
        acc += (a == 1.0) ? x : std::pow(x, 1.0 / a);
    }
    return acc;
}

double alpha_dist(const Eigen::VectorXd& s, const Eigen::VectorXd& t,
                  const ScalingVector& alpha) {
    return alpha_norm(s - t, alpha);
}

Eigen::VectorXd schur_scale(const Eigen::VectorXd& t, double omega,
                            const ScalingVector& alpha) {
    if (!(omega > 0.0)) throw std::invalid_argument("schur_scale: omega must be positive");
    if (t.size() != alpha.size())
        throw std::invalid_argument("schur_scale: dimension mismatch");
    Eigen::VectorXd out(t.size());
    for (int i = 0; i < t.size(); ++i) out[i] = t[i] * std::pow(omega, alpha[i]);
    return out;
}

namespace {

Eigen::MatrixXd exp_series(const Eigen::MatrixXd& A) {
    // scaling and squaring with a straight Taylor series; fine at desk scale
    double norm = A.cwiseAbs().rowwise().sum().maxCoeff();
    int s = 0;
    if (norm > 0.5) s = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    Eigen::MatrixXd B = A / std::ldexp(1.0, s);
    int n = static_cast<int>(A.rows());
    Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    for (int k = 1; k <= 40; ++k) {
        term = (term * B) / static_cast<double>(k);
        sum += term;
        if (term.cwiseAbs().maxCoeff() < 1e-18 * sum.cwiseAbs().maxCoeff()) break;
    }
    for (int i = 0; i < s; ++i) sum = sum * sum;
    return sum;
}

}  // namespace

Eigen::MatrixXd matrix_power(double omega, const ScalingMatrix& H) {
    if (!(omega > 0.0)) throw std::invalid_argument("matrix_power: omega must be positive");
    const Eigen::MatrixXd& M = H.H;
    double lw = std::log(omega);
    double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
    if (asym <= 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff())) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
        Eigen::VectorXd powed = (es.eigenvalues().array() * lw).exp();
        return es.eigenvectors() * powed.asDiagonal() * es.eigenvectors().transpose();
    }
    return exp_series(lw * M);
}

double lambda_exponent(const FieldSpec& spec) {
    return spec.trace_H() / spec.alpha_sum();
}

}  // namespace loctail
