#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

namespace loctail {

class CovModel;

// Per-axis scaling exponents alpha_1..alpha_N of the diagonal self-similarity.
// Entries are confined to [1e-3, 1e3] so |t|^{1/alpha} stays well conditioned.
struct ScalingVector {
    std::vector<double> alpha;

    ScalingVector() = default;
    explicit ScalingVector(std::vector<double> a);

    int size() const { return static_cast<int>(alpha.size()); }
    double operator[](int i) const { return alpha[static_cast<std::size_t>(i)]; }
    double sum() const;
    double min() const;

    // true when all pairwise ratios alpha_i/alpha_j are rational with
    // denominator <= 1e6 at relative error 1e-12 (continued fractions)
    bool mutually_rational() const;
};

// Value-space scaling matrix H with tr(H) > 0.
struct ScalingMatrix {
    Eigen::MatrixXd H;

    ScalingMatrix() = default;
    explicit ScalingMatrix(Eigen::MatrixXd h);

    int dim() const { return static_cast<int>(H.rows()); }
    double trace() const { return H.trace(); }
};

// Strong-local-nondeterminism data: detcov[X_u | X_t1..X_tn] is bounded below
// by C * min_i ||u - t_i||_alpha^{2 H_slnd}.  For a diagonally self-similar
// field, xi = alpha / tr(H).
struct SLNDSpec {
    Eigen::VectorXd xi;
    double H_slnd = 0.0;
    double C_slnd = 0.0;

    double xi_sum() const { return xi.sum(); }
};

struct SpecLimits {
    int max_N = 4;  // desk-scale caps; artifact limits, not model semantics
    int max_d = 4;
};

// Complete description of a centered Gaussian (N,d)-field: dimensions, the
// (alpha, H) self-similarity data, a covariance model and a variance bound.
class FieldSpec {
  public:
    FieldSpec(int N, int d, ScalingVector alpha, ScalingMatrix H,
              std::shared_ptr<const CovModel> model, double c0 = 1.0,
              SpecLimits limits = {});

    int N() const { return N_; }
    int d() const { return d_; }
    const ScalingVector& alpha() const { return alpha_; }
    const ScalingMatrix& H() const { return H_; }
    const CovModel& model() const { return *model_; }
    std::shared_ptr<const CovModel> model_ptr() const { return model_; }
    double c0() const { return c0_; }

    double trace_H() const { return H_.trace(); }
    double alpha_sum() const { return alpha_.sum(); }

    // K^beta integrable over the sampling cube requires sum(alpha) > beta*tr(H)
    bool integrable(double beta = 1.0) const { return alpha_sum() > beta * trace_H(); }
    // growth/tail experiments additionally need lambda in (0,1)
    bool theorem_ready(std::string* reason = nullptr) const;

    SLNDSpec slnd(double C = 0.0) const;

    std::string fingerprint() const;  // stable id; implemented with the serializer

  private:
    int N_;
    int d_;
    ScalingVector alpha_;
    ScalingMatrix H_;
    std::shared_ptr<const CovModel> model_;
    double c0_;
};

// ||t||_alpha = sum_i |t_i|^{1/alpha_i}; a metric when all alpha_i >= 1
double alpha_norm(const Eigen::VectorXd& t, const ScalingVector& alpha);
double alpha_dist(const Eigen::VectorXd& s, const Eigen::VectorXd& t,
                  const ScalingVector& alpha);

// component-wise t_i * omega^{alpha_i}
Eigen::VectorXd schur_scale(const Eigen::VectorXd& t, double omega,
                            const ScalingVector& alpha);

// omega^H = exp(ln(omega) * H); eigendecomposition for symmetric H,
// scaling-and-squaring series otherwise
Eigen::MatrixXd matrix_power(double omega, const ScalingMatrix& H);

// lambda = tr(H) / sum(alpha): moment growth n^lambda, tails exp(-c x^{1/lambda})
double lambda_exponent(const FieldSpec& spec);

}  // namespace loctail
