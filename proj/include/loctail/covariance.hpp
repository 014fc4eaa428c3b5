#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "loctail/field_model.hpp"

namespace loctail {

// Pair-covariance model of a centered Gaussian (N,d)-field.  Scalar models
// with stationary increments derive E[X_s X_t] = (s2(s)+s2(t)-s2(s-t))/2 from
// their increment variance s2.
class CovModel {
  public:
    virtual ~CovModel() = default;

    virtual int param_dim() const = 0;  // N
    virtual int value_dim() const = 0;  // d

    // d x d block E[X_s X_t^T]
    virtual Eigen::MatrixXd cross_cov(const Eigen::VectorXd& s,
                                      const Eigen::VectorXd& t) const = 0;

    // declared self-similarity data (used by FieldSpec validation)
    virtual ScalingVector alpha() const = 0;
    virtual Eigen::MatrixXd scaling_matrix() const = 0;
    virtual bool self_similar() const { return true; }
    virtual std::string name() const = 0;
    virtual std::string describe() const = 0;  // stable parameter string
};

// E[(X_s - X_t)^2] = |s-t|^{2h}, X_0 = 0; (N,1)-field, alpha = (1,..,1), H = [h]
class MultiFbm : public CovModel {
  public:
    MultiFbm(int N, double hurst);
    int param_dim() const override { return N_; }
    int value_dim() const override { return 1; }
    Eigen::MatrixXd cross_cov(const Eigen::VectorXd& s,
                              const Eigen::VectorXd& t) const override;
    ScalingVector alpha() const override;
    Eigen::MatrixXd scaling_matrix() const override;
    std::string name() const override { return "multi_fbm"; }
    std::string describe() const override;
    double hurst() const { return h_; }
    double sigma2(const Eigen::VectorXd& t) const;

  private:
    int N_;
    double h_;
};

// E[(X_s - X_t)^2] = (sum_i c_i |s_i-t_i|^{p_i})^{2h}; alpha_i = 1/p_i, H = [h]
class AnisoFbm : public CovModel {
  public:
    AnisoFbm(std::vector<double> c, std::vector<double> p, double hurst);
    int param_dim() const override { return static_cast<int>(c_.size()); }
    int value_dim() const override { return 1; }
    Eigen::MatrixXd cross_cov(const Eigen::VectorXd& s,
                              const Eigen::VectorXd& t) const override;
    ScalingVector alpha() const override;
    Eigen::MatrixXd scaling_matrix() const override;
    std::string name() const override { return "aniso_fbm"; }
    std::string describe() const override;
    double hurst() const { return h_; }
    const std::vector<double>& c() const { return c_; }
    const std::vector<double>& p() const { return p_; }
    double sigma2(const Eigen::VectorXd& t) const;

  private:
    std::vector<double> c_, p_;
    double h_;
};

// d independent scalar components sharing the parameter space
class IndependentComponents : public CovModel {
  public:
    explicit IndependentComponents(std::vector<std::shared_ptr<const CovModel>> comps);
    int param_dim() const override;
    int value_dim() const override { return static_cast<int>(comps_.size()); }
    Eigen::MatrixXd cross_cov(const Eigen::VectorXd& s,
                              const Eigen::VectorXd& t) const override;
    ScalingVector alpha() const override;
    Eigen::MatrixXd scaling_matrix() const override;
    std::string name() const override { return "independent"; }
    std::string describe() const override;
    const std::vector<std::shared_ptr<const CovModel>>& components() const { return comps_; }

  private:
    std::vector<std::shared_ptr<const CovModel>> comps_;
};

// user-supplied pair covariance; skips self-similarity validation
class ExplicitKernel : public CovModel {
  public:
    using Kernel = std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;
    ExplicitKernel(int N, int d, Kernel k, ScalingVector alpha, Eigen::MatrixXd H);
    int param_dim() const override { return N_; }
    int value_dim() const override { return d_; }
    Eigen::MatrixXd cross_cov(const Eigen::VectorXd& s,
                              const Eigen::VectorXd& t) const override;
    ScalingVector alpha() const override { return alpha_; }
    Eigen::MatrixXd scaling_matrix() const override { return H_; }
    bool self_similar() const override { return false; }
    std::string name() const override { return "explicit"; }
    std::string describe() const override { return "explicit kernel"; }

  private:
    int N_;
    int d_;
    Kernel kernel_;
    ScalingVector alpha_;
    Eigen::MatrixXd H_;
};

// Difference field (X_1-X_2, ..., X_{m-1}-X_m) of m independent fields with a
// common value dimension.  Parameter space is the product of the components';
// cross-covariance blocks are tridiagonal in the difference index.
class IntersectionModel : public CovModel {
  public:
    explicit IntersectionModel(std::vector<std::shared_ptr<const CovModel>> parts);
    int param_dim() const override;
    int value_dim() const override;
    Eigen::MatrixXd cross_cov(const Eigen::VectorXd& s,
                              const Eigen::VectorXd& t) const override;
    ScalingVector alpha() const override;
    Eigen::MatrixXd scaling_matrix() const override;
    std::string name() const override { return "intersection"; }
    std::string describe() const override;
    const std::vector<std::shared_ptr<const CovModel>>& parts() const { return parts_; }

  private:
    std::vector<std::shared_ptr<const CovModel>> parts_;
    std::vector<int> offsets_;  // parameter offsets per part
    int sub_d_;
};

// Symmetric covariance of n stacked field values with a cached lower factor.
// A factorization pivot below 1e-300 (or a negative one) marks the matrix
// degenerate: ok=false, no fabricated values.
struct CovMatrix {
    Eigen::MatrixXd cov;
    Eigen::MatrixXd chol;
    double logdet = std::numeric_limits<double>::quiet_NaN();
    bool ok = false;
    int n_points = 0;
    int d = 1;
};

inline constexpr int kDefaultFactorCap = 4096;

CovMatrix cov_matrix(const FieldSpec& spec, const std::vector<Eigen::VectorXd>& points,
                     int cap = kDefaultFactorCap);

// In-place lower Cholesky with explicit pivot control; returns false (and
// leaves *logdet untouched) on a pivot < 1e-300.  Workhorse for the kernel MC.
bool cholesky_logdet(Eigen::MatrixXd& a, double* logdet);

// max relative gap between E[X_{s.w^a} X_{t.w^a}^T] and w^H E[X_s X_t^T] w^H'
double self_similarity_residual(const FieldSpec& spec, double omega,
                                const std::vector<Eigen::VectorXd>& sample);

// det of Cov(X_u) - Cross Inv(Cov(cond)) Cross^T via Schur complement on the
// factored conditioner block; nullopt when the conditioner covariance is
// numerically singular
std::optional<double> conditional_detcov(const FieldSpec& spec, const Eigen::VectorXd& u,
                                         const std::vector<Eigen::VectorXd>& conditioners);

struct ChainReport {
    double logdet_joint = 0.0;
    double sum_log_conditionals = 0.0;
    double rel_error = 0.0;
    bool degenerate = false;
};

// joint logdet vs the telescoped product of conditional determinants,
// the two sides computed by independent factorizations
ChainReport detcov_chain_check(const FieldSpec& spec,
                               const std::vector<Eigen::VectorXd>& points);

struct ReductionReport {
    double margin_pivot = 0.0;    // log[detcov(Y_k) detcov(diffs)] - log detcov(all)
    double margin_product = 0.0;  // sum_i log detcov(Y_i) - log detcov(all)
    bool ok = false;
    bool degenerate = false;
};

// blocks: n groups of points; block i represents the Gaussian vector of field
// values on its points.  pivot is the block index k.
ReductionReport reduction_inequality_check(const FieldSpec& spec,
                                           const std::vector<std::vector<Eigen::VectorXd>>& blocks,
                                           int pivot);

struct SlndProbe {
    double min_ratio = std::numeric_limits<double>::infinity();
    Eigen::VectorXd argmin_u;
    std::vector<Eigen::VectorXd> argmin_conditioners;
    long trials = 0;
    long rejected = 0;
};

// min over random configurations of conditional_detcov / min_i ||u-t_i||_a^{2H}
// with t_0 = 0; degenerate draws are rejected and counted
SlndProbe slnd_probe(const FieldSpec& spec, const SLNDSpec& slnd, long trials,
                     int n_max, std::uint64_t seed);

}  // namespace loctail
