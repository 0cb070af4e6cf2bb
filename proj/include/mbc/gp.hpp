#pragma once

#include <memory>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace mbc::gp {

struct LinearKernel {
  double variance = 1.0;  // m^2 / s^2
  double offset = 0.0;    // s
};

struct RbfKernel {
  double variance = 1.0;     // m^2
  double lengthscale = 1.0;  // s
};

enum class ParamKind { kVariance, kLengthscale };

/// Covariance function over scalar time: linear, squared-exponential, or a
/// sum of two kernels (nesting depth at most 4).
///
///   linear: variance * (t - offset) * (t' - offset)
///   rbf:    variance * exp(-(t - t')^2 / (2 * lengthscale^2))
class KernelSpec {
 public:
  static constexpr int kMaxDepth = 4;

  struct Sum {
    std::shared_ptr<const KernelSpec> left;
    std::shared_ptr<const KernelSpec> right;
  };
  using Node = std::variant<LinearKernel, RbfKernel, Sum>;

  /// Throws ConfigError on non-positive variance or lengthscale.
  static KernelSpec linear(double variance, double offset);
  static KernelSpec rbf(double variance, double lengthscale);
  /// Throws ConfigError if the result would nest deeper than kMaxDepth.
  static KernelSpec sum(const KernelSpec& left, const KernelSpec& right);

  /// Linear + RBF, the default motion kernel.
  static KernelSpec linear_plus_rbf(double linear_variance = 1.0, double rbf_variance = 1.0,
                                    double lengthscale = 1.0, double offset = 0.0);

  const Node& node() const { return node_; }
  int depth() const;

  double operator()(double t, double t2) const;

  /// Free hyperparameters (variances, lengthscales) in log space, depth-first.
  /// Linear offsets are not part of the search space.
  std::vector<double> log_params() const;
  std::vector<ParamKind> param_kinds() const;
  KernelSpec with_log_params(std::span<const double> log_params) const;
  /// Copy with every linear offset replaced by `offset`.
  KernelSpec with_linear_offset(double offset) const;

  friend bool operator==(const KernelSpec& a, const KernelSpec& b);

 private:
  explicit KernelSpec(Node node) : node_(std::move(node)) {}
  KernelSpec with_log_params_impl(std::span<const double> p, std::size_t& pos) const;

  Node node_;
};

/// K + noise_var * I with the Cholesky factor actually used. If the plain
/// matrix is not positive definite, jitter 1e-10, 1e-9, ..., 1e-4 is added to
/// the diagonal until it is; `jitter` records the amount (0 when unused).
struct GramFactor {
  Eigen::MatrixXd matrix;
  Eigen::MatrixXd chol;  // lower triangular
  double jitter = 0.0;
};

/// Throws NumericalError when the matrix stays indefinite at the maximum jitter.
GramFactor gram_factor(const KernelSpec& spec, std::span<const double> ts, double noise_var);

Eigen::MatrixXd gram(const KernelSpec& spec, std::span<const double> ts, double noise_var);

/// Exact GP posterior over a training window.
///
/// Inputs are shifted so the window starts at t = 0; kernel parameters
/// (including linear offsets) are expressed in that shifted frame. The prior
/// mean is the constant mean of the training targets.
class TrainedGp {
 public:
  const KernelSpec& kernel() const { return kernel_; }
  double noise_var() const { return noise_var_; }
  double mean() const { return mean_; }
  double time_shift() const { return shift_; }
  double jitter() const { return jitter_; }
  const std::vector<double>& train_t() const { return train_t_; }
  const std::vector<double>& train_y() const { return train_y_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  const Eigen::MatrixXd& chol() const { return chol_; }

  double predict_mean(double t_star) const;
  /// Clamped at zero; round-off below zero is logged at debug level.
  double predict_var(double t_star) const;
  double log_marginal_likelihood() const;

 private:
  friend TrainedGp fit(std::span<const double>, std::span<const double>, const KernelSpec&, double);
  TrainedGp(KernelSpec kernel) : kernel_(std::move(kernel)) {}

  Eigen::VectorXd cross_cov(double t_star) const;

  KernelSpec kernel_;
  double noise_var_ = 0.0;
  double mean_ = 0.0;
  double shift_ = 0.0;
  double jitter_ = 0.0;
  std::vector<double> train_t_;
  std::vector<double> train_y_;
  Eigen::VectorXd alpha_;
  double data_fit_ = 0.0;
  Eigen::MatrixXd chol_;
};

/// Throws DataError on empty/mismatched/non-increasing inputs and
/// NumericalError on factorization failure.
TrainedGp fit(std::span<const double> ts, std::span<const double> ys, const KernelSpec& spec,
              double noise_var);

struct HyperBounds {
  double variance_min = 1e-4;
  double variance_max = 1e4;
  double lengthscale_min = 0.05;
  double lengthscale_max = 10.0;
};

struct OptimizeResult {
  KernelSpec kernel;
  double lml = 0.0;
  double initial_lml = 0.0;  // template, clamped into bounds
  std::vector<double> history;  // best LML so far, one entry per simplex iteration
};

/// Maximizes the log marginal likelihood over variances and lengthscales with
/// a bounded Nelder-Mead simplex in log space from three fixed starts.
/// Deterministic for given inputs. Throws ConfigError on empty bounds and
/// DataError on fewer than 2 samples.
OptimizeResult optimize_hyperparams(std::span<const double> ts, std::span<const double> ys,
                                    const KernelSpec& templ, const HyperBounds& bounds,
                                    double noise_var);

}  // namespace mbc::gp
