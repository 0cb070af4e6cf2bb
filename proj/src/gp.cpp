#include "mbc/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include <Eigen/Cholesky>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <spdlog/spdlog.h>

#include "mbc/errors.hpp"

namespace mbc::gp {
namespace {

constexpr double kFirstJitter = 1e-10;
constexpr double kMaxJitter = 1e-4;

void check_window(std::span<const double> ts, std::span<const double> ys) {
  if (ts.empty()) throw DataError("GP training window is empty");
  if (ts.size() != ys.size()) {
    throw DataError(fmt::format("GP window size mismatch: {} times, {} targets", ts.size(), ys.size()));
  }
  for (std::size_t i = 1; i < ts.size(); ++i) {
    if (!(ts[i] > ts[i - 1])) throw DataError("GP training times must be strictly increasing");
  }
}

}  // namespace

GramFactor gram_factor(const KernelSpec& spec, std::span<const double> ts, double noise_var) {
  if (ts.empty()) throw DataError("gram of an empty input set");
  const auto m = static_cast<Eigen::Index>(ts.size());
  GramFactor out;
  out.matrix.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double k = spec(ts[i], ts[j]);
      out.matrix(i, j) = k;
      out.matrix(j, i) = k;
    }
    out.matrix(i, i) += noise_var;
  }

  double jitter = 0.0;
  while (true) {
    Eigen::MatrixXd a = out.matrix;
    a.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      if (jitter > 0.0) {
        spdlog::debug("gram: added jitter {:g} to a {}x{} matrix", jitter, m, m);
        out.matrix = std::move(a);
      }
      out.chol = llt.matrixL();
      out.jitter = jitter;
      return out;
    }
    jitter = jitter == 0.0 ? kFirstJitter : jitter * 10.0;
    if (jitter > kMaxJitter * 1.0000001) {
      throw NumericalError(fmt::format("Cholesky failed on a {}x{} gram matrix after jitter {:g}", m,
                                       m, kMaxJitter));
    }
  }
}

Eigen::MatrixXd gram(const KernelSpec& spec, std::span<const double> ts, double noise_var) {
  return gram_factor(spec, ts, noise_var).matrix;
}

TrainedGp fit(std::span<const double> ts, std::span<const double> ys, const KernelSpec& spec,
              double noise_var) {
  check_window(ts, ys);
  if (!(noise_var >= 0.0)) throw ConfigError("noise variance must be non-negative");

  TrainedGp gp(spec);
  gp.noise_var_ = noise_var;
  gp.shift_ = ts.front();
  gp.train_t_.assign(ts.begin(), ts.end());
  gp.train_y_.assign(ys.begin(), ys.end());

  std::vector<double> shifted(ts.size());
  std::transform(ts.begin(), ts.end(), shifted.begin(), [&](double t) { return t - gp.shift_; });
  auto factor = gram_factor(spec, shifted, noise_var);
  gp.jitter_ = factor.jitter;
  gp.chol_ = std::move(factor.chol);

  const auto m = static_cast<Eigen::Index>(ys.size());
  double sum = 0.0;
  for (double y : ys) sum += y;
  gp.mean_ = sum / static_cast<double>(m);
  Eigen::VectorXd centered(m);
  for (Eigen::Index i = 0; i < m; ++i) centered(i) = ys[i] - gp.mean_;

  const Eigen::VectorXd z = gp.chol_.triangularView<Eigen::Lower>().solve(centered);
  gp.alpha_ = gp.chol_.triangularView<Eigen::Lower>().adjoint().solve(z);
  // y' K^-1 y as |L^-1 y|^2: one triangular solve, no cancellation.
  gp.data_fit_ = z.squaredNorm();
  return gp;
}

Eigen::VectorXd TrainedGp::cross_cov(double t_star) const {
  const auto m = static_cast<Eigen::Index>(train_t_.size());
  Eigen::VectorXd k(m);
  const double s = t_star - shift_;
  for (Eigen::Index i = 0; i < m; ++i) k(i) = kernel_(train_t_[i] - shift_, s);
  return k;
}

double TrainedGp::predict_mean(double t_star) const {
  return mean_ + cross_cov(t_star).dot(alpha_);
}

double TrainedGp::predict_var(double t_star) const {
  const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(cross_cov(t_star));
  const double s = t_star - shift_;
  const double var = kernel_(s, s) - v.squaredNorm();
  if (var < 0.0) {
    spdlog::debug("predict_var: clamped {:g} to 0 at t={}", var, t_star);
    return 0.0;
  }
  return var;
}

double TrainedGp::log_marginal_likelihood() const {
  const auto m = static_cast<double>(train_y_.size());
  const double log_det_half = chol_.diagonal().array().log().sum();
  return -0.5 * data_fit_ - log_det_half - 0.5 * m * std::log(2.0 * std::numbers::pi);
}

namespace {

// Maps unconstrained simplex coordinates onto the bounded log-parameter box.
struct BoxMap {
  std::vector<double> lo, hi;
  std::vector<std::size_t> free;  // indices with lo < hi

  double to_log(std::size_t i, double z) const {
    return lo[i] + (hi[i] - lo[i]) / (1.0 + std::exp(-z));
  }
  double to_z(std::size_t i, double log_value) const {
    double frac = (log_value - lo[i]) / (hi[i] - lo[i]);
    frac = std::clamp(frac, 1e-6, 1.0 - 1e-6);
    return std::log(frac / (1.0 - frac));
  }
  std::vector<double> clamp(std::vector<double> p) const {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::clamp(p[i], lo[i], hi[i]);
    return p;
  }
};

struct Objective {
  std::span<const double> ts;
  std::span<const double> ys;
  const KernelSpec* templ;
  double noise_var;
  const BoxMap* box;
  std::vector<double> base;  // log params, fixed entries already set

  std::vector<double> params_from(const gsl_vector* z) const {
    auto p = base;
    for (std::size_t k = 0; k < box->free.size(); ++k) {
      const auto i = box->free[k];
      p[i] = box->to_log(i, gsl_vector_get(z, k));
    }
    return p;
  }

  double lml(const std::vector<double>& log_params) const {
    try {
      return fit(ts, ys, templ->with_log_params(log_params), noise_var).log_marginal_likelihood();
    } catch (const NumericalError&) {
      return -std::numeric_limits<double>::infinity();
    }
  }
};

struct GslVectorFree {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct GslMinimizerFree {
  void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};
using GslVector = std::unique_ptr<gsl_vector, GslVectorFree>;
using GslMinimizer = std::unique_ptr<gsl_multimin_fminimizer, GslMinimizerFree>;

double negative_lml(const gsl_vector* z, void* params) {
  const auto* obj = static_cast<const Objective*>(params);
  const double v = obj->lml(obj->params_from(z));
  return std::isfinite(v) ? -v : 1e300;
}

}  // namespace

OptimizeResult optimize_hyperparams(std::span<const double> ts, std::span<const double> ys,
                                    const KernelSpec& templ, const HyperBounds& bounds,
                                    double noise_var) {
  if (!(bounds.variance_min > 0.0) || !(bounds.lengthscale_min > 0.0) ||
      bounds.variance_min > bounds.variance_max || bounds.lengthscale_min > bounds.lengthscale_max) {
    throw ConfigError("empty or non-positive hyperparameter bounds");
  }
  if (ts.size() < 2) throw DataError("hyperparameter search needs at least 2 samples");
  check_window(ts, ys);

  const auto kinds = templ.param_kinds();
  BoxMap box;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    const bool var = kinds[i] == ParamKind::kVariance;
    box.lo.push_back(std::log(var ? bounds.variance_min : bounds.lengthscale_min));
    box.hi.push_back(std::log(var ? bounds.variance_max : bounds.lengthscale_max));
    if (box.hi[i] > box.lo[i]) box.free.push_back(i);
  }

  const auto start0 = box.clamp(templ.log_params());
  Objective obj{ts, ys, &templ, noise_var, &box, start0};

  OptimizeResult result{templ.with_log_params(start0), 0.0, 0.0, {}};
  result.initial_lml = obj.lml(start0);
  result.lml = result.initial_lml;
  auto best_params = start0;

  if (!box.free.empty()) {
    // Fixed starting points: the template, then all variances x100 with
    // lengthscales x3, then the reverse.
    std::vector<std::vector<double>> starts{start0};
    for (const double sign : {1.0, -1.0}) {
      auto p = start0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] += sign * (kinds[i] == ParamKind::kVariance ? std::log(100.0) : std::log(3.0));
      }
      starts.push_back(box.clamp(p));
    }

    static const auto silence_gsl = gsl_set_error_handler_off();
    (void)silence_gsl;

    const std::size_t n = box.free.size();
    gsl_multimin_function fn{&negative_lml, n, &obj};
    const GslVector z_owner(gsl_vector_alloc(n));
    const GslVector step_owner(gsl_vector_alloc(n));
    const GslMinimizer s_owner(gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n));
    gsl_vector* z = z_owner.get();
    gsl_multimin_fminimizer* s = s_owner.get();
    gsl_vector_set_all(step_owner.get(), 1.0);

    for (const auto& start : starts) {
      for (std::size_t k = 0; k < n; ++k) {
        gsl_vector_set(z, k, box.to_z(box.free[k], start[box.free[k]]));
      }
      gsl_multimin_fminimizer_set(s, &fn, z, step_owner.get());
      for (int iter = 0; iter < 200; ++iter) {
        if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
        const double lml = -gsl_multimin_fminimizer_minimum(s);
        if (lml > result.lml) {
          result.lml = lml;
          best_params = obj.params_from(gsl_multimin_fminimizer_x(s));
        }
        result.history.push_back(result.lml);
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-6) == GSL_SUCCESS) break;
      }
    }
  }

  result.kernel = templ.with_log_params(best_params);
  return result;
}

}  // namespace mbc::gp
