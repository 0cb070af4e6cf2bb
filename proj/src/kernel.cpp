#include <cmath>

#include <spdlog/fmt/fmt.h>

#include "mbc/errors.hpp"
#include "mbc/gp.hpp"

namespace mbc::gp {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(fmt::format("kernel {} must be positive and finite, got {}", what, v));
  }
}

}  // namespace

KernelSpec KernelSpec::linear(double variance, double offset) {
  require_positive(variance, "variance");
  if (!std::isfinite(offset)) throw ConfigError("kernel offset must be finite");
  return KernelSpec(LinearKernel{variance, offset});
}

KernelSpec KernelSpec::rbf(double variance, double lengthscale) {
  require_positive(variance, "variance");
  require_positive(lengthscale, "lengthscale");
  return KernelSpec(RbfKernel{variance, lengthscale});
}

KernelSpec KernelSpec::sum(const KernelSpec& left, const KernelSpec& right) {
  KernelSpec out(Sum{std::make_shared<const KernelSpec>(left), std::make_shared<const KernelSpec>(right)});
  if (out.depth() > kMaxDepth) {
    throw ConfigError(fmt::format("kernel sum nesting depth {} exceeds {}", out.depth(), kMaxDepth));
  }
  return out;
}

KernelSpec KernelSpec::linear_plus_rbf(double linear_variance, double rbf_variance,
                                       double lengthscale, double offset) {
  return sum(linear(linear_variance, offset), rbf(rbf_variance, lengthscale));
}

int KernelSpec::depth() const {
  if (const auto* s = std::get_if<Sum>(&node_)) {
    return 1 + std::max(s->left->depth(), s->right->depth());
  }
  return 0;
}

double KernelSpec::operator()(double t, double t2) const {
  return std::visit(
      overloaded{
          [&](const LinearKernel& k) { return k.variance * (t - k.offset) * (t2 - k.offset); },
          [&](const RbfKernel& k) {
            const double d = (t - t2) / k.lengthscale;
            return k.variance * std::exp(-0.5 * d * d);
          },
          [&](const Sum& s) { return (*s.left)(t, t2) + (*s.right)(t, t2); },
      },
      node_);
}

std::vector<double> KernelSpec::log_params() const {
  return std::visit(overloaded{
                        [](const LinearKernel& k) { return std::vector<double>{std::log(k.variance)}; },
                        [](const RbfKernel& k) {
                          return std::vector<double>{std::log(k.variance), std::log(k.lengthscale)};
                        },
                        [](const Sum& s) {
                          auto out = s.left->log_params();
                          const auto r = s.right->log_params();
                          out.insert(out.end(), r.begin(), r.end());
                          return out;
                        },
                    },
                    node_);
}

std::vector<ParamKind> KernelSpec::param_kinds() const {
  return std::visit(overloaded{
                        [](const LinearKernel&) { return std::vector{ParamKind::kVariance}; },
                        [](const RbfKernel&) {
                          return std::vector{ParamKind::kVariance, ParamKind::kLengthscale};
                        },
                        [](const Sum& s) {
                          auto out = s.left->param_kinds();
                          const auto r = s.right->param_kinds();
                          out.insert(out.end(), r.begin(), r.end());
                          return out;
                        },
                    },
                    node_);
}

KernelSpec KernelSpec::with_log_params(std::span<const double> p) const {
  std::size_t pos = 0;
  auto out = with_log_params_impl(p, pos);
  if (pos != p.size()) {
    throw ConfigError(fmt::format("expected {} kernel parameters, got {}", pos, p.size()));
  }
  return out;
}

KernelSpec KernelSpec::with_log_params_impl(std::span<const double> p, std::size_t& pos) const {
  auto take = [&] {
    if (pos >= p.size()) throw ConfigError("too few kernel parameters");
    return std::exp(p[pos++]);
  };
  return std::visit(overloaded{
                        [&](const LinearKernel& k) { return linear(take(), k.offset); },
                        [&](const RbfKernel&) {
                          const double v = take();
                          return rbf(v, take());
                        },
                        [&](const Sum& s) {
                          auto l = s.left->with_log_params_impl(p, pos);
                          return sum(l, s.right->with_log_params_impl(p, pos));
                        },
                    },
                    node_);
}

KernelSpec KernelSpec::with_linear_offset(double offset) const {
  return std::visit(overloaded{
                        [&](const LinearKernel& k) { return linear(k.variance, offset); },
                        [&](const RbfKernel&) { return *this; },
                        [&](const Sum& s) {
                          return sum(s.left->with_linear_offset(offset),
                                     s.right->with_linear_offset(offset));
                        },
                    },
                    node_);
}

bool operator==(const KernelSpec& a, const KernelSpec& b) {
  return std::visit(overloaded{
                        [](const LinearKernel& x, const LinearKernel& y) {
                          return x.variance == y.variance && x.offset == y.offset;
                        },
                        [](const RbfKernel& x, const RbfKernel& y) {
                          return x.variance == y.variance && x.lengthscale == y.lengthscale;
                        },
                        [](const KernelSpec::Sum& x, const KernelSpec::Sum& y) {
                          return *x.left == *y.left && *x.right == *y.right;
                        },
                        [](const auto&, const auto&) { return false; },
                    },
                    a.node_, b.node_);
}

}  // namespace mbc::gp
