#include "mbc/models.hpp"

#include <cmath>
#include <vector>

#include <spdlog/fmt/fmt.h>

#include "mbc/errors.hpp"

namespace mbc {

std::string_view to_string(SubModel m) { return m == SubModel::kCv ? "cv" : "gp"; }

SubModel sub_model_from_string(std::string_view s) {
  if (s == "cv") return SubModel::kCv;
  if (s == "gp") return SubModel::kGp;
  throw DataError(fmt::format("unknown sub-model '{}'", s));
}

CvModel fit_cv(std::span<const EnuSample> window) {
  if (window.size() < 2) throw DataError("constant-velocity fit needs at least 2 samples");
  const auto& a = window[window.size() - 2];
  const auto& b = window.back();
  const double dt = b.t - a.t;
  if (!(dt > 0.0)) throw DataError("constant-velocity fit needs increasing timestamps");
  return {b.t, {b.x, b.y}, {(b.x - a.x) / dt, (b.y - a.y) / dt}};
}

GpModel fit_gp(std::span<const EnuSample> window, const GpFitOptions& options) {
  if (window.empty()) throw DataError("GP fit on an empty window");
  std::vector<double> ts, xs, ys;
  ts.reserve(window.size());
  xs.reserve(window.size());
  ys.reserve(window.size());
  double centroid = 0.0;
  for (const auto& s : window) {
    ts.push_back(s.t);
    xs.push_back(s.x);
    ys.push_back(s.y);
    centroid += s.t - window.front().t;
  }
  centroid /= static_cast<double>(window.size());

  const auto templ = options.kernel_template.with_linear_offset(centroid);
  auto fit_axis = [&](const std::vector<double>& values) {
    auto kernel = templ;
    if (options.optimize && window.size() >= 2) {
      kernel = gp::optimize_hyperparams(ts, values, templ, options.bounds, options.noise_var).kernel;
    }
    return gp::fit(ts, values, kernel, options.noise_var);
  };
  return {fit_axis(xs), fit_axis(ys), window.back().t};
}

HybridModel fit_hybrid(std::span<const EnuSample> window, const GpFitOptions& options) {
  return {fit_cv(window), fit_gp(window, options), SubModel::kCv};
}

double pte(Vec2 predicted, Vec2 actual) {
  return std::hypot(predicted.x - actual.x, predicted.y - actual.y);
}

Selection select_sub_model(const HybridModel& hybrid, const EnuSample& actual) {
  Selection s;
  s.pte_cv = pte(hybrid.cv.predict(actual.t), actual.pos());
  s.pte_gp = pte(hybrid.gp.predict(actual.t), actual.pos());
  s.active = s.pte_gp < s.pte_cv ? SubModel::kGp : SubModel::kCv;
  return s;
}

}  // namespace mbc
