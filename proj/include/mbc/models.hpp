#pragma once

#include <span>
#include <string_view>

#include "mbc/geo.hpp"
#include "mbc/gp.hpp"

namespace mbc {

enum class SubModel { kCv, kGp };

std::string_view to_string(SubModel m);
/// Accepts "cv" / "gp"; throws DataError otherwise.
SubModel sub_model_from_string(std::string_view s);

/// Constant-velocity coasting from an anchor fix.
struct CvModel {
  double anchor_t = 0.0;
  Vec2 anchor_pos;
  Vec2 velocity;  // m/s

  Vec2 predict(double t_star) const {
    const double dt = t_star - anchor_t;
    return {anchor_pos.x + velocity.x * dt, anchor_pos.y + velocity.y * dt};
  }
};

/// Independent East and North GPs trained on the same window.
struct GpModel {
  gp::TrainedGp gp_x;
  gp::TrainedGp gp_y;
  double window_end_t = 0.0;

  Vec2 predict(double t_star) const { return {gp_x.predict_mean(t_star), gp_y.predict_mean(t_star)}; }
};

/// Both sub-models plus the one the receiver should use.
struct HybridModel {
  CvModel cv;
  GpModel gp;
  SubModel active = SubModel::kCv;

  Vec2 predict(double t_star, SubModel which) const {
    return which == SubModel::kCv ? cv.predict(t_star) : gp.predict(t_star);
  }
  Vec2 predict(double t_star) const { return predict(t_star, active); }
};

struct GpFitOptions {
  gp::KernelSpec kernel_template = gp::KernelSpec::linear_plus_rbf();
  double noise_var = 1e-6;  // m^2
  gp::HyperBounds bounds;
  bool optimize = true;  // false freezes the template hyperparameters
};

/// Anchor at the last sample, velocity from the last two. Throws DataError on
/// fewer than 2 samples.
CvModel fit_cv(std::span<const EnuSample> window);

/// Fits one GP per axis. The linear kernel offset is pinned to the centroid of
/// the window timestamps (in the GP's shifted time frame) before any search.
GpModel fit_gp(std::span<const EnuSample> window, const GpFitOptions& options);

/// `active` is left at CV; the scheduler chooses it.
HybridModel fit_hybrid(std::span<const EnuSample> window, const GpFitOptions& options);

/// 2D Euclidean position tracking error.
double pte(Vec2 predicted, Vec2 actual);

struct Selection {
  SubModel active = SubModel::kCv;
  double pte_cv = 0.0;
  double pte_gp = 0.0;

  double pte_min() const { return active == SubModel::kCv ? pte_cv : pte_gp; }
};

/// Argmin of the two sub-model errors at `actual.t`; ties go to CV.
Selection select_sub_model(const HybridModel& hybrid, const EnuSample& actual);

}  // namespace mbc
