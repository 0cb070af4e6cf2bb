#include "mbc/serialize.hpp"

#include <spdlog/fmt/fmt.h>

#include "mbc/errors.hpp"

namespace mbc {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Wraps nlohmann's type errors so callers only see DataError.
template <class F>
auto decode(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw DataError(fmt::format("invalid {} JSON: {}", what, e.what()));
  }
}

json vec2(Vec2 v) { return json::array({v.x, v.y}); }

Vec2 vec2_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw DataError("expected a 2-element array");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

json maneuver_json(const synth::Maneuver& m) {
  return std::visit(overloaded{
                        [](const synth::Cruise& c) { return json{{"type", "cruise"}, {"speed", c.speed}}; },
                        [](const synth::LaneChange& c) {
                          return json{{"type", "lane_change"},
                                      {"speed", c.speed},
                                      {"lateral_m", c.lateral_m},
                                      {"duration_s", c.duration_s}};
                        },
                        [](const synth::HardBrake& c) {
                          return json{{"type", "hard_brake"}, {"v0", c.v0}, {"decel", c.decel}};
                        },
                    },
                    m);
}

synth::Maneuver maneuver_from(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "cruise") return synth::Cruise{j.at("speed").get<double>()};
  if (type == "lane_change") {
    return synth::LaneChange{j.at("speed").get<double>(), j.at("lateral_m").get<double>(),
                             j.at("duration_s").get<double>()};
  }
  if (type == "hard_brake") return synth::HardBrake{j.at("v0").get<double>(), j.at("decel").get<double>()};
  throw DataError(fmt::format("unknown maneuver type '{}'", type));
}

}  // namespace

json to_json(const gp::KernelSpec& k) {
  return std::visit(overloaded{
                        [](const gp::LinearKernel& l) {
                          return json{{"type", "linear"}, {"variance", l.variance}, {"offset", l.offset}};
                        },
                        [](const gp::RbfKernel& r) {
                          return json{{"type", "rbf"}, {"variance", r.variance}, {"lengthscale", r.lengthscale}};
                        },
                        [](const gp::KernelSpec::Sum& s) {
                          return json{{"type", "sum"}, {"left", to_json(*s.left)}, {"right", to_json(*s.right)}};
                        },
                    },
                    k.node());
}

gp::KernelSpec kernel_from_json(const json& j) {
  return decode("kernel", [&] {
    const auto type = j.at("type").get<std::string>();
    try {
      if (type == "linear") {
        return gp::KernelSpec::linear(j.at("variance").get<double>(), j.value("offset", 0.0));
      }
      if (type == "rbf") {
        return gp::KernelSpec::rbf(j.at("variance").get<double>(), j.at("lengthscale").get<double>());
      }
      if (type == "sum") return gp::KernelSpec::sum(kernel_from_json(j.at("left")), kernel_from_json(j.at("right")));
    } catch (const ConfigError& e) {
      throw DataError(e.what());
    }
    throw DataError(fmt::format("unknown kernel type '{}'", type));
  });
}

json to_json(const gp::TrainedGp& g) {
  std::vector<double> alpha(g.alpha().data(), g.alpha().data() + g.alpha().size());
  return {{"kernel", to_json(g.kernel())}, {"noise_var", g.noise_var()}, {"mean", g.mean()},
          {"train_t", g.train_t()},        {"train_y", g.train_y()},     {"alpha", alpha}};
}

gp::TrainedGp trained_gp_from_json(const json& j) {
  return decode("trained GP", [&] {
    const auto ts = j.at("train_t").get<std::vector<double>>();
    const auto ys = j.at("train_y").get<std::vector<double>>();
    return gp::fit(ts, ys, kernel_from_json(j.at("kernel")), j.at("noise_var").get<double>());
  });
}

json to_json(const HybridModel& h) {
  return {{"active", to_string(h.active)},
          {"cv", {{"anchor_t", h.cv.anchor_t}, {"anchor_pos", vec2(h.cv.anchor_pos)}, {"velocity", vec2(h.cv.velocity)}}},
          {"gp", {{"window_end_t", h.gp.window_end_t}, {"x", to_json(h.gp.gp_x)}, {"y", to_json(h.gp.gp_y)}}}};
}

HybridModel hybrid_from_json(const json& j) {
  return decode("hybrid model", [&] {
    const auto& cv = j.at("cv");
    const auto& g = j.at("gp");
    return HybridModel{
        CvModel{cv.at("anchor_t").get<double>(), vec2_from(cv.at("anchor_pos")), vec2_from(cv.at("velocity"))},
        GpModel{trained_gp_from_json(g.at("x")), trained_gp_from_json(g.at("y")), g.at("window_end_t").get<double>()},
        sub_model_from_string(j.at("active").get<std::string>())};
  });
}

json payload_json(const ModelMessage& m) {
  return std::visit(overloaded{
                        [](const FullUpdate& f) { return to_json(f.hybrid); },
                        [](const SubModelSwitch& s) { return json{{"active", to_string(s.active)}}; },
                        [](const RawBsm& r) { return json{{"pos", vec2(r.pos)}, {"vel", vec2(r.vel)}}; },
                    },
                    m.kind);
}

json to_json(const synth::ScenarioSpec& s) {
  json j;
  if (const auto* mixed = std::get_if<synth::Mixed>(&s.kind)) {
    j = {{"type", "mixed"}, {"segments", json::array()}};
    for (const auto& seg : mixed->segments) {
      auto e = maneuver_json(seg.maneuver);
      e["segment_s"] = seg.duration_s;
      j["segments"].push_back(std::move(e));
    }
  } else {
    j = std::visit(overloaded{
                       [](const synth::Mixed&) { return json{}; },
                       [](const auto& k) { return maneuver_json(synth::Maneuver{k}); },
                   },
                   s.kind);
  }
  j["rate_hz"] = s.rate_hz;
  j["noise_std_m"] = s.noise_std_m;
  return j;
}

synth::ScenarioSpec scenario_from_json(const json& j) {
  return decode("scenario", [&] {
    synth::ScenarioSpec s;
    if (j.at("type").get<std::string>() == "mixed") {
      synth::Mixed mixed;
      for (const auto& e : j.at("segments")) {
        mixed.segments.push_back({maneuver_from(e), e.at("segment_s").get<double>()});
      }
      s.kind = std::move(mixed);
    } else {
      std::visit([&](const auto& m) { s.kind = m; }, maneuver_from(j));
    }
    s.rate_hz = j.value("rate_hz", 10.0);
    s.noise_std_m = j.value("noise_std_m", 0.0);
    return s;
  });
}

json to_json(const ArmSummary& a) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json ecdf_pte = json::array();
  json ecdf_frac = json::array();
  for (const auto& p : a.ecdf) {
    ecdf_pte.push_back(p.pte);
    ecdf_frac.push_back(p.fraction);
  }
  return {{"threshold_m", a.threshold_m},
          {"rates", {{"full_update_hz", a.rates.full_update_hz}, {"switch_hz", a.rates.switch_hz}, {"total_hz", a.rates.total_hz}}},
          {"messages", {{"transmitted", a.transmitted}, {"delivered", a.delivered}}},
          {"pte", {{"n", a.pte.n}, {"p50", opt(a.pte.p50)}, {"p90", opt(a.pte.p90)}, {"p99", opt(a.pte.p99)}}},
          {"ecdf", {{"pte", std::move(ecdf_pte)}, {"fraction", std::move(ecdf_frac)}}}};
}

}  // namespace mbc
