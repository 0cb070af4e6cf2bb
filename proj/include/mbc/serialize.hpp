#pragma once

#include <json.hpp>

#include "mbc/gp.hpp"
#include "mbc/models.hpp"
#include "mbc/scheduler.hpp"
#include "mbc/synth.hpp"
#include "mbc/tracker.hpp"

// Canonical JSON encodings used in message logs, configs and reports.
// Decoders throw DataError on malformed input.
namespace mbc {

nlohmann::json to_json(const gp::KernelSpec& k);
gp::KernelSpec kernel_from_json(const nlohmann::json& j);

/// The transmittable GP: kernel, noise, window and solved weights. Decoding
/// re-solves from the window, so `alpha` is informational.
nlohmann::json to_json(const gp::TrainedGp& g);
gp::TrainedGp trained_gp_from_json(const nlohmann::json& j);

nlohmann::json to_json(const HybridModel& h);
HybridModel hybrid_from_json(const nlohmann::json& j);

/// Message payload only (kind-specific fields).
nlohmann::json payload_json(const ModelMessage& m);

nlohmann::json to_json(const synth::ScenarioSpec& s);
synth::ScenarioSpec scenario_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ArmSummary& a);

}  // namespace mbc
