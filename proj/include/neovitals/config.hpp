#pragma once

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "neovitals/cardio.hpp"
#include "neovitals/evaluation.hpp"
#include "neovitals/frame.hpp"
#include "neovitals/oximetry.hpp"
#include "neovitals/respiration.hpp"
#include "neovitals/synth.hpp"

namespace neovitals {

/// Every tunable of the pipeline. Serialized as a JSON object tree; unknown keys are rejected.
struct PipelineConfig {
  double frame_rate = 30.0;
  std::optional<RoiGeometry> roi;  // whole frame when unset
  CameraIntrinsics intrinsics{600.0, 600.0, 320.0, 240.0};
  ExtractOptions extract;
  RespirationOptions respiration;
  CardioOptions cardio;
  OximetryOptions oximetry;
  std::map<Vital, std::vector<CpThreshold>> coverage{
      {Vital::rr, default_cp_thresholds(Vital::rr)},
      {Vital::tv, default_cp_thresholds(Vital::tv)},
      {Vital::hr, default_cp_thresholds(Vital::hr)},
      {Vital::spo2, default_cp_thresholds(Vital::spo2)}};

  std::vector<std::string> violations() const;
};

nlohmann::json to_json(const PipelineConfig& c);
/// Missing keys keep their defaults. Throws ContractError on unknown keys or wrong types.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SynthScenario& s);
SynthScenario scenario_from_json(const nlohmann::json& j);

PipelineConfig load_pipeline_config(const std::string& path);
SynthScenario load_scenario(const std::string& path);

}  // namespace neovitals
