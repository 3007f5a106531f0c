#pragma once

#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "neovitals/config.hpp"
#include "neovitals/io.hpp"

namespace neovitals {

/// Raster frame directory -> FrameSummary NDJSON, one frame at a time.
std::size_t extract_directory(const std::filesystem::path& dir, const PipelineConfig& cfg, std::ostream& out);

enum class HrMethod { chrom, pos, combined };

std::string_view to_string(HrMethod m);
HrMethod hr_method_from_string(std::string_view s);

struct VitalsRequest {
  std::set<Vital> vitals{Vital::rr, Vital::tv, Vital::hr, Vital::spo2};
  std::vector<HrMethod> hr_methods{HrMethod::combined};
  std::vector<Spo2Method> spo2_methods{Spo2Method::red_ir};
};

struct NamedVital {
  std::string name;  // file stem, e.g. rr, rr_peaks, tv, hr_combined, spo2_red_ir
  VitalSeries series;
};

std::vector<NamedVital> compute_vitals(const std::vector<FrameSummary>& frames, const PipelineConfig& cfg,
                                       const VitalsRequest& req = {});

/// Volume signal loops; times in the JSON are absolute.
struct LoopsOutput {
  SampledSeries volume;
  std::vector<BreathSegment> breaths;
};
LoopsOutput compute_loops(const std::vector<FrameSummary>& frames, const PipelineConfig& cfg);

/// Per-frame channel mean series (missing where the summary lacks the field).
SampledSeries channel_series(const std::vector<FrameSummary>& frames, double rate, char channel);

struct CalibrationFit {
  OximetryCalibration calibration;
  std::size_t n = 0;
  double rms_residual = 0.0;
};

/// Least-squares fit of reference = a - b * ratio over aligned pairs.
CalibrationFit fit_calibration(const SampledSeries& ratio, const SampledSeries& reference_spo2);

}  // namespace neovitals
