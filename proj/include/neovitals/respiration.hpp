#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neovitals/core.hpp"
#include "neovitals/dsp.hpp"

namespace neovitals {

/// Four per-quadrant depth series (mm) on a shared clock; missing = no valid depth.
struct QuadrantStreams {
  std::array<SampledSeries, 4> depth;

  double rate() const { return depth[0].rate; }
  std::size_t size() const { return depth[0].size(); }
  std::vector<std::string> violations() const;
};

QuadrantStreams quadrant_streams_from(std::span<const FrameSummary> frames, double rate);

/// A series plus per-sample confidence, as written to the vitals CSV.
struct VitalSeries {
  SampledSeries value;
  std::vector<double> confidence;
  std::vector<std::uint8_t> low_confidence;
};

struct BreathRules {
  double min_tv_ml = 2.0;          // smaller breaths leave the spread statistics
  double cap_ml = 7.5;             // larger of cap_ml and cap_factor * median ...
  double cap_factor = 1.5;         // ... also leaves the spread statistics
  double band_sd = 2.0;            // counted breaths lie within band_sd * sd of the median
  double sd_floor_ml = 0.25;
  double min_prominence_ml = 0.2;
  double min_separation_s = 0.4;   // 150 breaths per minute
};

struct LoopRules {
  double max_endpoint_drift_ml = 1.0;
  double min_tv_ml = 2.0;
  double max_sd_from_median = 1.0;
  double max_flow_nrms = 0.35;
  double sd_floor_ml = 0.25;
};

struct RespirationOptions {
  int filter_order = 7;
  double band_lo = 15.0;  // per minute
  double band_hi = 150.0;
  std::size_t rate_components = 5;
  std::size_t volume_components = 2;
  std::optional<std::size_t> ssa_window;  // default_ssa_window when unset
  double valid_min_mm = 0.05;
  double valid_max_mm = 25.0;
  double validity_window_s = 4.0;
  double settle_s = 15.0;  // over-range excursions also invalidate this much on either side (filter ringing)
  double window_s = 60.0;
  double stride_s = 1.0;
  double area_window_s = 60.0;
  GaussianPrior prior{50.0, 15.0};
  AdaptivePriorOptions adaptive;
  bool adaptive_prior = true;
  KalmanParams rate_kalman{default_process_noise(), 20.0, 1.0};
  KalmanParams tv_kalman{default_process_noise(), 2.0, 1.0};
  BreathRules breaths;
  LoopRules loops;
};

struct RespiratorySignal {
  SampledSeries signal;  // mm, chest displacement toward the camera, missing where no quadrant is valid
  std::array<std::vector<std::uint8_t>, 4> valid;
  std::array<SampledSeries, 4> filtered;
};

RespiratorySignal respiratory_signal(const QuadrantStreams& q, const RespirationOptions& opt = {});

struct BreathAmplitude {
  std::size_t peak = 0;
  std::size_t valley = 0;
  double amplitude = 0.0;  // ml
};

std::vector<BreathAmplitude> breath_amplitudes(const SampledSeries& s, const SampledSeries& tv_context,
                                               const BreathRules& rules);

/// Which breaths pass the median/spread rules; statistics come from all of `breaths`.
std::vector<bool> qualifying_breaths(std::span<const BreathAmplitude> breaths, const BreathRules& rules);

/// Breaths per minute from qualifying peaks in sliding windows (no smoothing).
SampledSeries rate_by_peaks(const SampledSeries& s, const SampledSeries& tv_context, const RespirationOptions& opt = {});

struct FourierRate {
  VitalSeries smoothed;
  SampledSeries raw;  // posterior argmax before Kalman smoothing
  std::vector<RateEstimate> estimates;
};

FourierRate rate_by_fourier(const SampledSeries& s, const RespirationOptions& opt = {});

/// Volume change in ml (positive = inhalation). `region` restricts to one quadrant.
SampledSeries volume_signal(const QuadrantStreams& q, const RoiGeometry& roi, const CameraIntrinsics& k,
                            const RespirationOptions& opt = {}, std::optional<int> region = std::nullopt);

struct TidalVolume {
  SampledSeries raw;       // per-window mean amplitude, missing without qualifying breaths
  SampledSeries smoothed;  // after Kalman
};

TidalVolume tidal_volume(const SampledSeries& volume, const RespirationOptions& opt = {});

TidalVolume regional_tidal_volume(const QuadrantStreams& q, int region, const RoiGeometry& roi,
                                  const CameraIntrinsics& k, const RespirationOptions& opt = {});

enum class LoopExclusion { endpoint_drift, low_tidal_volume, tidal_volume_outlier, non_sinusoidal_flow };

std::string_view to_string(LoopExclusion e);

struct LoopPoint {
  double volume = 0.0;  // ml
  double flow = 0.0;    // ml/s
};

struct BreathSegment {
  std::size_t start = 0;
  std::size_t end = 0;
  double tidal_volume = 0.0;
  double endpoint_drift = 0.0;
  double flow_nrms = 0.0;
  std::vector<LoopPoint> loop;
  std::vector<LoopExclusion> exclusions;  // empty = accepted

  bool accepted() const { return exclusions.empty(); }
};

/// Normalised RMS distance between `flow` and its least-squares single-cycle
/// sinusoid (with offset) over the breath.
double sinusoid_fit_nrms(std::span<const double> flow);

/// Valley-to-valley breaths with loop points and exclusion reasons.
std::vector<BreathSegment> flow_volume_loops(const SampledSeries& volume, const RespirationOptions& opt = {});

}  // namespace neovitals
