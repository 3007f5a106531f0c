#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "neovitals/core.hpp"
#include "neovitals/frame.hpp"
#include "neovitals/oximetry.hpp"

namespace neovitals {

/// Piecewise-linear schedule through (time s, value) knots, constant outside them.
struct Schedule {
  std::vector<std::pair<double, double>> knots;

  static Schedule constant(double v) { return Schedule{{{0.0, v}}}; }
  double at(double t) const;
  double min() const;
  double max() const;
};

enum class ArtifactKind { occlusion, motion_step, illumination_flicker };

std::string_view to_string(ArtifactKind k);
ArtifactKind artifact_kind_from_string(std::string_view s);

struct Artifact {
  ArtifactKind kind = ArtifactKind::occlusion;
  double time = 0.0;      // s
  double duration = 0.0;  // s; 0 runs to the end of the recording
  int quadrant = -1;      // -1 = whole ROI
  double magnitude = 0.0; // motion-step offset in mm, flicker depth epsilon
  double frequency = 1.0; // flicker frequency in Hz
};

struct SynthScenario {
  double duration_s = 300.0;
  double frame_rate = 30.0;
  bool adversarial = false;  // allows vitals outside the estimator passbands

  // Geometry. Inhalation moves the chest toward the camera.
  RoiGeometry roi{260, 190, 380, 290};
  CameraIntrinsics intrinsics{600.0, 600.0, 320.0, 240.0};
  int frame_width = 640, frame_height = 480;
  double chest_depth_mm = 400.0;
  double background_depth_mm = 700.0;

  Schedule breathing_rate = Schedule::constant(50.0);  // per minute
  Schedule tidal_volume = Schedule::constant(4.0);     // ml
  double inhale_fraction = 0.4;                        // I:E 1:1.5
  std::array<double, 4> quadrant_weights{1.0, 1.0, 1.0, 1.0};

  Schedule heart_rate = Schedule::constant(150.0);  // bpm
  std::array<double, 3> dc_rgb{200.0, 150.0, 120.0};
  double dc_ir = 120.0;
  std::array<double, 3> pulse_fraction_rgb{0.0027, 0.008, 0.0054};  // AC amplitude / DC
  double pulse_fraction_ir = 0.004;

  Schedule spo2 = Schedule::constant(97.0);  // percent
  Spo2Method spo2_method = Spo2Method::red_ir;
  OximetryOptions oximetry;  // calibrations, colour transform and extinction table used for inversion

  std::array<double, 3> noise_rgb{0.0, 0.0, 0.0};  // Gaussian sigma, channel units
  double noise_ir = 0.0;
  double noise_depth_mm = 0.0;
  double noise_depth_fraction = 0.0;  // additional sigma as a fraction of peak-to-peak displacement
  std::optional<double> pulse_snr_db;  // overrides noise_rgb/noise_ir from the pulsatile power when set

  std::vector<Artifact> artifacts;

  std::vector<std::string> violations() const;

  /// Projected ROI area (mm^2) at the chest depth.
  double roi_area_mm2(std::optional<int> quadrant = std::nullopt) const;
};

struct SynthLabels {
  SampledSeries rr;    // breaths per minute
  SampledSeries tv;    // ml
  SampledSeries hr;    // bpm
  SampledSeries spo2;  // percent
  SampledSeries ratio; // programmed ratio of ratios for the named SpO2 method
  std::array<SampledSeries, 4> regional_tv;
};

struct SynthOutput {
  std::vector<FrameSummary> frames;
  SynthLabels labels;
};

/// Ratio of ratios that the named calibration (or Beer-Lambert table) maps to `spo2`.
double programmed_ratio(double spo2, Spo2Method method, const OximetryOptions& opt);

/// Red pulsatile fraction (or all-channel scale for YCgCr) realising `ratio`.
std::array<double, 3> pulse_fractions_for_ratio(double ratio, const SynthScenario& sc);

/// Breath waveform in [0, 1] over one cycle phase in [0, 1): raised-cosine inhale then exhale.
double breath_waveform(double phase, double inhale_fraction);

SynthOutput generate(const SynthScenario& sc, std::uint64_t seed);

/// Flat-shaded raster for frame `index` of a generated stream: skin-coloured ROI
/// on a non-skin background at the background depth.
RasterFrame render_frame(const SynthScenario& sc, const FrameSummary& summary, std::uint64_t seed);

}  // namespace neovitals
