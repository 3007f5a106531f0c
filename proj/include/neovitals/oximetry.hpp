#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "neovitals/cardio.hpp"
#include "neovitals/core.hpp"
#include "neovitals/dsp.hpp"

namespace neovitals {

struct AcDc {
  double window_start = 0.0;  // s
  std::optional<double> ac;   // mean half peak-to-trough amplitude of the filtered channel
  std::optional<double> dc;   // mean of the raw channel
};

struct OximetryCalibration {
  double a = 110.0;
  double b = 25.0;
};

/// Molar extinction coefficients (cm^-1 / M) at the effective red and infrared wavelengths.
struct ExtinctionTable {
  double hb_red = 0.0;
  double hbo2_red = 0.0;
  double hb_ir = 0.0;
  double hbo2_ir = 0.0;

  bool configured() const { return hb_red > 0.0 && hbo2_red > 0.0 && hb_ir > 0.0 && hbo2_ir > 0.0; }
};

/// Tabulated values for 660 nm and 850 nm (Prahl, "Optical absorption of hemoglobin", 1999).
ExtinctionTable default_extinction_table();

/// Linear RGB (0-255) -> Y, Cg, Cr rows with offsets.
struct YcgcrTransform {
  std::array<double, 3> y{65.481 / 255.0, 128.553 / 255.0, 24.966 / 255.0};
  std::array<double, 3> cg{-81.085 / 255.0, 112.0 / 255.0, -30.915 / 255.0};
  std::array<double, 3> cr{112.0 / 255.0, -93.786 / 255.0, -18.214 / 255.0};
  double y_offset = 16.0;
  double cg_offset = 128.0;
  double cr_offset = 128.0;
};

enum class Spo2Method { red_ir, red_blue, ycgcr, calibration_free };

std::string_view to_string(Spo2Method m);
Spo2Method spo2_method_from_string(std::string_view s);

struct OximetryOptions {
  int filter_order = 7;
  double band_lo = 60.0;  // per minute
  double band_hi = 300.0;
  double segment_s = 30.0;
  double prominence_factor = 0.5;  // peak prominence threshold, in units of the segment's std
  double min_peak_separation_s = 0.2;
  double max_missing_fraction = 0.5;
  double clamp_lo = 70.0;
  double clamp_hi = 100.0;
  KalmanParams kalman{default_process_noise(), 10.0, 30.0};
  OximetryCalibration red_ir, red_blue, ycgcr;
  YcgcrTransform ycgcr_transform;
  ExtinctionTable extinction = default_extinction_table();

  const OximetryCalibration& calibration(Spo2Method m) const;
};

/// Non-overlapping segments: AC from peak/trough pairs of `filtered`, DC from `raw`.
std::vector<AcDc> ac_dc(const SampledSeries& filtered, const SampledSeries& raw, const OximetryOptions& opt = {});

/// Bandpasses `raw` with the oximetry band, then ac_dc.
std::vector<AcDc> channel_ac_dc(const SampledSeries& raw, const OximetryOptions& opt = {});

std::optional<double> ratio_of_ratios(const AcDc& num, const AcDc& den);

/// a - b R clamped to the physiological range (no smoothing).
double spo2_linear(double ratio, const OximetryCalibration& cal, const OximetryOptions& opt = {});

/// Two-wavelength Beer-Lambert inversion, percent before clamping; nullopt when the denominator vanishes.
std::optional<double> spo2_beer_lambert(double ratio, const ExtinctionTable& table);

struct Spo2Result {
  SampledSeries ratio;     // ratio of ratios per segment
  SampledSeries unclamped; // percent before clamping
  SampledSeries spo2;      // clamped and Kalman-smoothed percent
};

/// Red/IR or Red/Blue ratio-of-ratios with linear calibration.
Spo2Result spo2_ratio_method(const SampledSeries& num_raw, const SampledSeries& den_raw, const OximetryCalibration& cal,
                             const OximetryOptions& opt = {});

/// Cg/Cr ratio-of-ratios after the configured colour transform.
Spo2Result spo2_ycgcr(const RgbSeries& c, const OximetryCalibration& cal, const OximetryOptions& opt = {});

/// Beer-Lambert inversion of the red/IR ratio; requires a configured extinction table.
Spo2Result spo2_calibration_free(const SampledSeries& red_raw, const SampledSeries& ir_raw, const OximetryOptions& opt = {});

/// Series form of the clamp + Kalman stage, one sample per segment.
SampledSeries spo2_smooth(const SampledSeries& percent, const OximetryOptions& opt = {});

}  // namespace neovitals
