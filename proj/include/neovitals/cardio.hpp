#pragma once

#include <span>
#include <vector>

#include "neovitals/core.hpp"
#include "neovitals/dsp.hpp"
#include "neovitals/respiration.hpp"

namespace neovitals {

/// Skin-masked channel means (0-255 scale) on a shared clock.
struct RgbSeries {
  SampledSeries r, g, b;

  double rate() const { return r.rate; }
  std::size_t size() const { return r.size(); }
  std::vector<std::string> violations() const;
  bool missing_at(std::size_t i) const { return r.is_missing(i) || g.is_missing(i) || b.is_missing(i); }
};

RgbSeries rgb_series_from(std::span<const FrameSummary> frames, double rate);

struct CardioOptions {
  int filter_order = 7;
  double band_lo = 90.0;  // per minute
  double band_hi = 270.0;
  double normalization_s = 120.0;  // CHROM channel-mean span
  double pos_window_s = 1.6;
  double window_s = 120.0;
  double stride_s = 1.0;
  GaussianPrior prior{155.0, 15.0};
  KalmanParams kalman{default_process_noise(), 20.0, 1.0};
};

/// CHROM pulse signal. Gap-free runs are processed independently; samples in
/// gaps, runs too short to filter and runs with sigma(Y_f) = 0 are missing.
SampledSeries chrom_signal(const RgbSeries& c, const CardioOptions& opt = {});

/// POS pulse signal: overlap-add of mean-removed per-window projections, then the CHROM bandpass.
SampledSeries pos_signal(const RgbSeries& c, const CardioOptions& opt = {});

/// Fixed-prior spectral heart rate followed by Kalman smoothing.
FourierRate heart_rate(const SampledSeries& pulse, const CardioOptions& opt = {});

/// Samplewise mean; a missing side falls back to the other one.
SampledSeries combine_hr(const SampledSeries& a, const SampledSeries& b);

}  // namespace neovitals
