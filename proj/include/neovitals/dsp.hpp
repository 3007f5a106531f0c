#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "neovitals/core.hpp"

namespace neovitals {

// ---------------------------------------------------------------------------
// Butterworth bandpass

struct BandpassSpec {
  int order = 7;  // prototype order; the bandpass has 2*order poles
  double lo = 0.25;
  double hi = 2.5;
  double rate = 30.0;

  std::vector<std::string> violations() const;
};

BandpassSpec bandpass_per_min(int order, double lo_per_min, double hi_per_min, double rate);

/// One second-order section, a0 normalised to 1.
struct Biquad {
  double b0, b1, b2;
  double a1, a2;
};

class SosFilter {
 public:
  explicit SosFilter(std::vector<Biquad> sections) : sections_(std::move(sections)) {}

  const std::vector<Biquad>& sections() const { return sections_; }

  /// Causal filtering. With `steady_state` the section states start at the
  /// step-response steady state for the first input sample.
  std::vector<double> filter(std::span<const double> x, bool steady_state = false) const;

  /// Samples of odd reflection added on both ends before forward-backward filtering.
  std::size_t pad_length() const { return 3 * (2 * sections_.size() + 1); }

 private:
  std::vector<Biquad> sections_;
};

SosFilter design_butterworth_bandpass(const BandpassSpec& spec);

/// Forward then time-reversed pass of the same filter, with odd-reflection
/// padding and steady-state initial conditions. Throws if x is not longer than
/// the pad length.
std::vector<double> filtfilt(const SosFilter& f, std::span<const double> x);

/// Zero-phase bandpass of a series. Missing samples are linearly interpolated
/// before filtering and stay flagged in the output.
SampledSeries bandpass_zero_phase(const SampledSeries& s, const BandpassSpec& spec);

// ---------------------------------------------------------------------------
// Singular spectrum analysis

struct SsaSpec {
  std::size_t window = 0;      // embedding dimension l
  std::size_t components = 1;  // leading singular triples kept
};

/// l = min(floor(n/2), round(3 s * rate)).
std::size_t default_ssa_window(std::size_t n, double rate);

/// Rank-`components` reconstruction of the trajectory (Hankel) matrix followed
/// by anti-diagonal averaging.
std::vector<double> ssa_reconstruct(std::span<const double> x, const SsaSpec& spec);

SampledSeries ssa_denoise(const SampledSeries& s, const SsaSpec& spec);

// ---------------------------------------------------------------------------
// Bayesian spectral rate estimation

struct RateEstimate {
  double time = 0.0;            // window centre, s
  double rate = 0.0;            // per minute (posterior argmax)
  double raw_rate = 0.0;        // per minute (likelihood argmax, no prior)
  double posterior_peak = 0.0;  // posterior mass of the chosen bin
  bool low_confidence = false;
  bool missing = false;
};

struct AdaptivePriorOptions {
  std::size_t min_history = 10;
  std::size_t history_length = 60;  // most recent raw estimates used
  double min_std = 0.5;             // per minute; floor for the history spread
};

struct SpectralRateOptions {
  double window_s = 60.0;
  double stride_s = 1.0;
  GaussianPrior prior{50.0, 15.0};
  double band_lo = 15.0;  // per minute
  double band_hi = 150.0;
  double max_resolution = 0.5;      // per minute; zero padding reaches at least this
  double degenerate_ratio = 3.0;    // in-band max / median below this -> prior mean
  double max_missing_fraction = 0.5;
  std::optional<AdaptivePriorOptions> adaptive;
};

/// Per window: remove the mean, Hamming taper, zero-pad, take the magnitude
/// spectrum and weight it by the prior over the band. Missing samples count
/// as zero; a window with too many of them yields a missing estimate.
std::vector<RateEstimate> spectral_rate(const SampledSeries& s, const SpectralRateOptions& opt);

struct AdaptedPrior {
  GaussianPrior prior;
  bool adapted = false;
};

/// Product of the prior with a Gaussian fitted to `history` (>= min_history raw rates).
AdaptedPrior adapt_prior(const GaussianPrior& prior, std::span<const double> history,
                         const AdaptivePriorOptions& opt = {});

// ---------------------------------------------------------------------------
// Peaks

struct PeakSet {
  std::vector<std::size_t> peaks;
  std::vector<std::size_t> valleys;  // valleys[i] lies between peaks[i] and peaks[i+1]
};

/// Topographic prominence of every local maximum in x (plateaus resolved to their middle).
std::vector<double> peak_prominences(std::span<const double> x, std::span<const std::size_t> peaks);

PeakSet detect_peaks(std::span<const double> x, double min_prominence, std::size_t min_separation);
PeakSet detect_peaks(const SampledSeries& s, double min_prominence, double min_separation_s);

// ---------------------------------------------------------------------------
// Kalman smoothing

struct KalmanState {
  Eigen::Vector2d x = Eigen::Vector2d::Zero();  // [level, trend per step]
  Eigen::Matrix2d p = Eigen::Matrix2d::Zero();
  bool initialised = false;
};

/// Initial covariance for a fresh filter: diag(r^2, r^2 / 100).
Eigen::Matrix2d kalman_initial_covariance(const KalmanParams& params);

/// One predict/update step of the constant-velocity filter. A missing
/// observation is a prediction-only step. Returns the filtered level.
std::optional<double> kalman_step(KalmanState& state, std::optional<double> observation, const KalmanParams& params);

/// Filtered level per sample. Samples before the first observation stay missing.
SampledSeries kalman_smooth(const SampledSeries& s, const KalmanParams& params);

// ---------------------------------------------------------------------------
// Calculus

/// Central differences (one-sided at the ends) scaled by the rate. ml -> ml/s.
SampledSeries differentiate(const SampledSeries& s);

/// Cumulative trapezoidal integral starting at zero. ml/s -> ml.
SampledSeries integrate(const SampledSeries& s);

// ---------------------------------------------------------------------------
// Small helpers shared by the modules

double mean_of(std::span<const double> x);
double stddev_of(std::span<const double> x, bool sample = true);
double median_of(std::vector<double> x);

}  // namespace neovitals
