#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace neovitals {

// Input or state violates an operation's contract. The CLI maps this to exit code 2.
class ContractError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File or stream failure. The CLI maps this to exit code 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Unit { mm, ml, ml_per_s, bpm, breaths_per_min, percent, dimensionless };

std::string_view to_string(Unit u);
Unit unit_from_string(std::string_view s);

/// Uniformly sampled scalar series. Missing samples are flagged in `missing`
/// (empty vector = nothing missing); the value stored at a missing index is
/// unspecified and must not be read as data.
struct SampledSeries {
  double start_time = 0.0;  // seconds
  double rate = 1.0;        // Hz
  std::vector<double> values;
  std::vector<std::uint8_t> missing;
  Unit unit = Unit::dimensionless;

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
  bool is_missing(std::size_t i) const { return i < missing.size() && missing[i] != 0; }
  double time_at(std::size_t i) const { return start_time + static_cast<double>(i) / rate; }
  double duration() const { return static_cast<double>(values.size()) / rate; }
  std::size_t missing_count() const;

  void set_missing(std::size_t i, bool flag = true);
};

SampledSeries make_series(std::vector<double> values, double rate, Unit unit, double start_time = 0.0);

/// Returns one human-readable violation per broken invariant; empty when valid.
std::vector<std::string> validate_series(const SampledSeries& s);

/// Block-averages `s` down to `target_rate`. Missing source samples are left out of
/// each block mean; a block with no present samples is missing. A trailing
/// partial block is dropped.
SampledSeries resample_mean(const SampledSeries& s, double target_rate);

/// Fills missing samples by linear interpolation between present neighbours
/// (constant extrapolation at the ends). The returned series keeps the missing
/// flags. Throws ContractError if every sample is missing.
std::vector<double> interpolate_missing(const SampledSeries& s);

struct RoiGeometry {
  int x1 = 0, y1 = 0, x2 = 0, y2 = 0;  // half-open: [x1, x2) x [y1, y2)

  int width() const { return x2 - x1; }
  int height() const { return y2 - y1; }
  bool valid_for(int frame_width, int frame_height) const;

  /// Quadrant ids: 0 top-left, 1 top-right, 2 bottom-left, 3 bottom-right.
  /// Odd widths/heights give the extra column/row to the right/bottom quadrants.
  RoiGeometry quadrant(int id) const;
  bool operator==(const RoiGeometry&) const = default;
};

struct CameraIntrinsics {
  double fx = 0.0, fy = 0.0;  // focal lengths, pixels
  double px = 0.0, py = 0.0;  // principal point, pixels

  bool valid() const { return fx > 0.0 && fy > 0.0; }
};

struct FrameSummary {
  double timestamp = 0.0;
  RoiGeometry roi;
  std::array<std::optional<double>, 4> quadrant_depth_mm;
  std::array<int, 4> quadrant_valid_count{0, 0, 0, 0};
  std::optional<double> mean_r, mean_g, mean_b, mean_ir;
  std::optional<double> mean_depth_mm;
};

std::vector<std::string> validate_frame_summary(const FrameSummary& f);

/// Rate prior in per-minute units. An infinite std is a flat prior.
struct GaussianPrior {
  double mean = 0.0;
  double std = 1.0;

  double density(double rate_per_min) const;
};

struct KalmanParams {
  Eigen::Matrix2d q = Eigen::Matrix2d::Zero();
  double r_std = 1.0;
  double dt = 1.0;
};

/// Process noise used for every vital-sign Kalman smoother.
Eigen::Matrix2d default_process_noise();

std::vector<std::string> validate_kalman_params(const KalmanParams& p);

constexpr double per_min_to_hz(double v) { return v / 60.0; }
constexpr double hz_to_per_min(double v) { return v * 60.0; }

}  // namespace neovitals
