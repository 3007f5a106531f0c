#include "neovitals/core.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace neovitals {

std::string_view to_string(Unit u) {
  switch (u) {
    case Unit::mm: return "mm";
    case Unit::ml: return "ml";
    case Unit::ml_per_s: return "ml/s";
    case Unit::bpm: return "bpm";
    case Unit::breaths_per_min: return "breaths/min";
    case Unit::percent: return "percent";
    case Unit::dimensionless: return "dimensionless";
  }
  return "dimensionless";
}

Unit unit_from_string(std::string_view s) {
  for (Unit u : {Unit::mm, Unit::ml, Unit::ml_per_s, Unit::bpm, Unit::breaths_per_min, Unit::percent,
                 Unit::dimensionless}) {
    if (to_string(u) == s) return u;
  }
  throw ContractError("unknown unit '" + std::string(s) + "'");
}

std::size_t SampledSeries::missing_count() const {
  std::size_t n = 0;
  for (auto m : missing) n += m != 0;
  return n;
}

void SampledSeries::set_missing(std::size_t i, bool flag) {
  if (missing.empty() && !flag) return;
  // Series grown with push_back may have a shorter mask.
  if (missing.size() < values.size()) missing.resize(values.size(), 0);
  missing[i] = flag ? 1 : 0;
}

SampledSeries make_series(std::vector<double> values, double rate, Unit unit, double start_time) {
  SampledSeries s;
  s.start_time = start_time;
  s.rate = rate;
  s.values = std::move(values);
  s.unit = unit;
  return s;
}

std::vector<std::string> validate_series(const SampledSeries& s) {
  std::vector<std::string> out;
  if (!(s.rate > 0.0) || !std::isfinite(s.rate)) out.emplace_back("rate must be > 0");
  if (!std::isfinite(s.start_time)) out.emplace_back("start_time must be finite");
  if (!s.missing.empty() && s.missing.size() != s.values.size())
    out.emplace_back("missing flags must match values length");
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    const bool flagged = s.missing.size() == s.values.size() && s.missing[i] != 0;
    if (!std::isfinite(s.values[i]) && !flagged) {
      out.push_back("values[" + std::to_string(i) + "] is not finite and not flagged missing");
    }
  }
  return out;
}

SampledSeries resample_mean(const SampledSeries& s, double target_rate) {
  if (!(target_rate > 0.0)) throw ContractError("target rate must be > 0");
  if (target_rate > s.rate * (1.0 + 1e-12)) throw ContractError("upsampling not supported here");

  const double ratio = target_rate / s.rate;
  const auto n_out = static_cast<std::size_t>(std::floor(static_cast<double>(s.size()) * ratio + 1e-9));
  std::vector<double> sum(n_out, 0.0);
  std::vector<std::size_t> count(n_out, 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto b = static_cast<std::size_t>(std::floor(static_cast<double>(i) * ratio + 1e-9));
    if (b >= n_out) break;
    if (s.is_missing(i)) continue;
    sum[b] += s.values[i];
    ++count[b];
  }

  SampledSeries out = make_series(std::vector<double>(n_out, 0.0), target_rate, s.unit, s.start_time);
  for (std::size_t b = 0; b < n_out; ++b) {
    if (count[b] == 0) {
      out.set_missing(b);
    } else {
      out.values[b] = sum[b] / static_cast<double>(count[b]);
    }
  }
  return out;
}

std::vector<double> interpolate_missing(const SampledSeries& s) {
  std::vector<double> v = s.values;
  if (s.missing.empty()) return v;
  const std::size_t n = v.size();
  std::size_t prev = n;  // index of last present sample
  for (std::size_t i = 0; i < n; ++i) {
    if (s.is_missing(i)) continue;
    if (prev == n) {
      for (std::size_t j = 0; j < i; ++j) v[j] = v[i];
    } else if (i > prev + 1) {
      const double a = v[prev], b = v[i];
      const double span = static_cast<double>(i - prev);
      for (std::size_t j = prev + 1; j < i; ++j) v[j] = a + (b - a) * static_cast<double>(j - prev) / span;
    }
    prev = i;
  }
  if (prev == n) throw ContractError("series has no present samples");
  for (std::size_t j = prev + 1; j < n; ++j) v[j] = v[prev];
  return v;
}

bool RoiGeometry::valid_for(int frame_width, int frame_height) const {
  return x1 >= 0 && y1 >= 0 && x1 < x2 && y1 < y2 && x2 <= frame_width && y2 <= frame_height;
}

RoiGeometry RoiGeometry::quadrant(int id) const {
  const int xm = x1 + width() / 2;
  const int ym = y1 + height() / 2;
  switch (id) {
    case 0: return {x1, y1, xm, ym};
    case 1: return {xm, y1, x2, ym};
    case 2: return {x1, ym, xm, y2};
    case 3: return {xm, ym, x2, y2};
    default: throw ContractError("quadrant id must be 0..3");
  }
}

std::vector<std::string> validate_frame_summary(const FrameSummary& f) {
  std::vector<std::string> out;
  if (!std::isfinite(f.timestamp)) out.emplace_back("timestamp must be finite");
  if (!(f.roi.x1 < f.roi.x2 && f.roi.y1 < f.roi.y2)) out.emplace_back("roi must satisfy x1 < x2 and y1 < y2");
  for (int q = 0; q < 4; ++q) {
    const auto count = f.quadrant_valid_count[q];
    const auto& depth = f.quadrant_depth_mm[q];
    if (count < 0) out.push_back("q_count[" + std::to_string(q) + "] must be >= 0");
    if (count > 0 && (!depth || !(*depth > 0.0)))
      out.push_back("q_depth[" + std::to_string(q) + "] must be positive when q_count > 0");
    if (count == 0 && depth) out.push_back("q_depth[" + std::to_string(q) + "] present without valid pixels");
    if (f.roi.x1 < f.roi.x2 && f.roi.y1 < f.roi.y2) {
      const auto r = f.roi.quadrant(q);
      if (count > r.width() * r.height()) out.push_back("q_count[" + std::to_string(q) + "] exceeds the quadrant size");
    }
  }
  for (const auto* c : {&f.mean_r, &f.mean_g, &f.mean_b, &f.mean_ir}) {
    if (*c && !std::isfinite(**c)) out.emplace_back("channel means must be finite when present");
  }
  return out;
}

double GaussianPrior::density(double rate_per_min) const {
  if (std::isinf(std)) return 1.0;
  const double z = (rate_per_min - mean) / std;
  return std::exp(-0.5 * z * z) / (std * std::sqrt(2.0 * std::numbers::pi));
}

Eigen::Matrix2d default_process_noise() {
  Eigen::Matrix2d q;
  q << 1e-4, 0.0, 0.0, 1e-5;
  return q;
}

std::vector<std::string> validate_kalman_params(const KalmanParams& p) {
  std::vector<std::string> out;
  if (!(p.r_std > 0.0)) out.emplace_back("r_std must be > 0");
  if (!(p.dt > 0.0)) out.emplace_back("dt must be > 0");
  if (std::abs(p.q(0, 1) - p.q(1, 0)) > 1e-15) out.emplace_back("q must be symmetric");
  const double det = p.q(0, 0) * p.q(1, 1) - p.q(0, 1) * p.q(1, 0);
  if (p.q(0, 0) < 0.0 || p.q(1, 1) < 0.0 || det < -1e-30) out.emplace_back("q must be positive semidefinite");
  return out;
}

}  // namespace neovitals
