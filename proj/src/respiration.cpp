#include "neovitals/respiration.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "neovitals/frame.hpp"

namespace neovitals {

namespace {

// max - min over a centred window of `width` samples.
std::vector<double> sliding_range(std::span<const double> x, std::size_t width) {
  const std::size_t n = x.size();
  const std::size_t half = width / 2;
  std::vector<double> out(n, 0.0);
  std::deque<std::size_t> hi, lo;
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t right = std::min(n - 1, i + half);
    while (next <= right) {
      while (!hi.empty() && x[hi.back()] <= x[next]) hi.pop_back();
      hi.push_back(next);
      while (!lo.empty() && x[lo.back()] >= x[next]) lo.pop_back();
      lo.push_back(next);
      ++next;
    }
    const std::size_t left = i >= half ? i - half : 0;
    while (hi.front() < left) hi.pop_front();
    while (lo.front() < left) lo.pop_front();
    out[i] = x[hi.front()] - x[lo.front()];
  }
  return out;
}

// Centred moving mean over present samples; missing where the window has none.
std::vector<std::optional<double>> moving_mean(const SampledSeries& s, std::size_t width) {
  const std::size_t n = s.size();
  const std::size_t half = width / 2;
  std::vector<double> csum(n + 1, 0.0);
  std::vector<std::size_t> ccount(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool present = !s.is_missing(i);
    csum[i + 1] = csum[i] + (present ? s.values[i] : 0.0);
    ccount[i + 1] = ccount[i] + (present ? 1 : 0);
  }
  std::vector<std::optional<double>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i >= half ? i - half : 0;
    const std::size_t b = std::min(n, i + half + 1);
    const std::size_t c = ccount[b] - ccount[a];
    if (c > 0) out[i] = (csum[b] - csum[a]) / static_cast<double>(c);
  }
  return out;
}

SsaSpec ssa_spec_for(std::size_t n, double rate, std::size_t components, const RespirationOptions& opt) {
  const std::size_t window = opt.ssa_window.value_or(default_ssa_window(n, rate));
  return SsaSpec{window, std::min(components, window)};
}

BandpassSpec band_for(double rate, const RespirationOptions& opt) {
  return bandpass_per_min(opt.filter_order, opt.band_lo, opt.band_hi, rate);
}

std::size_t samples_for(double seconds, double rate) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(seconds * rate)));
}

// Windowed statistic over breaths whose peaks fall inside [start, start + window).
template <typename Fn>
SampledSeries windowed(const SampledSeries& s, const RespirationOptions& opt, Unit unit, Fn&& fn) {
  const std::size_t win = samples_for(opt.window_s, s.rate);
  const std::size_t stride = samples_for(opt.stride_s, s.rate);
  SampledSeries out = make_series({}, 1.0 / opt.stride_s, unit, s.start_time + opt.window_s / 2.0);
  for (std::size_t start = 0; start + win <= s.size(); start += stride) {
    const auto v = fn(start, start + win);
    out.values.push_back(v.value_or(0.0));
    if (!v) out.set_missing(out.values.size() - 1);
  }
  if (!out.missing.empty()) out.missing.resize(out.values.size(), 0);
  return out;
}

}  // namespace

std::vector<std::string> QuadrantStreams::violations() const {
  std::vector<std::string> out;
  for (int q = 0; q < 4; ++q) {
    if (depth[q].size() != depth[0].size()) out.emplace_back("quadrant streams differ in length");
    if (std::abs(depth[q].rate - depth[0].rate) > 1e-9 * depth[0].rate) out.emplace_back("quadrant streams differ in rate");
    if (std::abs(depth[q].start_time - depth[0].start_time) > 1e-9) out.emplace_back("quadrant streams are not aligned");
    for (auto& v : validate_series(depth[q])) out.push_back(std::move(v));
  }
  return out;
}

QuadrantStreams quadrant_streams_from(std::span<const FrameSummary> frames, double rate) {
  if (frames.empty()) throw ContractError("no frames");
  if (!(rate > 0.0)) throw ContractError("frame rate must be > 0");
  double t0 = frames.front().timestamp, t1 = t0;
  for (const auto& f : frames) {
    t0 = std::min(t0, f.timestamp);
    t1 = std::max(t1, f.timestamp);
  }
  const auto n = static_cast<std::size_t>(std::lround((t1 - t0) * rate)) + 1;
  QuadrantStreams q;
  for (auto& d : q.depth) {
    d = make_series(std::vector<double>(n, 0.0), rate, Unit::mm, t0);
    d.missing.assign(n, 1);
  }
  for (const auto& f : frames) {
    const auto i = static_cast<std::size_t>(std::lround((f.timestamp - t0) * rate));
    for (int k = 0; k < 4; ++k) {
      if (f.quadrant_valid_count[k] > 0 && f.quadrant_depth_mm[k]) {
        q.depth[k].values[i] = *f.quadrant_depth_mm[k];
        q.depth[k].missing[i] = 0;
      }
    }
  }
  return q;
}

RespiratorySignal respiratory_signal(const QuadrantStreams& q, const RespirationOptions& opt) {
  if (auto v = q.violations(); !v.empty()) throw ContractError("invalid quadrant streams: " + v.front());
  const std::size_t n = q.size();
  const double rate = q.rate();
  const std::size_t range_width = samples_for(opt.validity_window_s, rate);

  RespiratorySignal out;
  bool any = false;
  for (int k = 0; k < 4; ++k) {
    const auto& d = q.depth[k];
    out.valid[k].assign(n, 0);
    if (d.missing_count() == n) {
      out.filtered[k] = make_series(std::vector<double>(n, 0.0), rate, Unit::mm, d.start_time);
      out.filtered[k].missing.assign(n, 1);
      continue;
    }
    any = true;
    SampledSeries f = bandpass_zero_phase(d, band_for(rate, opt));
    f.values = ssa_reconstruct(f.values, ssa_spec_for(n, rate, opt.rate_components, opt));
    for (double& v : f.values) v = -v;
    const auto range = sliding_range(f.values, range_width);
    // Ringing after a large step decays back into the valid range, so an
    // over-range sample poisons a settling margin around it.
    const auto settle = static_cast<std::ptrdiff_t>(samples_for(opt.settle_s, rate));
    std::vector<int> poisoned(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (range[i] <= opt.valid_max_mm) continue;
      const auto a = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(i) - settle);
      const auto b = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n), static_cast<std::ptrdiff_t>(i) + settle + 1);
      ++poisoned[static_cast<std::size_t>(a)];
      --poisoned[static_cast<std::size_t>(b)];
    }
    int depth = 0;
    for (std::size_t i = 0; i < n; ++i) {
      depth += poisoned[i];
      out.valid[k][i] = depth == 0 && !d.is_missing(i) && range[i] >= opt.valid_min_mm;
    }
    out.filtered[k] = std::move(f);
  }
  if (!any) throw ContractError("all quadrants are empty");

  out.signal = make_series(std::vector<double>(n, 0.0), rate, Unit::mm, q.depth[0].start_time);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    int count = 0;
    for (int k = 0; k < 4; ++k) {
      if (out.valid[k][i]) {
        sum += out.filtered[k].values[i];
        ++count;
      }
    }
    if (count > 0) {
      out.signal.values[i] = sum / count;
    } else {
      out.signal.set_missing(i);
    }
  }
  return out;
}

std::vector<BreathAmplitude> breath_amplitudes(const SampledSeries& s, const SampledSeries& tv_context,
                                               const BreathRules& rules) {
  if (s.size() != tv_context.size()) throw ContractError("breath_amplitudes: signal and volume context differ in length");
  const auto peaks = detect_peaks(s, rules.min_prominence_ml, rules.min_separation_s);
  const auto vol = interpolate_missing(tv_context);
  std::vector<BreathAmplitude> out;
  for (std::size_t i = 0; i < peaks.peaks.size(); ++i) {
    const std::size_t p = peaks.peaks[i];
    if (tv_context.is_missing(p)) continue;
    std::size_t valley;
    if (i > 0) {
      valley = peaks.valleys[i - 1];
    } else if (!peaks.valleys.empty()) {
      valley = peaks.valleys[0];
    } else {
      continue;
    }
    out.push_back({p, valley, vol[p] - vol[valley]});
  }
  return out;
}

std::vector<bool> qualifying_breaths(std::span<const BreathAmplitude> breaths, const BreathRules& rules) {
  std::vector<bool> out(breaths.size(), false);
  if (breaths.empty()) return out;
  std::vector<double> amps;
  for (const auto& b : breaths) amps.push_back(b.amplitude);
  const double median = median_of(amps);
  const double cap = std::max(rules.cap_ml, rules.cap_factor * median);
  std::vector<double> kept;
  for (double a : amps) {
    if (a >= rules.min_tv_ml && a <= cap) kept.push_back(a);
  }
  if (kept.size() < 2) return out;
  const double sd = std::max(stddev_of(kept), rules.sd_floor_ml);
  for (std::size_t i = 0; i < amps.size(); ++i) out[i] = std::abs(amps[i] - median) <= rules.band_sd * sd;
  return out;
}

SampledSeries rate_by_peaks(const SampledSeries& s, const SampledSeries& tv_context, const RespirationOptions& opt) {
  const auto breaths = breath_amplitudes(s, tv_context, opt.breaths);
  const auto ok = qualifying_breaths(breaths, opt.breaths);
  return windowed(s, opt, Unit::breaths_per_min, [&](std::size_t a, std::size_t b) -> std::optional<double> {
    std::size_t count = 0;
    for (std::size_t i = 0; i < breaths.size(); ++i) {
      if (ok[i] && breaths[i].peak >= a && breaths[i].peak < b) ++count;
    }
    return static_cast<double>(count) * 60.0 / opt.window_s;
  });
}

FourierRate rate_by_fourier(const SampledSeries& s, const RespirationOptions& opt) {
  SpectralRateOptions so;
  so.window_s = opt.window_s;
  so.stride_s = opt.stride_s;
  so.prior = opt.prior;
  so.band_lo = opt.band_lo;
  so.band_hi = opt.band_hi;
  if (opt.adaptive_prior) so.adaptive = opt.adaptive;

  FourierRate out;
  out.estimates = spectral_rate(s, so);
  out.raw = make_series({}, 1.0 / opt.stride_s, Unit::breaths_per_min,
                        out.estimates.empty() ? s.start_time : out.estimates.front().time);
  for (const auto& e : out.estimates) {
    out.raw.values.push_back(e.rate);
    if (e.missing) out.raw.set_missing(out.raw.values.size() - 1);
    out.smoothed.confidence.push_back(e.posterior_peak);
    out.smoothed.low_confidence.push_back(e.low_confidence ? 1 : 0);
  }
  if (!out.raw.missing.empty()) out.raw.missing.resize(out.raw.values.size(), 0);
  KalmanParams kp = opt.rate_kalman;
  kp.dt = opt.stride_s;
  out.smoothed.value = kalman_smooth(out.raw, kp);
  return out;
}

SampledSeries volume_signal(const QuadrantStreams& q, const RoiGeometry& roi, const CameraIntrinsics& k,
                            const RespirationOptions& opt, std::optional<int> region) {
  if (auto v = q.violations(); !v.empty()) throw ContractError("invalid quadrant streams: " + v.front());
  if (!k.valid()) throw ContractError("camera intrinsics must have positive focal lengths");
  const std::size_t n = q.size();
  const double rate = q.rate();
  const RoiGeometry area_roi = region ? roi.quadrant(*region) : roi;

  // Depth per time point: the selected quadrant, or the mean of present quadrants.
  SampledSeries z = make_series(std::vector<double>(n, 0.0), rate, Unit::mm, q.depth[0].start_time);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    int count = 0;
    for (int r = 0; r < 4; ++r) {
      if (region && r != *region) continue;
      if (!q.depth[r].is_missing(i)) {
        sum += q.depth[r].values[i];
        ++count;
      }
    }
    if (count > 0) {
      z.values[i] = sum / count;
    } else {
      z.set_missing(i);
    }
  }
  if (z.missing_count() == n) throw ContractError("no valid depth for volume signal");

  // Projected ROI extent from the windowed mean depth.
  const auto z_mean = moving_mean(z, samples_for(opt.area_window_s, rate));
  SampledSeries volume = make_series(std::vector<double>(n, 0.0), rate, Unit::ml, z.start_time);
  for (std::size_t i = 0; i < n; ++i) {
    if (z.is_missing(i) || !z_mean[i]) {
      volume.set_missing(i);
      continue;
    }
    const auto c1 = project_to_world(area_roi.x1, area_roi.y1, *z_mean[i], k);
    const auto c2 = project_to_world(area_roi.x2, area_roi.y2, *z_mean[i], k);
    volume.values[i] = z.values[i] * (c2.x - c1.x) * (c2.y - c1.y) / 1000.0;
  }

  SampledSeries out = bandpass_zero_phase(volume, band_for(rate, opt));
  out.values = ssa_reconstruct(out.values, ssa_spec_for(n, rate, opt.volume_components, opt));
  for (double& v : out.values) v = -v;
  return out;
}

TidalVolume tidal_volume(const SampledSeries& volume, const RespirationOptions& opt) {
  if (volume.empty()) throw ContractError("tidal_volume: empty volume signal");
  const auto breaths = breath_amplitudes(volume, volume, opt.breaths);
  const auto ok = qualifying_breaths(breaths, opt.breaths);
  TidalVolume out;
  out.raw = windowed(volume, opt, Unit::ml, [&](std::size_t a, std::size_t b) -> std::optional<double> {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < breaths.size(); ++i) {
      if (ok[i] && breaths[i].peak >= a && breaths[i].peak < b) {
        sum += breaths[i].amplitude;
        ++count;
      }
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
  });
  KalmanParams kp = opt.tv_kalman;
  kp.dt = opt.stride_s;
  out.smoothed = kalman_smooth(out.raw, kp);
  return out;
}

TidalVolume regional_tidal_volume(const QuadrantStreams& q, int region, const RoiGeometry& roi,
                                  const CameraIntrinsics& k, const RespirationOptions& opt) {
  if (region < 0 || region > 3) throw ContractError("region must be a quadrant id 0..3");
  if (q.depth[region].missing_count() == q.size()) {
    // Occluded quadrant: every window is missing.
    const std::size_t win = samples_for(opt.window_s, q.rate());
    const std::size_t stride = samples_for(opt.stride_s, q.rate());
    const std::size_t count = q.size() >= win ? (q.size() - win) / stride + 1 : 0;
    TidalVolume out;
    out.raw = make_series(std::vector<double>(count, 0.0), 1.0 / opt.stride_s, Unit::ml,
                          q.depth[0].start_time + opt.window_s / 2.0);
    out.raw.missing.assign(count, 1);
    out.smoothed = out.raw;
    return out;
  }
  return tidal_volume(volume_signal(q, roi, k, opt, region), opt);
}

std::string_view to_string(LoopExclusion e) {
  switch (e) {
    case LoopExclusion::endpoint_drift: return "endpoint_drift";
    case LoopExclusion::low_tidal_volume: return "low_tidal_volume";
    case LoopExclusion::tidal_volume_outlier: return "tidal_volume_outlier";
    case LoopExclusion::non_sinusoidal_flow: return "non_sinusoidal_flow";
  }
  return "unknown";
}

double sinusoid_fit_nrms(std::span<const double> flow) {
  const std::size_t n = flow.size();
  if (n < 4) return 1.0;
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), 3);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1);
    const auto r = static_cast<Eigen::Index>(i);
    a(r, 0) = 1.0;
    a(r, 1) = std::sin(phase);
    a(r, 2) = std::cos(phase);
    y(r) = flow[i];
  }
  const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(y);
  const double energy = y.squaredNorm();
  if (energy <= 0.0) return 0.0;
  return std::sqrt((a * coef - y).squaredNorm() / energy);
}

std::vector<BreathSegment> flow_volume_loops(const SampledSeries& volume, const RespirationOptions& opt) {
  if (volume.size() < 3) throw ContractError("flow_volume_loops: volume signal too short");
  const auto& rules = opt.loops;
  const auto peaks = detect_peaks(volume, opt.breaths.min_prominence_ml, opt.breaths.min_separation_s);
  const auto vol = interpolate_missing(volume);
  SampledSeries filled = volume;
  filled.values = vol;
  filled.missing.clear();
  const auto flow = differentiate(filled);

  std::vector<BreathSegment> out;
  for (std::size_t i = 0; i + 1 < peaks.valleys.size(); ++i) {
    BreathSegment b;
    b.start = peaks.valleys[i];
    b.end = peaks.valleys[i + 1];
    if (b.end <= b.start) continue;
    const std::size_t peak = peaks.peaks[i + 1];
    b.tidal_volume = std::max(0.0, vol[peak] - vol[b.start]);
    b.endpoint_drift = std::abs(vol[b.end] - vol[b.start]);
    std::vector<double> f(flow.values.begin() + static_cast<std::ptrdiff_t>(b.start),
                          flow.values.begin() + static_cast<std::ptrdiff_t>(b.end) + 1);
    b.flow_nrms = sinusoid_fit_nrms(f);
    for (std::size_t t = b.start; t <= b.end; ++t) b.loop.push_back({vol[t], flow.values[t]});
    if (b.endpoint_drift > rules.max_endpoint_drift_ml) b.exclusions.push_back(LoopExclusion::endpoint_drift);
    if (b.tidal_volume < rules.min_tv_ml) b.exclusions.push_back(LoopExclusion::low_tidal_volume);
    out.push_back(std::move(b));
  }

  // Spread statistics over breaths that survived the drift and size rules.
  std::vector<double> tvs;
  for (const auto& b : out) {
    if (b.accepted()) tvs.push_back(b.tidal_volume);
  }
  const double median = median_of(tvs);
  const double sd = std::max(stddev_of(tvs), rules.sd_floor_ml);
  for (auto& b : out) {
    if (b.accepted() && std::abs(b.tidal_volume - median) > rules.max_sd_from_median * sd) {
      b.exclusions.push_back(LoopExclusion::tidal_volume_outlier);
    }
    if (b.flow_nrms > rules.max_flow_nrms) b.exclusions.push_back(LoopExclusion::non_sinusoidal_flow);
  }
  return out;
}

}  // namespace neovitals
