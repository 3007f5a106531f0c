#include "neovitals/oximetry.hpp"

#include <algorithm>
#include <cmath>

namespace neovitals {

ExtinctionTable default_extinction_table() {
  return ExtinctionTable{3226.56, 319.6, 691.32, 1058.0};
}

std::string_view to_string(Spo2Method m) {
  switch (m) {
    case Spo2Method::red_ir: return "red_ir";
    case Spo2Method::red_blue: return "red_blue";
    case Spo2Method::ycgcr: return "ycgcr";
    case Spo2Method::calibration_free: return "calfree";
  }
  return "red_ir";
}

Spo2Method spo2_method_from_string(std::string_view s) {
  for (auto m : {Spo2Method::red_ir, Spo2Method::red_blue, Spo2Method::ycgcr, Spo2Method::calibration_free}) {
    if (to_string(m) == s) return m;
  }
  throw ContractError("unknown SpO2 method '" + std::string(s) + "'");
}

const OximetryCalibration& OximetryOptions::calibration(Spo2Method m) const {
  switch (m) {
    case Spo2Method::red_blue: return red_blue;
    case Spo2Method::ycgcr: return ycgcr;
    default: return red_ir;
  }
}

std::vector<AcDc> ac_dc(const SampledSeries& filtered, const SampledSeries& raw, const OximetryOptions& opt) {
  if (filtered.size() != raw.size()) throw ContractError("ac_dc: filtered and raw series differ in length");
  const auto seg = static_cast<std::size_t>(std::lround(opt.segment_s * raw.rate));
  if (seg < 3) throw ContractError("ac_dc: segment too short");
  const auto sep = static_cast<std::size_t>(std::max(1.0, std::round(opt.min_peak_separation_s * raw.rate)));

  std::vector<AcDc> out;
  for (std::size_t start = 0; start + seg <= raw.size(); start += seg) {
    AcDc r;
    r.window_start = raw.time_at(start);
    std::vector<double> f;
    double dc_sum = 0.0;
    std::size_t present = 0;
    for (std::size_t i = start; i < start + seg; ++i) {
      f.push_back(filtered.values[i]);
      if (!raw.is_missing(i)) {
        dc_sum += raw.values[i];
        ++present;
      }
    }
    if (static_cast<double>(seg - present) > opt.max_missing_fraction * static_cast<double>(seg)) {
      out.push_back(r);
      continue;
    }
    const double dc = dc_sum / static_cast<double>(present);
    if (dc > 0.0) r.dc = dc;

    const double spread = stddev_of(f, false);
    // Rounding residue (e.g. a gray pulse through rows that sum to zero) is not a pulse.
    if (!(spread > 1e-9 * std::abs(dc))) {
      out.push_back(r);
      continue;
    }
    const double threshold = opt.prominence_factor * spread;
    const auto peaks = detect_peaks(f, threshold, sep);
    double amp = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < peaks.valleys.size(); ++i) {
      const std::size_t p = peaks.peaks[i], v = peaks.valleys[i];
      if (filtered.is_missing(start + p) || filtered.is_missing(start + v)) continue;
      amp += (f[p] - f[v]) / 2.0;
      ++pairs;
    }
    if (pairs > 0 && amp > 0.0) r.ac = amp / static_cast<double>(pairs);
    out.push_back(r);
  }
  return out;
}

std::vector<AcDc> channel_ac_dc(const SampledSeries& raw, const OximetryOptions& opt) {
  const auto filtered = bandpass_zero_phase(raw, bandpass_per_min(opt.filter_order, opt.band_lo, opt.band_hi, raw.rate));
  return ac_dc(filtered, raw, opt);
}

std::optional<double> ratio_of_ratios(const AcDc& num, const AcDc& den) {
  if (!num.ac || !den.ac || !num.dc || !den.dc) return std::nullopt;
  if (!(*num.dc > 0.0) || !(*den.dc > 0.0) || !(*den.ac > 0.0)) return std::nullopt;
  return (*num.ac / *num.dc) / (*den.ac / *den.dc);
}

double spo2_linear(double ratio, const OximetryCalibration& cal, const OximetryOptions& opt) {
  return std::clamp(cal.a - cal.b * ratio, opt.clamp_lo, opt.clamp_hi);
}

std::optional<double> spo2_beer_lambert(double ratio, const ExtinctionTable& t) {
  const double num = t.hb_red - ratio * t.hb_ir;
  const double den = t.hb_red - t.hbo2_red + ratio * (t.hbo2_ir - t.hb_ir);
  if (std::abs(den) < 1e-9) return std::nullopt;
  return 100.0 * num / den;
}

SampledSeries spo2_smooth(const SampledSeries& percent, const OximetryOptions& opt) {
  SampledSeries clamped = percent;
  clamped.unit = Unit::percent;
  for (std::size_t i = 0; i < clamped.size(); ++i) {
    if (!clamped.is_missing(i)) clamped.values[i] = std::clamp(clamped.values[i], opt.clamp_lo, opt.clamp_hi);
  }
  KalmanParams kp = opt.kalman;
  kp.dt = opt.segment_s;
  auto out = kalman_smooth(clamped, kp);
  // Smoothing cannot leave the clamp range, but keep the guarantee explicit.
  for (auto& v : out.values) v = std::clamp(v, opt.clamp_lo, opt.clamp_hi);
  return out;
}

namespace {

template <typename Fn>
Spo2Result finish(const std::vector<AcDc>& num, const std::vector<AcDc>& den, double start, const OximetryOptions& opt,
                  Fn&& to_percent) {
  Spo2Result r;
  const std::size_t n = std::min(num.size(), den.size());
  const double rate = 1.0 / opt.segment_s;
  r.ratio = make_series(std::vector<double>(n, 0.0), rate, Unit::dimensionless, start + opt.segment_s / 2.0);
  r.unclamped = make_series(std::vector<double>(n, 0.0), rate, Unit::percent, start + opt.segment_s / 2.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ratio = ratio_of_ratios(num[i], den[i]);
    std::optional<double> pct;
    if (ratio) {
      r.ratio.values[i] = *ratio;
      pct = to_percent(*ratio);
    } else {
      r.ratio.set_missing(i);
    }
    if (pct) {
      r.unclamped.values[i] = *pct;
    } else {
      r.unclamped.set_missing(i);
    }
  }
  r.spo2 = spo2_smooth(r.unclamped, opt);
  return r;
}

}  // namespace

Spo2Result spo2_ratio_method(const SampledSeries& num_raw, const SampledSeries& den_raw, const OximetryCalibration& cal,
                             const OximetryOptions& opt) {
  if (num_raw.size() != den_raw.size()) throw ContractError("SpO2 channels differ in length");
  if (!(cal.b > 0.0)) throw ContractError("calibration slope b must be > 0");
  const auto num = channel_ac_dc(num_raw, opt);
  const auto den = channel_ac_dc(den_raw, opt);
  return finish(num, den, num_raw.start_time, opt, [&](double ratio) -> std::optional<double> { return cal.a - cal.b * ratio; });
}

Spo2Result spo2_ycgcr(const RgbSeries& c, const OximetryCalibration& cal, const OximetryOptions& opt) {
  if (auto v = c.violations(); !v.empty()) throw ContractError("invalid RGB series: " + v.front());
  if (!(cal.b > 0.0)) throw ContractError("calibration slope b must be > 0");
  const auto& t = opt.ycgcr_transform;
  SampledSeries cg = c.g, cr = c.r;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double r = c.r.values[i], g = c.g.values[i], b = c.b.values[i];
    cg.values[i] = t.cg_offset + t.cg[0] * r + t.cg[1] * g + t.cg[2] * b;
    cr.values[i] = t.cr_offset + t.cr[0] * r + t.cr[1] * g + t.cr[2] * b;
    if (c.missing_at(i)) {
      cg.set_missing(i);
      cr.set_missing(i);
    }
  }
  const auto num = channel_ac_dc(cg, opt);
  const auto den = channel_ac_dc(cr, opt);
  return finish(num, den, c.r.start_time, opt, [&](double ratio) -> std::optional<double> { return cal.a - cal.b * ratio; });
}

Spo2Result spo2_calibration_free(const SampledSeries& red_raw, const SampledSeries& ir_raw, const OximetryOptions& opt) {
  if (!opt.extinction.configured()) throw ContractError("calibration-free SpO2 needs a configured extinction table");
  if (red_raw.size() != ir_raw.size()) throw ContractError("SpO2 channels differ in length");
  const auto num = channel_ac_dc(red_raw, opt);
  const auto den = channel_ac_dc(ir_raw, opt);
  return finish(num, den, red_raw.start_time, opt,
                [&](double ratio) { return spo2_beer_lambert(ratio, opt.extinction); });
}

}  // namespace neovitals
