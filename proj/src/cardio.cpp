#include "neovitals/cardio.hpp"

#include <algorithm>
#include <cmath>

namespace neovitals {

namespace {

struct Run {
  std::size_t begin, end;  // [begin, end)
};

std::vector<Run> gap_free_runs(const RgbSeries& c) {
  std::vector<Run> runs;
  std::size_t i = 0;
  const std::size_t n = c.size();
  while (i < n) {
    while (i < n && c.missing_at(i)) ++i;
    const std::size_t start = i;
    while (i < n && !c.missing_at(i)) ++i;
    if (i > start) runs.push_back({start, i});
  }
  return runs;
}

std::vector<double> slice(const SampledSeries& s, const Run& r) {
  return {s.values.begin() + static_cast<std::ptrdiff_t>(r.begin), s.values.begin() + static_cast<std::ptrdiff_t>(r.end)};
}

// Divides by a centred moving mean of `width` samples.
std::vector<double> normalise_by_moving_mean(std::span<const double> x, std::size_t width) {
  const std::size_t n = x.size();
  const std::size_t half = width / 2;
  std::vector<double> csum(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) csum[i + 1] = csum[i] + x[i];
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i >= half ? i - half : 0;
    const std::size_t b = std::min(n, i + half + 1);
    out[i] = x[i] / ((csum[b] - csum[a]) / static_cast<double>(b - a));
  }
  return out;
}

SampledSeries empty_like(const RgbSeries& c) {
  SampledSeries out = make_series(std::vector<double>(c.size(), 0.0), c.rate(), Unit::dimensionless, c.r.start_time);
  out.missing.assign(c.size(), 1);
  return out;
}

void write_run(SampledSeries& out, const Run& r, std::span<const double> v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.values[r.begin + i] = v[i];
    out.missing[r.begin + i] = 0;
  }
}

// Relative floor below which a channel combination is treated as identically zero.
constexpr double kDegenerate = 1e-12;

}  // namespace

std::vector<std::string> RgbSeries::violations() const {
  std::vector<std::string> out;
  for (const auto* s : {&r, &g, &b}) {
    if (s->size() != r.size()) out.emplace_back("channel series differ in length");
    if (std::abs(s->rate - r.rate) > 1e-9 * r.rate) out.emplace_back("channel series differ in rate");
    for (std::size_t i = 0; i < s->size(); ++i) {
      if (!s->is_missing(i) && !(s->values[i] > 0.0)) {
        out.emplace_back("channel means must be strictly positive where present");
        break;
      }
    }
  }
  return out;
}

RgbSeries rgb_series_from(std::span<const FrameSummary> frames, double rate) {
  if (frames.empty()) throw ContractError("no frames");
  double t0 = frames.front().timestamp, t1 = t0;
  for (const auto& f : frames) {
    t0 = std::min(t0, f.timestamp);
    t1 = std::max(t1, f.timestamp);
  }
  const auto n = static_cast<std::size_t>(std::lround((t1 - t0) * rate)) + 1;
  RgbSeries c;
  for (auto* s : {&c.r, &c.g, &c.b}) {
    *s = make_series(std::vector<double>(n, 0.0), rate, Unit::dimensionless, t0);
    s->missing.assign(n, 1);
  }
  for (const auto& f : frames) {
    if (!f.mean_r || !f.mean_g || !f.mean_b) continue;
    const auto i = static_cast<std::size_t>(std::lround((f.timestamp - t0) * rate));
    c.r.values[i] = *f.mean_r;
    c.g.values[i] = *f.mean_g;
    c.b.values[i] = *f.mean_b;
    c.r.missing[i] = c.g.missing[i] = c.b.missing[i] = 0;
  }
  return c;
}

SampledSeries chrom_signal(const RgbSeries& c, const CardioOptions& opt) {
  if (auto v = c.violations(); !v.empty()) throw ContractError("invalid RGB series: " + v.front());
  const auto filter = design_butterworth_bandpass(bandpass_per_min(opt.filter_order, opt.band_lo, opt.band_hi, c.rate()));
  const auto norm_width = static_cast<std::size_t>(std::lround(opt.normalization_s * c.rate()));
  SampledSeries out = empty_like(c);

  for (const Run& run : gap_free_runs(c)) {
    if (run.end - run.begin <= filter.pad_length()) continue;
    const auto rn = normalise_by_moving_mean(slice(c.r, run), norm_width);
    const auto gn = normalise_by_moving_mean(slice(c.g, run), norm_width);
    const auto bn = normalise_by_moving_mean(slice(c.b, run), norm_width);
    const std::size_t n = rn.size();
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = 3.0 * rn[i] - 2.0 * gn[i];
      y[i] = 1.5 * rn[i] + 0.5 * gn[i] - bn[i];
    }
    const auto rf = filtfilt(filter, rn);
    const auto gf = filtfilt(filter, gn);
    const auto bf = filtfilt(filter, bn);
    const auto xf = filtfilt(filter, x);
    const auto yf = filtfilt(filter, y);
    const double sx = stddev_of(xf, false);
    const double sy = stddev_of(yf, false);
    if (!(sy > kDegenerate)) continue;
    const double alpha = sx / sy;
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = 3.0 * (1.0 - alpha / 2.0) * rf[i] - 2.0 * (1.0 + alpha / 2.0) * gf[i] + 1.5 * alpha * bf[i];
    }
    write_run(out, run, s);
  }
  return out;
}

SampledSeries pos_signal(const RgbSeries& c, const CardioOptions& opt) {
  if (auto v = c.violations(); !v.empty()) throw ContractError("invalid RGB series: " + v.front());
  const auto filter = design_butterworth_bandpass(bandpass_per_min(opt.filter_order, opt.band_lo, opt.band_hi, c.rate()));
  const auto w = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(opt.pos_window_s * c.rate())));
  SampledSeries out = empty_like(c);

  for (const Run& run : gap_free_runs(c)) {
    const std::size_t n = run.end - run.begin;
    if (n < w || n <= filter.pad_length()) continue;
    const auto r = slice(c.r, run), g = slice(c.g, run), b = slice(c.b, run);
    std::vector<double> h(n, 0.0);
    std::vector<double> x(w), y(w), proj(w);
    bool any = false;
    for (std::size_t m = 0; m + w <= n; ++m) {
      const std::span<const double> rw(r.data() + m, w), gw(g.data() + m, w), bw(b.data() + m, w);
      const double mr = mean_of(rw), mg = mean_of(gw), mb = mean_of(bw);
      for (std::size_t i = 0; i < w; ++i) {
        const double rn = rw[i] / mr, gn = gw[i] / mg, bn = bw[i] / mb;
        x[i] = gn - bn;
        y[i] = gn + bn - 2.0 * rn;
      }
      const double sy = stddev_of(y, false);
      if (!(sy > kDegenerate)) continue;
      const double alpha = stddev_of(x, false) / sy;
      for (std::size_t i = 0; i < w; ++i) proj[i] = x[i] + alpha * y[i];
      const double mp = mean_of(proj);
      for (std::size_t i = 0; i < w; ++i) h[m + i] += proj[i] - mp;
      any = true;
    }
    if (!any) continue;
    write_run(out, run, filtfilt(filter, h));
  }
  return out;
}

FourierRate heart_rate(const SampledSeries& pulse, const CardioOptions& opt) {
  SpectralRateOptions so;
  so.window_s = opt.window_s;
  so.stride_s = opt.stride_s;
  so.prior = opt.prior;
  so.band_lo = opt.band_lo;
  so.band_hi = opt.band_hi;

  FourierRate out;
  out.estimates = spectral_rate(pulse, so);
  out.raw = make_series({}, 1.0 / opt.stride_s, Unit::bpm,
                        out.estimates.empty() ? pulse.start_time : out.estimates.front().time);
  for (const auto& e : out.estimates) {
    out.raw.values.push_back(e.rate);
    if (e.missing) out.raw.set_missing(out.raw.values.size() - 1);
    out.smoothed.confidence.push_back(e.posterior_peak);
    out.smoothed.low_confidence.push_back(e.low_confidence ? 1 : 0);
  }
  if (!out.raw.missing.empty()) out.raw.missing.resize(out.raw.values.size(), 0);
  KalmanParams kp = opt.kalman;
  kp.dt = opt.stride_s;
  out.smoothed.value = kalman_smooth(out.raw, kp);
  return out;
}

SampledSeries combine_hr(const SampledSeries& a, const SampledSeries& b) {
  if (a.size() != b.size() || std::abs(a.rate - b.rate) > 1e-9 * a.rate || std::abs(a.start_time - b.start_time) > 1e-9) {
    throw ContractError("combine_hr: series are not aligned");
  }
  SampledSeries out = make_series(std::vector<double>(a.size(), 0.0), a.rate, a.unit, a.start_time);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool ha = !a.is_missing(i), hb = !b.is_missing(i);
    if (ha && hb) {
      out.values[i] = 0.5 * (a.values[i] + b.values[i]);
    } else if (ha) {
      out.values[i] = a.values[i];
    } else if (hb) {
      out.values[i] = b.values[i];
    } else {
      out.set_missing(i);
    }
  }
  return out;
}

}  // namespace neovitals
