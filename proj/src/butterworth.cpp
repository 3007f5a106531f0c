#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "neovitals/dsp.hpp"

namespace neovitals {

namespace {

using cd = std::complex<double>;

// Steady-state section states for a unit step, transposed direct form II.
std::pair<double, double> section_step_state(const Biquad& s) {
  const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
  const double z2 = s.b2 - s.a2 * gain;
  const double z1 = s.b1 - s.a1 * gain + z2;
  return {z1, z2};
}

}  // namespace

std::vector<std::string> BandpassSpec::violations() const {
  std::vector<std::string> out;
  if (order < 1) out.emplace_back("order must be >= 1");
  if (!(rate > 0.0)) out.emplace_back("rate must be > 0");
  if (!(lo > 0.0 && lo < hi && hi < rate / 2.0)) out.emplace_back("band must satisfy 0 < lo < hi < rate/2");
  return out;
}

BandpassSpec bandpass_per_min(int order, double lo_per_min, double hi_per_min, double rate) {
  return BandpassSpec{order, per_min_to_hz(lo_per_min), per_min_to_hz(hi_per_min), rate};
}

SosFilter design_butterworth_bandpass(const BandpassSpec& spec) {
  if (auto v = spec.violations(); !v.empty()) throw ContractError("invalid bandpass: " + v.front());

  const double fs = spec.rate;
  const int n = spec.order;
  // Pre-warped analog band edges (rad/s) for the bilinear transform.
  const double w1 = 2.0 * fs * std::tan(std::numbers::pi * spec.lo / fs);
  const double w2 = 2.0 * fs * std::tan(std::numbers::pi * spec.hi / fs);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;

  // Analog lowpass prototype poles in the upper half plane (conjugates implied),
  // plus the real pole when n is odd. Each bandpass section gets one pole pair.
  std::vector<std::pair<cd, cd>> pole_pairs;
  for (int k = 0; k < n; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + n + 1) / (2.0 * n);
    const cd p = std::polar(1.0, theta);
    if (p.imag() < -1e-12) continue;
    // Lowpass -> bandpass: s^2 - p*bw*s + w0^2 = 0.
    const cd b = p * bw;
    const cd disc = std::sqrt(b * b - 4.0 * w0sq);
    const cd r1 = (b + disc) / 2.0;
    const cd r2 = (b - disc) / 2.0;
    if (std::abs(p.imag()) <= 1e-12) {
      // Real prototype pole: the two roots are a conjugate pair or both real.
      pole_pairs.emplace_back(r1, r2);
    } else {
      pole_pairs.emplace_back(r1, std::conj(r1));
      pole_pairs.emplace_back(r2, std::conj(r2));
    }
  }

  std::vector<Biquad> sections;
  sections.reserve(pole_pairs.size());
  for (const auto& [sa, sb] : pole_pairs) {
    const cd za = (2.0 * fs + sa) / (2.0 * fs - sa);
    const cd zb = (2.0 * fs + sb) / (2.0 * fs - sb);
    // Each section carries one zero at z = 1 (analog s = 0) and one at z = -1 (analog infinity).
    sections.push_back(Biquad{1.0, 0.0, -1.0, -(za + zb).real(), (za * zb).real()});
  }

  // Unit gain at the digital image of the analog centre frequency.
  const double wc = 2.0 * std::atan(std::sqrt(w0sq) / (2.0 * fs));
  const cd zc = std::polar(1.0, wc);
  const cd zi = 1.0 / zc;
  cd h = 1.0;
  for (const auto& s : sections) {
    h *= (s.b0 + s.b1 * zi + s.b2 * zi * zi) / (1.0 + s.a1 * zi + s.a2 * zi * zi);
  }
  const double g = std::pow(1.0 / std::abs(h), 1.0 / static_cast<double>(sections.size()));
  for (auto& s : sections) {
    s.b0 *= g;
    s.b1 *= g;
    s.b2 *= g;
  }
  return SosFilter(std::move(sections));
}

std::vector<double> SosFilter::filter(std::span<const double> x, bool steady_state) const {
  std::vector<double> y(x.begin(), x.end());
  if (y.empty()) return y;
  double level = y.front();
  for (const auto& s : sections_) {
    double z1 = 0.0, z2 = 0.0;
    if (steady_state) {
      auto [u1, u2] = section_step_state(s);
      z1 = u1 * level;
      z2 = u2 * level;
      level *= (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    }
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

std::vector<double> filtfilt(const SosFilter& f, std::span<const double> x) {
  const std::size_t pad = f.pad_length();
  const std::size_t n = x.size();
  if (n <= pad) {
    throw ContractError("series too short for zero-phase filtering: need more than " + std::to_string(pad) +
                        " samples, got " + std::to_string(n));
  }
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  auto fwd = f.filter(ext, true);
  std::reverse(fwd.begin(), fwd.end());
  auto bwd = f.filter(fwd, true);
  std::reverse(bwd.begin(), bwd.end());
  return {bwd.begin() + static_cast<std::ptrdiff_t>(pad), bwd.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

SampledSeries bandpass_zero_phase(const SampledSeries& s, const BandpassSpec& spec) {
  if (std::abs(spec.rate - s.rate) > 1e-9 * s.rate) throw ContractError("bandpass rate does not match series rate");
  const auto filter = design_butterworth_bandpass(spec);
  SampledSeries out = s;
  out.values = filtfilt(filter, interpolate_missing(s));
  return out;
}

}  // namespace neovitals
