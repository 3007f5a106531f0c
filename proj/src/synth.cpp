#include "neovitals/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace neovitals {

double Schedule::at(double t) const {
  if (knots.empty()) throw ContractError("schedule has no knots");
  if (t <= knots.front().first) return knots.front().second;
  if (t >= knots.back().first) return knots.back().second;
  auto hi = std::upper_bound(knots.begin(), knots.end(), t, [](double v, const auto& k) { return v < k.first; });
  auto lo = hi - 1;
  const double span = hi->first - lo->first;
  if (span <= 0.0) return hi->second;
  return lo->second + (hi->second - lo->second) * (t - lo->first) / span;
}

double Schedule::min() const {
  double m = knots.at(0).second;
  for (const auto& k : knots) m = std::min(m, k.second);
  return m;
}

double Schedule::max() const {
  double m = knots.at(0).second;
  for (const auto& k : knots) m = std::max(m, k.second);
  return m;
}

std::string_view to_string(ArtifactKind k) {
  switch (k) {
    case ArtifactKind::occlusion: return "occlusion";
    case ArtifactKind::motion_step: return "motion_step";
    case ArtifactKind::illumination_flicker: return "illumination_flicker";
  }
  return "occlusion";
}

ArtifactKind artifact_kind_from_string(std::string_view s) {
  for (auto k : {ArtifactKind::occlusion, ArtifactKind::motion_step, ArtifactKind::illumination_flicker}) {
    if (to_string(k) == s) return k;
  }
  throw ContractError("unknown artifact kind '" + std::string(s) + "'");
}

std::vector<std::string> SynthScenario::violations() const {
  std::vector<std::string> out;
  if (!(duration_s > 0.0)) out.emplace_back("duration must be > 0");
  if (!(frame_rate > 0.0)) out.emplace_back("frame rate must be > 0");
  if (!roi.valid_for(frame_width, frame_height)) out.emplace_back("roi must lie inside the frame");
  if (!intrinsics.valid()) out.emplace_back("camera intrinsics must have positive focal lengths");
  if (!(chest_depth_mm > 0.0) || !(background_depth_mm > 0.0)) out.emplace_back("depths must be > 0");
  if (!(inhale_fraction > 0.0 && inhale_fraction < 1.0)) out.emplace_back("inhale fraction must lie in (0, 1)");

  const std::pair<const char*, const Schedule*> schedules[] = {
      {"breathing rate", &breathing_rate}, {"tidal volume", &tidal_volume}, {"heart rate", &heart_rate}, {"spo2", &spo2}};
  for (const auto& [name, s] : schedules) {
    if (s->knots.empty()) {
      out.push_back(std::string(name) + " schedule has no knots");
      continue;
    }
    if (!std::is_sorted(s->knots.begin(), s->knots.end(), [](const auto& a, const auto& b) { return a.first < b.first; })) {
      out.push_back(std::string(name) + " knots must be sorted by time");
    }
    if (!(s->min() > 0.0)) out.push_back(std::string(name) + " must be > 0");
  }
  if (!out.empty()) return out;

  if (!adversarial) {
    if (breathing_rate.min() < 15.0 || breathing_rate.max() > 150.0) out.emplace_back("breathing rate outside 15-150/min");
    if (heart_rate.min() < 90.0 || heart_rate.max() > 270.0) out.emplace_back("heart rate outside 90-270/min");
  }
  if (spo2.max() > 100.0) out.emplace_back("spo2 target above 100%");
  for (double w : quadrant_weights) {
    if (!(w >= 0.0)) out.emplace_back("quadrant weights must be >= 0");
  }
  if (!(quadrant_weights[0] + quadrant_weights[1] + quadrant_weights[2] + quadrant_weights[3] > 0.0)) {
    out.emplace_back("at least one quadrant weight must be > 0");
  }
  for (double v : dc_rgb) {
    if (!(v > 0.0)) out.emplace_back("channel DC levels must be > 0");
  }
  if (!(dc_ir > 0.0)) out.emplace_back("IR DC level must be > 0");
  for (double v : pulse_fraction_rgb) {
    if (!(v >= 0.0)) out.emplace_back("pulse fractions must be >= 0");
  }
  if (!(pulse_fraction_ir >= 0.0)) out.emplace_back("pulse fractions must be >= 0");
  for (double v : noise_rgb) {
    if (!(v >= 0.0)) out.emplace_back("noise sigma must be >= 0");
  }
  if (!(noise_ir >= 0.0) || !(noise_depth_mm >= 0.0) || !(noise_depth_fraction >= 0.0)) {
    out.emplace_back("noise sigma must be >= 0");
  }
  for (const auto& a : artifacts) {
    if (a.quadrant < -1 || a.quadrant > 3) out.emplace_back("artifact quadrant must be -1..3");
    if (!(a.duration >= 0.0)) out.emplace_back("artifact duration must be >= 0");
    if (a.kind == ArtifactKind::illumination_flicker && !(a.magnitude > -1.0 && a.magnitude < 1.0)) {
      out.emplace_back("flicker depth must lie in (-1, 1)");
    }
  }
  return out;
}

double SynthScenario::roi_area_mm2(std::optional<int> quadrant) const {
  const RoiGeometry r = quadrant ? roi.quadrant(*quadrant) : roi;
  const auto c1 = project_to_world(r.x1, r.y1, chest_depth_mm, intrinsics);
  const auto c2 = project_to_world(r.x2, r.y2, chest_depth_mm, intrinsics);
  return (c2.x - c1.x) * (c2.y - c1.y);
}

double programmed_ratio(double spo2, Spo2Method method, const OximetryOptions& opt) {
  if (method == Spo2Method::calibration_free) {
    const auto& t = opt.extinction;
    if (!t.configured()) throw ContractError("calibration-free synthesis needs a configured extinction table");
    const double s = spo2 / 100.0;
    return (t.hb_red - s * (t.hb_red - t.hbo2_red)) / (t.hb_ir + s * (t.hbo2_ir - t.hb_ir));
  }
  const auto& cal = opt.calibration(method);
  if (!(cal.b > 0.0)) throw ContractError("calibration slope b must be > 0");
  return (cal.a - spo2) / cal.b;
}

std::array<double, 3> pulse_fractions_for_ratio(double ratio, const SynthScenario& sc) {
  auto f = sc.pulse_fraction_rgb;
  switch (sc.spo2_method) {
    case Spo2Method::red_ir:
    case Spo2Method::calibration_free: f[0] = ratio * sc.pulse_fraction_ir; break;
    case Spo2Method::red_blue: f[0] = ratio * f[2]; break;
    case Spo2Method::ycgcr: {
      // Solve for the red pulse amplitude so that Cg and Cr pulse in phase with
      // (AC_cg / DC_cg) / (AC_cr / DC_cr) = ratio.
      const auto& t = sc.oximetry.ycgcr_transform;
      const auto& dc = sc.dc_rgb;
      const double dc_cg = t.cg_offset + t.cg[0] * dc[0] + t.cg[1] * dc[1] + t.cg[2] * dc[2];
      const double dc_cr = t.cr_offset + t.cr[0] * dc[0] + t.cr[1] * dc[1] + t.cr[2] * dc[2];
      const double c1 = t.cg[1] * f[1] * dc[1] + t.cg[2] * f[2] * dc[2];
      const double c2 = t.cr[1] * f[1] * dc[1] + t.cr[2] * f[2] * dc[2];
      const double k = ratio * dc_cg / dc_cr;
      const double den = t.cg[0] - k * t.cr[0];
      const double p_r = std::abs(den) > 1e-12 ? (k * c2 - c1) / den : -1.0;
      if (!(p_r > 0.0)) throw ContractError("YCgCr ratio not reachable with the configured pulse fractions");
      f[0] = p_r / dc[0];
      break;
    }
  }
  return f;
}

double breath_waveform(double phase, double inhale_fraction) {
  const double p = phase - std::floor(phase);
  if (p < inhale_fraction) return 0.5 * (1.0 - std::cos(std::numbers::pi * p / inhale_fraction));
  return 0.5 * (1.0 + std::cos(std::numbers::pi * (p - inhale_fraction) / (1.0 - inhale_fraction)));
}

namespace {

bool active(const Artifact& a, double t, double end) {
  const double stop = a.duration > 0.0 ? a.time + a.duration : end;
  return t >= a.time && t < stop;
}

}  // namespace

SynthOutput generate(const SynthScenario& sc, std::uint64_t seed) {
  if (auto v = sc.violations(); !v.empty()) throw ContractError("invalid scenario: " + v.front());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const auto n = static_cast<std::size_t>(std::llround(sc.duration_s * sc.frame_rate));
  const double dt = 1.0 / sc.frame_rate;
  const auto& w = sc.quadrant_weights;
  const double w_mean = (w[0] + w[1] + w[2] + w[3]) / 4.0;
  const double area = sc.roi_area_mm2();
  std::array<int, 4> counts{};
  for (int q = 0; q < 4; ++q) {
    const auto r = sc.roi.quadrant(q);
    counts[q] = r.width() * r.height();
  }

  // Peak-to-peak chest displacement (mm) for tidal volume v (ml), full-ROI box volume.
  const auto displacement = [&](double tv) { return tv * 1000.0 / (area * w_mean); };

  // Per-channel noise, optionally derived from the pulsatile SNR at the first sample.
  std::array<double, 3> sigma_rgb = sc.noise_rgb;
  double sigma_ir = sc.noise_ir;
  if (sc.pulse_snr_db) {
    const double scale = std::pow(10.0, -*sc.pulse_snr_db / 20.0) / std::sqrt(2.0);
    const auto f0 = pulse_fractions_for_ratio(programmed_ratio(sc.spo2.at(0.0), sc.spo2_method, sc.oximetry), sc);
    for (int c = 0; c < 3; ++c) sigma_rgb[c] = scale * f0[c] * sc.dc_rgb[c];
    sigma_ir = scale * sc.pulse_fraction_ir * sc.dc_ir;
  }

  SynthOutput out;
  out.frames.reserve(n);
  double breath_phase = 0.0, pulse_phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    FrameSummary f;
    f.timestamp = t;
    f.roi = sc.roi;

    const double d = displacement(sc.tidal_volume.at(t));
    const double v = breath_waveform(breath_phase, sc.inhale_fraction);
    const double depth_sigma = sc.noise_depth_mm + sc.noise_depth_fraction * d;
    std::array<double, 4> z{};
    for (int q = 0; q < 4; ++q) z[q] = sc.chest_depth_mm - w[q] * d * v + depth_sigma * gauss(rng);

    const double ratio = programmed_ratio(sc.spo2.at(t), sc.spo2_method, sc.oximetry);
    const auto frac = pulse_fractions_for_ratio(ratio, sc);
    const double pulse = std::sin(2.0 * std::numbers::pi * pulse_phase);
    std::array<double, 3> rgb{};
    for (int c = 0; c < 3; ++c) rgb[c] = sc.dc_rgb[c] * (1.0 + frac[c] * pulse) + sigma_rgb[c] * gauss(rng);
    double ir = sc.dc_ir * (1.0 + sc.pulse_fraction_ir * pulse) + sigma_ir * gauss(rng);

    std::array<bool, 4> depth_present{true, true, true, true};
    bool colour_present = true;
    for (const auto& a : sc.artifacts) {
      if (!active(a, t, sc.duration_s)) continue;
      switch (a.kind) {
        case ArtifactKind::occlusion:
          if (a.quadrant < 0) {
            depth_present.fill(false);
            colour_present = false;
          } else {
            depth_present[a.quadrant] = false;
          }
          break;
        case ArtifactKind::motion_step:
          for (int q = 0; q < 4; ++q) {
            if (a.quadrant < 0 || a.quadrant == q) z[q] += a.magnitude;
          }
          break;
        case ArtifactKind::illumination_flicker: {
          const double g = 1.0 + a.magnitude * std::sin(2.0 * std::numbers::pi * a.frequency * (t - a.time));
          for (double& c : rgb) c *= g;
          ir *= g;
          break;
        }
      }
    }

    double zsum = 0.0;
    int zc = 0;
    for (int q = 0; q < 4; ++q) {
      if (!depth_present[q]) continue;
      f.quadrant_depth_mm[q] = z[q];
      f.quadrant_valid_count[q] = counts[q];
      zsum += z[q] * counts[q];
      zc += counts[q];
    }
    if (zc > 0) f.mean_depth_mm = zsum / zc;
    if (colour_present) {
      f.mean_r = std::max(rgb[0], 1e-6);
      f.mean_g = std::max(rgb[1], 1e-6);
      f.mean_b = std::max(rgb[2], 1e-6);
      f.mean_ir = std::max(ir, 1e-6);
    }
    out.frames.push_back(f);

    breath_phase += sc.breathing_rate.at(t) / 60.0 * dt;
    pulse_phase += sc.heart_rate.at(t) / 60.0 * dt;
    breath_phase -= std::floor(breath_phase);
    pulse_phase -= std::floor(pulse_phase);
  }

  const auto label_count = static_cast<std::size_t>(std::floor(sc.duration_s));
  auto& lb = out.labels;
  lb.rr = make_series(std::vector<double>(label_count), 1.0, Unit::breaths_per_min);
  lb.tv = make_series(std::vector<double>(label_count), 1.0, Unit::ml);
  lb.hr = make_series(std::vector<double>(label_count), 1.0, Unit::bpm);
  lb.spo2 = make_series(std::vector<double>(label_count), 1.0, Unit::percent);
  lb.ratio = make_series(std::vector<double>(label_count), 1.0, Unit::dimensionless);
  for (auto& r : lb.regional_tv) r = make_series(std::vector<double>(label_count), 1.0, Unit::ml);
  std::array<double, 4> q_area{};
  for (int q = 0; q < 4; ++q) q_area[q] = sc.roi_area_mm2(q);
  for (std::size_t j = 0; j < label_count; ++j) {
    const auto t = static_cast<double>(j);
    lb.rr.values[j] = sc.breathing_rate.at(t);
    lb.tv.values[j] = sc.tidal_volume.at(t);
    lb.hr.values[j] = sc.heart_rate.at(t);
    lb.spo2.values[j] = sc.spo2.at(t);
    lb.ratio.values[j] = programmed_ratio(lb.spo2.values[j], sc.spo2_method, sc.oximetry);
    const double d = displacement(lb.tv.values[j]);
    for (int q = 0; q < 4; ++q) lb.regional_tv[q].values[j] = w[q] * d * q_area[q] / 1000.0;
  }
  return out;
}

RasterFrame render_frame(const SynthScenario& sc, const FrameSummary& s, std::uint64_t seed) {
  RasterFrame f(sc.frame_width, sc.frame_height);
  f.timestamp = s.timestamp;
  f.ir.assign(f.pixel_count(), 20);
  f.depth.assign(f.pixel_count(), static_cast<std::uint16_t>(std::lround(sc.background_depth_mm)));
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) f.set_rgb(x, y, 40, 60, 90);
  }
  // Per-pixel dither keeps the 8-bit / 1 mm quantised means unbiased.
  std::mt19937_64 rng(seed ^ (static_cast<std::uint64_t>(std::llround(s.timestamp * 1e6)) * 0x9E3779B97F4A7C15ULL));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto q8 = [&](double v) { return static_cast<std::uint8_t>(std::clamp(std::floor(v + u(rng)), 0.0, 255.0)); };
  const auto q16 = [&](double v) { return static_cast<std::uint16_t>(std::clamp(std::floor(v + u(rng)), 0.0, 65535.0)); };

  const bool colour = s.mean_r && s.mean_g && s.mean_b;
  for (int q = 0; q < 4; ++q) {
    const auto r = s.roi.quadrant(q);
    for (int y = r.y1; y < r.y2; ++y) {
      for (int x = r.x1; x < r.x2; ++x) {
        const auto idx = f.index(x, y);
        if (colour) f.set_rgb(x, y, q8(*s.mean_r), q8(*s.mean_g), q8(*s.mean_b));
        if (s.mean_ir) f.ir[idx] = q8(*s.mean_ir);
        f.depth[idx] = s.quadrant_depth_mm[q] ? q16(*s.quadrant_depth_mm[q]) : 0;
      }
    }
  }
  return f;
}

}  // namespace neovitals
