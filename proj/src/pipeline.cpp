#include "neovitals/pipeline.hpp"

#include <cmath>
#include <ostream>

#include <Eigen/Dense>

namespace neovitals {

std::size_t extract_directory(const std::filesystem::path& dir, const PipelineConfig& cfg, std::ostream& out) {
  const auto header = read_raw_header(dir);
  const auto count = raw_frame_count(dir);
  if (count == 0) throw ContractError("no frames");
  RoiGeometry roi = cfg.roi.value_or(read_raw_roi(dir).value_or(RoiGeometry{0, 0, header.width, header.height}));
  if (!roi.valid_for(header.width, header.height)) throw ContractError("roi does not fit the frames");
  for (std::size_t i = 0; i < count; ++i) {
    const auto frame = read_raw_frame(dir, header, i);
    out << to_json(extract_frame(frame, roi, cfg.extract)).dump() << '\n';
  }
  if (!out) throw IoError("failed writing frame summaries");
  return count;
}

std::string_view to_string(HrMethod m) {
  switch (m) {
    case HrMethod::chrom: return "chrom";
    case HrMethod::pos: return "pos";
    case HrMethod::combined: return "combined";
  }
  return "combined";
}

HrMethod hr_method_from_string(std::string_view s) {
  for (auto m : {HrMethod::chrom, HrMethod::pos, HrMethod::combined}) {
    if (to_string(m) == s) return m;
  }
  throw ContractError("unknown heart-rate method '" + std::string(s) + "'");
}

SampledSeries channel_series(const std::vector<FrameSummary>& frames, double rate, char channel) {
  if (frames.empty()) throw ContractError("no frames");
  double t0 = frames.front().timestamp, t1 = t0;
  for (const auto& f : frames) {
    t0 = std::min(t0, f.timestamp);
    t1 = std::max(t1, f.timestamp);
  }
  const auto n = static_cast<std::size_t>(std::lround((t1 - t0) * rate)) + 1;
  SampledSeries s = make_series(std::vector<double>(n, 0.0), rate, Unit::dimensionless, t0);
  s.missing.assign(n, 1);
  for (const auto& f : frames) {
    const std::optional<double>* v = nullptr;
    switch (channel) {
      case 'r': v = &f.mean_r; break;
      case 'g': v = &f.mean_g; break;
      case 'b': v = &f.mean_b; break;
      case 'i': v = &f.mean_ir; break;
      default: throw ContractError("unknown channel");
    }
    if (!*v) continue;
    const auto i = static_cast<std::size_t>(std::lround((f.timestamp - t0) * rate));
    s.values[i] = **v;
    s.missing[i] = 0;
  }
  return s;
}

namespace {

VitalSeries plain(SampledSeries s) {
  VitalSeries v;
  v.confidence.assign(s.size(), 0.0);
  v.low_confidence.assign(s.size(), 0);
  v.value = std::move(s);
  return v;
}

}  // namespace

std::vector<NamedVital> compute_vitals(const std::vector<FrameSummary>& frames, const PipelineConfig& cfg,
                                       const VitalsRequest& req) {
  if (frames.empty()) throw ContractError("no frames");
  std::vector<NamedVital> out;
  const double rate = cfg.frame_rate;

  if (req.vitals.contains(Vital::rr) || req.vitals.contains(Vital::tv)) {
    const auto q = quadrant_streams_from(frames, rate);
    const auto roi = frames.front().roi;
    const auto volume = volume_signal(q, roi, cfg.intrinsics, cfg.respiration, std::nullopt);
    if (req.vitals.contains(Vital::rr)) {
      const auto sig = respiratory_signal(q, cfg.respiration);
      auto fr = rate_by_fourier(sig.signal, cfg.respiration);
      out.push_back({"rr", std::move(fr.smoothed)});
      out.push_back({"rr_peaks", plain(rate_by_peaks(sig.signal, volume, cfg.respiration))});
    }
    if (req.vitals.contains(Vital::tv)) {
      auto tv = tidal_volume(volume, cfg.respiration);
      out.push_back({"tv", plain(std::move(tv.smoothed))});
    }
  }

  if (req.vitals.contains(Vital::hr)) {
    const auto rgb = rgb_series_from(frames, rate);
    std::optional<FourierRate> chrom, pos;
    const auto need = [&](HrMethod m) {
      for (auto r : req.hr_methods) {
        if (r == m || r == HrMethod::combined) return true;
      }
      return false;
    };
    if (need(HrMethod::chrom)) chrom = heart_rate(chrom_signal(rgb, cfg.cardio), cfg.cardio);
    if (need(HrMethod::pos)) pos = heart_rate(pos_signal(rgb, cfg.cardio), cfg.cardio);
    for (auto m : req.hr_methods) {
      const std::string name = "hr_" + std::string(to_string(m));
      if (m == HrMethod::chrom) out.push_back({name, chrom->smoothed});
      if (m == HrMethod::pos) out.push_back({name, pos->smoothed});
      if (m == HrMethod::combined) {
        VitalSeries v = chrom->smoothed;
        v.value = combine_hr(chrom->smoothed.value, pos->smoothed.value);
        for (std::size_t i = 0; i < v.confidence.size(); ++i) {
          v.confidence[i] = 0.5 * (chrom->smoothed.confidence[i] + pos->smoothed.confidence[i]);
          v.low_confidence[i] = chrom->smoothed.low_confidence[i] && pos->smoothed.low_confidence[i];
        }
        out.push_back({name, std::move(v)});
      }
    }
  }

  if (req.vitals.contains(Vital::spo2)) {
    const auto& ox = cfg.oximetry;
    for (auto m : req.spo2_methods) {
      Spo2Result r;
      const auto ir = [&] {
        auto s = channel_series(frames, rate, 'i');
        if (s.missing_count() == s.size()) throw ContractError("frames carry no IR channel");
        return s;
      };
      switch (m) {
        case Spo2Method::red_ir: r = spo2_ratio_method(channel_series(frames, rate, 'r'), ir(), ox.red_ir, ox); break;
        case Spo2Method::red_blue:
          r = spo2_ratio_method(channel_series(frames, rate, 'r'), channel_series(frames, rate, 'b'), ox.red_blue, ox);
          break;
        case Spo2Method::ycgcr: r = spo2_ycgcr(rgb_series_from(frames, rate), ox.ycgcr, ox); break;
        case Spo2Method::calibration_free: r = spo2_calibration_free(channel_series(frames, rate, 'r'), ir(), ox); break;
      }
      out.push_back({"spo2_" + std::string(to_string(m)), plain(std::move(r.spo2))});
      out.push_back({"ratio_" + std::string(to_string(m)), plain(std::move(r.ratio))});
    }
  }
  return out;
}

LoopsOutput compute_loops(const std::vector<FrameSummary>& frames, const PipelineConfig& cfg) {
  if (frames.empty()) throw ContractError("no frames");
  const auto q = quadrant_streams_from(frames, cfg.frame_rate);
  LoopsOutput out;
  out.volume = volume_signal(q, frames.front().roi, cfg.intrinsics, cfg.respiration, std::nullopt);
  out.breaths = flow_volume_loops(out.volume, cfg.respiration);
  return out;
}

CalibrationFit fit_calibration(const SampledSeries& ratio, const SampledSeries& reference_spo2) {
  const auto pairs = align(ratio, reference_spo2);
  if (pairs.size() < 2) throw ContractError("calibration needs at least 2 paired samples");
  const auto n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = -pairs.candidate[static_cast<std::size_t>(i)];
    y(i) = pairs.reference[static_cast<std::size_t>(i)];
  }
  const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(y);
  CalibrationFit fit;
  fit.calibration = {coef(0), coef(1)};
  fit.n = pairs.size();
  fit.rms_residual = std::sqrt((a * coef - y).squaredNorm() / static_cast<double>(n));
  if (!(fit.calibration.b > 0.0)) throw ContractError("fitted calibration slope b is not positive");
  return fit;
}

}  // namespace neovitals
