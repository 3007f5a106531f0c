#include "neovitals/config.hpp"

#include <fstream>
#include <set>

namespace neovitals {

using nlohmann::json;

namespace {

// Strict view over one JSON object: every key must be consumed by a reader.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ContractError("config: '" + name() + "' must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <typename T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ContractError("config: '" + child(key) + "' has the wrong type");
    }
  }

  template <typename T>
  void get_optional(const char* key, std::optional<T>& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    if (j_.at(key).is_null()) {
      out.reset();
      return;
    }
    T v{};
    try {
      v = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ContractError("config: '" + child(key) + "' has the wrong type");
    }
    out = v;
  }

  void get_pair(const char* key, double& a, double& b) {
    std::array<double, 2> v{a, b};
    get(key, v);
    a = v[0];
    b = v[1];
  }

  /// Nested object; returns nullopt when absent.
  std::optional<Obj> sub(const char* key) {
    if (!j_.contains(key)) return std::nullopt;
    seen_.insert(key);
    return Obj(j_.at(key), child(key));
  }

  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string name() const { return path_.empty() ? "<root>" : path_; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) throw ContractError("config: unknown key '" + child(it.key()) + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json prior_json(const GaussianPrior& p) { return {{"mean", p.mean}, {"std", p.std}}; }

void read_prior(Obj o, GaussianPrior& p) {
  o.get("mean", p.mean);
  o.get("std", p.std);
  o.finish();
}

json kalman_json(const KalmanParams& k) {
  return {{"q", {{k.q(0, 0), k.q(0, 1)}, {k.q(1, 0), k.q(1, 1)}}}, {"r_std", k.r_std}};
}

void read_kalman(Obj o, KalmanParams& k) {
  if (o.has("q")) {
    std::array<std::array<double, 2>, 2> q{};
    o.get("q", q);
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) k.q(r, c) = q[r][c];
    }
  }
  o.get("r_std", k.r_std);
  o.finish();
}

json roi_json(const RoiGeometry& r) { return json::array({r.x1, r.y1, r.x2, r.y2}); }

RoiGeometry roi_from(const json& j, const std::string& path) {
  try {
    const auto v = j.get<std::array<int, 4>>();
    return RoiGeometry{v[0], v[1], v[2], v[3]};
  } catch (const json::exception&) {
    throw ContractError("config: '" + path + "' must be [x1, y1, x2, y2]");
  }
}

json intrinsics_json(const CameraIntrinsics& k) { return {{"fx", k.fx}, {"fy", k.fy}, {"px", k.px}, {"py", k.py}}; }

void read_intrinsics(Obj o, CameraIntrinsics& k) {
  o.get("fx", k.fx);
  o.get("fy", k.fy);
  o.get("px", k.px);
  o.get("py", k.py);
  o.finish();
}

json extract_json(const ExtractOptions& e) {
  const auto& s = e.skin;
  return {{"skin",
           {{"y_min", s.y_min}, {"cb", {s.cb_min, s.cb_max}}, {"cr", {s.cr_min, s.cr_max}}, {"h", {s.h_min, s.h_max}},
            {"s", {s.s_min, s.s_max}}, {"v_min", s.v_min}}},
          {"depth", {{"tol_mm", e.depth.tol_mm}, {"bin_width_mm", e.depth.bin_width_mm}}}};
}

void read_extract(Obj o, ExtractOptions& e) {
  if (auto s = o.sub("skin")) {
    auto& t = e.skin;
    s->get("y_min", t.y_min);
    s->get_pair("cb", t.cb_min, t.cb_max);
    s->get_pair("cr", t.cr_min, t.cr_max);
    s->get_pair("h", t.h_min, t.h_max);
    s->get_pair("s", t.s_min, t.s_max);
    s->get("v_min", t.v_min);
    s->finish();
  }
  if (auto d = o.sub("depth")) {
    d->get("tol_mm", e.depth.tol_mm);
    d->get("bin_width_mm", e.depth.bin_width_mm);
    d->finish();
  }
  o.finish();
}

json respiration_json(const RespirationOptions& r) {
  json j;
  j["filter_order"] = r.filter_order;
  j["band"] = {r.band_lo, r.band_hi};
  j["rate_components"] = r.rate_components;
  j["volume_components"] = r.volume_components;
  j["ssa_window"] = r.ssa_window ? json(*r.ssa_window) : json(nullptr);
  j["valid_range_mm"] = {r.valid_min_mm, r.valid_max_mm};
  j["validity_window_s"] = r.validity_window_s;
  j["settle_s"] = r.settle_s;
  j["window_s"] = r.window_s;
  j["stride_s"] = r.stride_s;
  j["area_window_s"] = r.area_window_s;
  j["prior"] = prior_json(r.prior);
  j["adaptive_prior"] = r.adaptive_prior;
  j["adaptive"] = {{"min_history", r.adaptive.min_history},
                   {"history_length", r.adaptive.history_length},
                   {"min_std", r.adaptive.min_std}};
  j["rate_kalman"] = kalman_json(r.rate_kalman);
  j["tv_kalman"] = kalman_json(r.tv_kalman);
  const auto& b = r.breaths;
  j["breaths"] = {{"min_tv_ml", b.min_tv_ml},         {"cap_ml", b.cap_ml},
                  {"cap_factor", b.cap_factor},       {"band_sd", b.band_sd},
                  {"sd_floor_ml", b.sd_floor_ml},     {"min_prominence_ml", b.min_prominence_ml},
                  {"min_separation_s", b.min_separation_s}};
  const auto& l = r.loops;
  j["loops"] = {{"max_endpoint_drift_ml", l.max_endpoint_drift_ml},
                {"min_tv_ml", l.min_tv_ml},
                {"max_sd_from_median", l.max_sd_from_median},
                {"max_flow_nrms", l.max_flow_nrms},
                {"sd_floor_ml", l.sd_floor_ml}};
  return j;
}

void read_respiration(Obj o, RespirationOptions& r) {
  o.get("filter_order", r.filter_order);
  o.get_pair("band", r.band_lo, r.band_hi);
  o.get("rate_components", r.rate_components);
  o.get("volume_components", r.volume_components);
  o.get_optional("ssa_window", r.ssa_window);
  o.get_pair("valid_range_mm", r.valid_min_mm, r.valid_max_mm);
  o.get("validity_window_s", r.validity_window_s);
  o.get("settle_s", r.settle_s);
  o.get("window_s", r.window_s);
  o.get("stride_s", r.stride_s);
  o.get("area_window_s", r.area_window_s);
  if (auto p = o.sub("prior")) read_prior(*p, r.prior);
  o.get("adaptive_prior", r.adaptive_prior);
  if (auto a = o.sub("adaptive")) {
    a->get("min_history", r.adaptive.min_history);
    a->get("history_length", r.adaptive.history_length);
    a->get("min_std", r.adaptive.min_std);
    a->finish();
  }
  if (auto k = o.sub("rate_kalman")) read_kalman(*k, r.rate_kalman);
  if (auto k = o.sub("tv_kalman")) read_kalman(*k, r.tv_kalman);
  if (auto b = o.sub("breaths")) {
    auto& x = r.breaths;
    b->get("min_tv_ml", x.min_tv_ml);
    b->get("cap_ml", x.cap_ml);
    b->get("cap_factor", x.cap_factor);
    b->get("band_sd", x.band_sd);
    b->get("sd_floor_ml", x.sd_floor_ml);
    b->get("min_prominence_ml", x.min_prominence_ml);
    b->get("min_separation_s", x.min_separation_s);
    b->finish();
  }
  if (auto l = o.sub("loops")) {
    auto& x = r.loops;
    l->get("max_endpoint_drift_ml", x.max_endpoint_drift_ml);
    l->get("min_tv_ml", x.min_tv_ml);
    l->get("max_sd_from_median", x.max_sd_from_median);
    l->get("max_flow_nrms", x.max_flow_nrms);
    l->get("sd_floor_ml", x.sd_floor_ml);
    l->finish();
  }
  o.finish();
}

json cardio_json(const CardioOptions& c) {
  return {{"filter_order", c.filter_order}, {"band", {c.band_lo, c.band_hi}},
          {"normalization_s", c.normalization_s}, {"pos_window_s", c.pos_window_s},
          {"window_s", c.window_s}, {"stride_s", c.stride_s},
          {"prior", prior_json(c.prior)}, {"kalman", kalman_json(c.kalman)}};
}

void read_cardio(Obj o, CardioOptions& c) {
  o.get("filter_order", c.filter_order);
  o.get_pair("band", c.band_lo, c.band_hi);
  o.get("normalization_s", c.normalization_s);
  o.get("pos_window_s", c.pos_window_s);
  o.get("window_s", c.window_s);
  o.get("stride_s", c.stride_s);
  if (auto p = o.sub("prior")) read_prior(*p, c.prior);
  if (auto k = o.sub("kalman")) read_kalman(*k, c.kalman);
  o.finish();
}

json calibration_json(const OximetryCalibration& c) { return {{"a", c.a}, {"b", c.b}}; }

void read_calibration(Obj o, OximetryCalibration& c) {
  o.get("a", c.a);
  o.get("b", c.b);
  o.finish();
}

json oximetry_json(const OximetryOptions& x) {
  const auto& t = x.ycgcr_transform;
  const auto& e = x.extinction;
  return {{"filter_order", x.filter_order},
          {"band", {x.band_lo, x.band_hi}},
          {"segment_s", x.segment_s},
          {"prominence_factor", x.prominence_factor},
          {"min_peak_separation_s", x.min_peak_separation_s},
          {"max_missing_fraction", x.max_missing_fraction},
          {"clamp", {x.clamp_lo, x.clamp_hi}},
          {"kalman", kalman_json(x.kalman)},
          {"calibration",
           {{"red_ir", calibration_json(x.red_ir)},
            {"red_blue", calibration_json(x.red_blue)},
            {"ycgcr", calibration_json(x.ycgcr)}}},
          {"ycgcr_transform",
           {{"y", t.y}, {"cg", t.cg}, {"cr", t.cr}, {"offsets", {t.y_offset, t.cg_offset, t.cr_offset}}}},
          {"extinction",
           {{"hb_red", e.hb_red}, {"hbo2_red", e.hbo2_red}, {"hb_ir", e.hb_ir}, {"hbo2_ir", e.hbo2_ir}}}};
}

void read_oximetry(Obj o, OximetryOptions& x) {
  o.get("filter_order", x.filter_order);
  o.get_pair("band", x.band_lo, x.band_hi);
  o.get("segment_s", x.segment_s);
  o.get("prominence_factor", x.prominence_factor);
  o.get("min_peak_separation_s", x.min_peak_separation_s);
  o.get("max_missing_fraction", x.max_missing_fraction);
  o.get_pair("clamp", x.clamp_lo, x.clamp_hi);
  if (auto k = o.sub("kalman")) read_kalman(*k, x.kalman);
  if (auto c = o.sub("calibration")) {
    if (auto s = c->sub("red_ir")) read_calibration(*s, x.red_ir);
    if (auto s = c->sub("red_blue")) read_calibration(*s, x.red_blue);
    if (auto s = c->sub("ycgcr")) read_calibration(*s, x.ycgcr);
    c->finish();
  }
  if (auto t = o.sub("ycgcr_transform")) {
    auto& y = x.ycgcr_transform;
    t->get("y", y.y);
    t->get("cg", y.cg);
    t->get("cr", y.cr);
    std::array<double, 3> off{y.y_offset, y.cg_offset, y.cr_offset};
    t->get("offsets", off);
    y.y_offset = off[0];
    y.cg_offset = off[1];
    y.cr_offset = off[2];
    t->finish();
  }
  if (auto e = o.sub("extinction")) {
    auto& t = x.extinction;
    e->get("hb_red", t.hb_red);
    e->get("hbo2_red", t.hbo2_red);
    e->get("hb_ir", t.hb_ir);
    e->get("hbo2_ir", t.hbo2_ir);
    e->finish();
  }
  o.finish();
}

json schedule_json(const Schedule& s) {
  if (s.knots.size() == 1) return s.knots.front().second;
  json j = json::array();
  for (const auto& [t, v] : s.knots) j.push_back({t, v});
  return j;
}

void read_schedule(Obj& o, const char* key, Schedule& s) {
  if (!o.has(key)) return;
  const json& j = o.raw(key);
  if (j.is_number()) {
    s = Schedule::constant(j.get<double>());
    return;
  }
  try {
    s.knots.clear();
    for (const auto& k : j) s.knots.emplace_back(k.at(0).get<double>(), k.at(1).get<double>());
  } catch (const json::exception&) {
    throw ContractError("config: '" + o.child(key) + "' must be a number or a list of [time, value] knots");
  }
  if (s.knots.empty()) throw ContractError("config: '" + o.child(key) + "' has no knots");
}

std::vector<CpThreshold> thresholds_from(const json& j, const std::string& path) {
  std::vector<CpThreshold> out;
  if (!j.is_array()) throw ContractError("config: '" + path + "' must be a list");
  for (const auto& item : j) {
    Obj o(item, path + "[]");
    CpThreshold t;
    o.get("width", t.width);
    o.get("percent", t.percent);
    o.finish();
    out.push_back(t);
  }
  return out;
}

json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ContractError("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

std::vector<std::string> PipelineConfig::violations() const {
  std::vector<std::string> out;
  if (!(frame_rate > 0.0)) out.emplace_back("frame_rate must be > 0");
  if (!intrinsics.valid()) out.emplace_back("intrinsics must have positive focal lengths");
  for (const auto* k : {&respiration.rate_kalman, &respiration.tv_kalman, &cardio.kalman, &oximetry.kalman}) {
    for (auto& v : validate_kalman_params(*k)) out.push_back(v);
  }
  for (const auto* c : {&oximetry.red_ir, &oximetry.red_blue, &oximetry.ycgcr}) {
    if (!(c->b > 0.0)) out.emplace_back("calibration slope b must be > 0");
  }
  if (!(0.0 < respiration.band_lo && respiration.band_lo < respiration.band_hi))
    out.emplace_back("respiration band must satisfy 0 < lo < hi");
  if (!(0.0 < cardio.band_lo && cardio.band_lo < cardio.band_hi)) out.emplace_back("cardio band must satisfy 0 < lo < hi");
  if (!(0.0 < oximetry.band_lo && oximetry.band_lo < oximetry.band_hi))
    out.emplace_back("oximetry band must satisfy 0 < lo < hi");
  if (!(oximetry.clamp_lo < oximetry.clamp_hi)) out.emplace_back("oximetry clamp must satisfy lo < hi");
  for (const auto& [vital, list] : coverage) {
    for (const auto& t : list) {
      if (!(t.width >= 0.0)) out.emplace_back("coverage widths must be >= 0");
    }
  }
  return out;
}

json to_json(const PipelineConfig& c) {
  json j;
  j["frame_rate"] = c.frame_rate;
  j["roi"] = c.roi ? roi_json(*c.roi) : json(nullptr);
  j["intrinsics"] = intrinsics_json(c.intrinsics);
  j["extract"] = extract_json(c.extract);
  j["respiration"] = respiration_json(c.respiration);
  j["cardio"] = cardio_json(c.cardio);
  j["oximetry"] = oximetry_json(c.oximetry);
  json cov = json::object();
  for (const auto& [vital, list] : c.coverage) {
    json a = json::array();
    for (const auto& t : list) a.push_back({{"width", t.width}, {"percent", t.percent}});
    cov[std::string(to_string(vital))] = a;
  }
  j["coverage"] = cov;
  return j;
}

PipelineConfig pipeline_config_from_json(const json& j) {
  PipelineConfig c;
  Obj o(j, "");
  o.get("frame_rate", c.frame_rate);
  if (o.has("roi")) {
    const json& r = o.raw("roi");
    if (r.is_null()) {
      c.roi.reset();
    } else {
      c.roi = roi_from(r, "roi");
    }
  }
  if (auto s = o.sub("intrinsics")) read_intrinsics(*s, c.intrinsics);
  if (auto s = o.sub("extract")) read_extract(*s, c.extract);
  if (auto s = o.sub("respiration")) read_respiration(*s, c.respiration);
  if (auto s = o.sub("cardio")) read_cardio(*s, c.cardio);
  if (auto s = o.sub("oximetry")) read_oximetry(*s, c.oximetry);
  if (auto s = o.sub("coverage")) {
    for (auto v : {Vital::rr, Vital::tv, Vital::hr, Vital::spo2}) {
      const std::string key(to_string(v));
      if (s->has(key.c_str())) c.coverage[v] = thresholds_from(s->raw(key.c_str()), "coverage." + key);
    }
    s->finish();
  }
  o.finish();
  if (auto v = c.violations(); !v.empty()) throw ContractError("config: " + v.front());
  return c;
}

json to_json(const SynthScenario& s) {
  json j;
  j["duration_s"] = s.duration_s;
  j["frame_rate"] = s.frame_rate;
  j["adversarial"] = s.adversarial;
  j["roi"] = roi_json(s.roi);
  j["intrinsics"] = intrinsics_json(s.intrinsics);
  j["frame_size"] = {s.frame_width, s.frame_height};
  j["chest_depth_mm"] = s.chest_depth_mm;
  j["background_depth_mm"] = s.background_depth_mm;
  j["breathing_rate"] = schedule_json(s.breathing_rate);
  j["tidal_volume"] = schedule_json(s.tidal_volume);
  j["inhale_fraction"] = s.inhale_fraction;
  j["quadrant_weights"] = s.quadrant_weights;
  j["heart_rate"] = schedule_json(s.heart_rate);
  j["dc_rgb"] = s.dc_rgb;
  j["dc_ir"] = s.dc_ir;
  j["pulse_fraction_rgb"] = s.pulse_fraction_rgb;
  j["pulse_fraction_ir"] = s.pulse_fraction_ir;
  j["spo2"] = schedule_json(s.spo2);
  j["spo2_method"] = std::string(to_string(s.spo2_method));
  j["oximetry"] = oximetry_json(s.oximetry);
  j["noise"] = {{"rgb", s.noise_rgb},
                {"ir", s.noise_ir},
                {"depth_mm", s.noise_depth_mm},
                {"depth_fraction", s.noise_depth_fraction},
                {"pulse_snr_db", s.pulse_snr_db ? json(*s.pulse_snr_db) : json(nullptr)}};
  json arts = json::array();
  for (const auto& a : s.artifacts) {
    arts.push_back({{"kind", std::string(to_string(a.kind))},
                    {"time", a.time},
                    {"duration", a.duration},
                    {"quadrant", a.quadrant},
                    {"magnitude", a.magnitude},
                    {"frequency", a.frequency}});
  }
  j["artifacts"] = arts;
  return j;
}

SynthScenario scenario_from_json(const json& j) {
  SynthScenario s;
  Obj o(j, "");
  o.get("duration_s", s.duration_s);
  o.get("frame_rate", s.frame_rate);
  o.get("adversarial", s.adversarial);
  if (o.has("roi")) s.roi = roi_from(o.raw("roi"), "roi");
  if (auto k = o.sub("intrinsics")) read_intrinsics(*k, s.intrinsics);
  if (o.has("frame_size")) {
    std::array<int, 2> fs{s.frame_width, s.frame_height};
    o.get("frame_size", fs);
    s.frame_width = fs[0];
    s.frame_height = fs[1];
  }
  o.get("chest_depth_mm", s.chest_depth_mm);
  o.get("background_depth_mm", s.background_depth_mm);
  read_schedule(o, "breathing_rate", s.breathing_rate);
  read_schedule(o, "tidal_volume", s.tidal_volume);
  o.get("inhale_fraction", s.inhale_fraction);
  o.get("quadrant_weights", s.quadrant_weights);
  read_schedule(o, "heart_rate", s.heart_rate);
  o.get("dc_rgb", s.dc_rgb);
  o.get("dc_ir", s.dc_ir);
  o.get("pulse_fraction_rgb", s.pulse_fraction_rgb);
  o.get("pulse_fraction_ir", s.pulse_fraction_ir);
  read_schedule(o, "spo2", s.spo2);
  if (o.has("spo2_method")) {
    std::string m;
    o.get("spo2_method", m);
    s.spo2_method = spo2_method_from_string(m);
  }
  if (auto x = o.sub("oximetry")) read_oximetry(*x, s.oximetry);
  if (auto n = o.sub("noise")) {
    n->get("rgb", s.noise_rgb);
    n->get("ir", s.noise_ir);
    n->get("depth_mm", s.noise_depth_mm);
    n->get("depth_fraction", s.noise_depth_fraction);
    n->get_optional("pulse_snr_db", s.pulse_snr_db);
    n->finish();
  }
  if (o.has("artifacts")) {
    const json& arts = o.raw("artifacts");
    if (!arts.is_array()) throw ContractError("config: 'artifacts' must be a list");
    for (const auto& item : arts) {
      Obj a(item, "artifacts[]");
      Artifact art;
      std::string kind;
      a.get("kind", kind);
      art.kind = artifact_kind_from_string(kind);
      a.get("time", art.time);
      a.get("duration", art.duration);
      a.get("quadrant", art.quadrant);
      a.get("magnitude", art.magnitude);
      a.get("frequency", art.frequency);
      a.finish();
      s.artifacts.push_back(art);
    }
  }
  o.finish();
  if (auto v = s.violations(); !v.empty()) throw ContractError("scenario: " + v.front());
  return s;
}

PipelineConfig load_pipeline_config(const std::string& path) { return pipeline_config_from_json(read_file(path)); }

SynthScenario load_scenario(const std::string& path) { return scenario_from_json(read_file(path)); }

}  // namespace neovitals
