#include "neovitals/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace neovitals {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return in;
}

std::string frame_name(std::size_t index, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu.%s", index, ext);
  return buf;
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

json to_json(const FrameSummary& f) {
  json j;
  j["timestamp"] = f.timestamp;
  j["roi"] = {f.roi.x1, f.roi.y1, f.roi.x2, f.roi.y2};
  json qd = json::array();
  for (const auto& d : f.quadrant_depth_mm) qd.push_back(d ? json(*d) : json(nullptr));
  j["q_depth"] = qd;
  j["q_count"] = f.quadrant_valid_count;
  if (f.mean_r) j["r"] = *f.mean_r;
  if (f.mean_g) j["g"] = *f.mean_g;
  if (f.mean_b) j["b"] = *f.mean_b;
  if (f.mean_ir) j["ir"] = *f.mean_ir;
  if (f.mean_depth_mm) j["depth"] = *f.mean_depth_mm;
  return j;
}

FrameSummary frame_summary_from_json(const json& j) {
  static const std::set<std::string> known{"timestamp", "roi", "q_depth", "q_count", "r", "g", "b", "ir", "depth"};
  if (!j.is_object()) throw ContractError("frame summary must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.contains(it.key())) throw ContractError("frame summary: unknown field '" + it.key() + "'");
  }
  FrameSummary f;
  try {
    f.timestamp = j.at("timestamp").get<double>();
    const auto r = j.at("roi").get<std::array<int, 4>>();
    f.roi = RoiGeometry{r[0], r[1], r[2], r[3]};
    const auto& qd = j.at("q_depth");
    if (!qd.is_array() || qd.size() != 4) throw ContractError("frame summary: q_depth must have 4 entries");
    for (int k = 0; k < 4; ++k) {
      if (!qd[k].is_null()) f.quadrant_depth_mm[k] = qd[k].get<double>();
    }
    f.quadrant_valid_count = j.at("q_count").get<std::array<int, 4>>();
    const auto opt = [&](const char* key, std::optional<double>& out) {
      if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<double>();
    };
    opt("r", f.mean_r);
    opt("g", f.mean_g);
    opt("b", f.mean_b);
    opt("ir", f.mean_ir);
    opt("depth", f.mean_depth_mm);
  } catch (const json::exception& e) {
    throw ContractError(std::string("frame summary: ") + e.what());
  }
  if (auto v = validate_frame_summary(f); !v.empty()) throw ContractError("frame summary: " + v.front());
  return f;
}

void write_summaries(std::ostream& out, const std::vector<FrameSummary>& frames) {
  for (const auto& f : frames) out << to_json(f).dump() << '\n';
  if (!out) throw IoError("failed writing frame summaries");
}

std::vector<FrameSummary> read_summaries(std::istream& in) {
  std::vector<FrameSummary> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw ContractError("frame summaries: line " + std::to_string(lineno) + " is not valid JSON");
    }
    out.push_back(frame_summary_from_json(j));
  }
  if (in.bad()) throw IoError("failed reading frame summaries");
  return out;
}

std::vector<FrameSummary> read_summaries(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_summaries(in);
}

void write_series_csv(std::ostream& out, const SampledSeries& s, const std::vector<SeriesRow>& rows) {
  out << "time,value,confidence,flags\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::string flags;
    const auto add = [&](const char* f) {
      if (!flags.empty()) flags += '|';
      flags += f;
    };
    if (s.is_missing(i)) add("missing");
    if (i < rows.size() && rows[i].low_confidence) add("low_confidence");
    out << fmt(s.time_at(i)) << ',' << (s.is_missing(i) ? "" : fmt(s.values[i])) << ','
        << (i < rows.size() ? fmt(rows[i].confidence) : "") << ',' << flags << '\n';
  }
  if (!out) throw IoError("failed writing series CSV");
}

void write_series_csv(const std::filesystem::path& path, const SampledSeries& s, const std::vector<SeriesRow>& rows) {
  auto out = open_out(path);
  write_series_csv(out, s, rows);
}

void write_vital_csv(const std::filesystem::path& path, const VitalSeries& v) {
  std::vector<SeriesRow> rows(v.value.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i < v.confidence.size()) rows[i].confidence = v.confidence[i];
    if (i < v.low_confidence.size()) rows[i].low_confidence = v.low_confidence[i] != 0;
  }
  write_series_csv(path, v.value, rows);
}

SampledSeries read_series_csv(std::istream& in, Unit unit) {
  std::string line;
  if (!std::getline(in, line)) throw ContractError("series CSV is empty");
  const auto header = split(trim(line), ',');
  int t_col = -1, v_col = -1, f_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto h = trim(header[c]);
    if (h == "time") t_col = static_cast<int>(c);
    if (h == "value") v_col = static_cast<int>(c);
    if (h == "flags") f_col = static_cast<int>(c);
  }
  if (t_col < 0 || v_col < 0) throw ContractError("series CSV needs 'time' and 'value' columns");

  std::vector<double> times, values;
  std::vector<std::uint8_t> missing;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    const auto cell = [&](int c) { return c >= 0 && static_cast<std::size_t>(c) < cells.size() ? trim(cells[c]) : std::string(); };
    try {
      times.push_back(std::stod(cell(t_col)));
    } catch (const std::exception&) {
      throw ContractError("series CSV line " + std::to_string(lineno) + ": bad time");
    }
    const auto v = cell(v_col);
    bool miss = cell(f_col).find("missing") != std::string::npos || v.empty();
    double value = 0.0;
    if (!miss) {
      try {
        value = std::stod(v);
      } catch (const std::exception&) {
        throw ContractError("series CSV line " + std::to_string(lineno) + ": bad value");
      }
      if (!std::isfinite(value)) miss = true;
    }
    values.push_back(miss ? 0.0 : value);
    missing.push_back(miss ? 1 : 0);
  }
  if (times.empty()) throw ContractError("series CSV has no rows");
  double rate = 1.0;
  if (times.size() >= 2) {
    const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    if (!(dt > 0.0)) throw ContractError("series CSV times must increase");
    for (std::size_t i = 1; i < times.size(); ++i) {
      if (std::abs(times[i] - times[i - 1] - dt) > 1e-6 * std::max(1.0, dt) + 1e-9) {
        throw ContractError("series CSV times must be uniformly spaced");
      }
    }
    rate = 1.0 / dt;
  }
  SampledSeries s = make_series(std::move(values), rate, unit, times.front());
  if (std::any_of(missing.begin(), missing.end(), [](auto m) { return m != 0; })) s.missing = std::move(missing);
  return s;
}

SampledSeries read_series_csv(const std::filesystem::path& path, Unit unit) {
  auto in = open_in(path);
  return read_series_csv(in, unit);
}

RawHeader read_raw_header(const std::filesystem::path& dir) {
  auto in = open_in(dir / "header.txt");
  RawHeader h;
  if (!(in >> h.width >> h.height >> h.rate)) throw ContractError("raw header must read 'width height rate'");
  if (h.width <= 0 || h.height <= 0 || !(h.rate > 0.0)) throw ContractError("raw header values must be positive");
  return h;
}

std::optional<RoiGeometry> read_raw_roi(const std::filesystem::path& dir) {
  const auto path = dir / "roi.csv";
  if (!std::filesystem::exists(path)) return std::nullopt;
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  const auto cells = split(trim(line), ',');
  if (cells.size() != 4) throw ContractError("roi.csv must hold x1,y1,x2,y2");
  try {
    return RoiGeometry{std::stoi(cells[0]), std::stoi(cells[1]), std::stoi(cells[2]), std::stoi(cells[3])};
  } catch (const std::exception&) {
    throw ContractError("roi.csv must hold integers");
  }
}

std::size_t raw_frame_count(const std::filesystem::path& dir) {
  std::size_t n = 0;
  while (std::filesystem::exists(dir / frame_name(n, "ppm"))) ++n;
  return n;
}

namespace {

void read_plane(const std::filesystem::path& path, std::size_t count, std::vector<std::uint16_t>& out) {
  auto in = open_in(path, true);
  std::vector<unsigned char> buf(count * 2);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw ContractError("'" + path.string() + "' is truncated");
  out.resize(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = static_cast<std::uint16_t>(buf[2 * i] | (buf[2 * i + 1] << 8));
}

void write_plane(const std::filesystem::path& path, const std::vector<std::uint16_t>& v) {
  auto out = open_out(path, true);
  std::vector<unsigned char> buf(v.size() * 2);
  for (std::size_t i = 0; i < v.size(); ++i) {
    buf[2 * i] = static_cast<unsigned char>(v[i] & 0xff);
    buf[2 * i + 1] = static_cast<unsigned char>(v[i] >> 8);
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

RasterFrame read_raw_frame(const std::filesystem::path& dir, const RawHeader& h, std::size_t index) {
  RasterFrame f(h.width, h.height);
  f.timestamp = static_cast<double>(index) / h.rate;
  {
    auto in = open_in(dir / frame_name(index, "ppm"), true);
    std::string magic;
    int w = 0, ht = 0, maxval = 0;
    in >> magic >> w >> ht >> maxval;
    in.get();
    if (magic != "P6" || maxval != 255) throw ContractError("frame " + std::to_string(index) + ": expected 8-bit P6");
    if (w != h.width || ht != h.height) throw ContractError("frame " + std::to_string(index) + ": size differs from header");
    in.read(reinterpret_cast<char*>(f.rgb.data()), static_cast<std::streamsize>(f.rgb.size()));
    if (in.gcount() != static_cast<std::streamsize>(f.rgb.size())) throw ContractError("frame " + std::to_string(index) + ": truncated");
  }
  const auto depth_path = dir / frame_name(index, "depth");
  if (std::filesystem::exists(depth_path)) read_plane(depth_path, f.pixel_count(), f.depth);
  const auto ir_path = dir / frame_name(index, "ir");
  if (std::filesystem::exists(ir_path)) {
    std::vector<std::uint16_t> ir;
    read_plane(ir_path, f.pixel_count(), ir);
    f.ir.resize(ir.size());
    for (std::size_t i = 0; i < ir.size(); ++i) f.ir[i] = static_cast<std::uint8_t>(std::min<std::uint16_t>(ir[i], 255));
  }
  return f;
}

void write_raw_header(const std::filesystem::path& dir, const RawHeader& h, const std::optional<RoiGeometry>& roi) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "header.txt");
    out << h.width << ' ' << h.height << ' ' << fmt(h.rate) << '\n';
  }
  if (roi) {
    auto out = open_out(dir / "roi.csv");
    out << roi->x1 << ',' << roi->y1 << ',' << roi->x2 << ',' << roi->y2 << '\n';
  }
}

void write_raw_frame(const std::filesystem::path& dir, const RasterFrame& f, std::size_t index) {
  {
    auto out = open_out(dir / frame_name(index, "ppm"), true);
    out << "P6\n" << f.width << ' ' << f.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(f.rgb.data()), static_cast<std::streamsize>(f.rgb.size()));
    if (!out) throw IoError("failed writing frame " + std::to_string(index));
  }
  if (f.has_depth()) write_plane(dir / frame_name(index, "depth"), f.depth);
  if (f.has_ir()) write_plane(dir / frame_name(index, "ir"), std::vector<std::uint16_t>(f.ir.begin(), f.ir.end()));
}

json to_json(const BreathSegment& b, double rate, double start_time) {
  json ex = json::array();
  for (auto e : b.exclusions) ex.push_back(std::string(to_string(e)));
  json loop = json::array();
  for (const auto& p : b.loop) loop.push_back({p.volume, p.flow});
  return {{"start_time", start_time + static_cast<double>(b.start) / rate},
          {"end_time", start_time + static_cast<double>(b.end) / rate},
          {"tidal_volume_ml", b.tidal_volume},
          {"endpoint_drift_ml", b.endpoint_drift},
          {"flow_nrms", b.flow_nrms},
          {"accepted", b.accepted()},
          {"exclusions", ex},
          {"loop", loop}};
}

json to_json(const AgreementReport& r, const PairedSamples* pairs) {
  json cp = json::object();
  for (const auto& [t, p] : r.cp) cp[t.label()] = p;
  json j{{"n", r.n},       {"mae", r.mae},         {"mse", r.mse},           {"bias", r.bias},
         {"sd_diff", r.sd_diff}, {"loa_low", r.loa_low}, {"loa_high", r.loa_high}, {"cp", cp}};
  if (pairs != nullptr) j["dropped"] = pairs->dropped;
  return j;
}

void write_bland_altman_csv(const std::filesystem::path& path, const AgreementReport& r, const PairedSamples& pairs) {
  auto out = open_out(path);
  out << "time,candidate,reference,mean,diff\n";
  for (std::size_t i = 0; i < r.bland_altman.size(); ++i) {
    out << fmt(pairs.time[i]) << ',' << fmt(pairs.candidate[i]) << ',' << fmt(pairs.reference[i]) << ','
        << fmt(r.bland_altman[i].mean) << ',' << fmt(r.bland_altman[i].diff) << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_json(const std::filesystem::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace neovitals
