#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <json.hpp>

#include "neovitals/pipeline.hpp"

namespace fs = std::filesystem;
using namespace neovitals;
using nlohmann::json;

namespace {

constexpr int kExitContract = 2;
constexpr int kExitIo = 3;

PipelineConfig config_or_default(const std::string& path) {
  return path.empty() ? PipelineConfig{} : load_pipeline_config(path);
}

std::pair<double, double> parse_band(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw ContractError("--band expects lo,hi");
  try {
    const double lo = std::stod(s.substr(0, comma)), hi = std::stod(s.substr(comma + 1));
    if (!(lo > 0.0 && lo < hi)) throw ContractError("--band must satisfy 0 < lo < hi");
    return {lo, hi};
  } catch (const std::invalid_argument&) {
    throw ContractError("--band expects lo,hi");
  }
}

std::ofstream open_output(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  return out;
}

// --- import-apollo helpers ---------------------------------------------------

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

const std::map<std::string, std::vector<std::string>>& column_aliases() {
  static const std::map<std::string, std::vector<std::string>> m{
      {"time", {"time", "timestamp", "t", "seconds", "time_s"}},
      {"hr", {"hr", "heart_rate", "pulse_rate", "pr", "heartrate"}},
      {"rr", {"rr", "resp_rate", "respiratory_rate", "respiration_rate", "br"}},
      {"spo2", {"spo2", "sat", "oxygen_saturation", "sao2"}},
      {"tv", {"tv", "tidal_volume", "vt"}}};
  return m;
}

// Converts one probed table into 1 Hz reference series (linear interpolation).
json import_table(const fs::path& file, const fs::path& out_dir) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open '" + file.string() + "'");
  std::string line;
  if (!std::getline(in, line)) return nullptr;
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(lower(cell.substr(0, cell.find_last_not_of(" \r\t") + 1)));
  }
  std::map<std::string, int> cols;
  for (const auto& [key, aliases] : column_aliases()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (std::find(aliases.begin(), aliases.end(), header[c]) != aliases.end()) {
        cols[key] = static_cast<int>(c);
        break;
      }
    }
  }
  if (!cols.contains("time") || cols.size() < 2) return nullptr;

  std::map<std::string, std::vector<std::pair<double, double>>> data;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    const auto num = [&](int c) -> std::optional<double> {
      if (c >= static_cast<int>(cells.size())) return std::nullopt;
      try {
        const double v = std::stod(cells[c]);
        return std::isfinite(v) ? std::optional(v) : std::nullopt;
      } catch (const std::exception&) {
        return std::nullopt;
      }
    };
    const auto t = num(cols["time"]);
    if (!t) continue;
    for (const auto& [key, c] : cols) {
      if (key == "time") continue;
      if (auto v = num(c)) data[key].emplace_back(*t, *v);
    }
  }

  json found = json::object();
  for (auto& [key, pts] : data) {
    if (pts.size() < 2) continue;
    std::sort(pts.begin(), pts.end());
    const double t0 = std::ceil(pts.front().first), t1 = std::floor(pts.back().first);
    std::vector<double> values;
    std::size_t k = 0;
    for (double t = t0; t <= t1; t += 1.0) {
      while (k + 1 < pts.size() && pts[k + 1].first < t) ++k;
      const auto& a = pts[k];
      const auto& b = pts[std::min(k + 1, pts.size() - 1)];
      const double w = b.first > a.first ? (t - a.first) / (b.first - a.first) : 0.0;
      values.push_back(a.second + std::clamp(w, 0.0, 1.0) * (b.second - a.second));
    }
    const auto name = file.stem().string() + "_" + key + ".csv";
    write_series_csv(out_dir / name, make_series(std::move(values), 1.0, Unit::dimensionless, t0));
    found[key] = name;
  }
  return found.empty() ? json(nullptr) : found;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-contact neonatal vital signs from RGB-D frame summaries"};
  app.require_subcommand(1);

  std::string config_path, input, output, reference, band;
  std::uint64_t seed = 0;
  std::vector<std::string> methods, vitals;
  std::optional<double> window;
  bool raster = false;

  auto* extract = app.add_subcommand("extract", "raster frame directory -> FrameSummary NDJSON");
  auto* vitals_cmd = app.add_subcommand("vitals", "FrameSummary NDJSON -> per-vital CSV files");
  auto* loops = app.add_subcommand("loops", "FrameSummary NDJSON -> flow-volume loop JSON");
  auto* evaluate = app.add_subcommand("evaluate", "candidate vs reference series -> agreement report");
  auto* simulate = app.add_subcommand("simulate", "synthetic scenario -> FrameSummary NDJSON and labels");
  auto* calibrate = app.add_subcommand("calibrate", "fit SpO2 = a - b R against a reference");
  auto* import = app.add_subcommand("import-apollo", "probe and convert Apollo dataset tables");
  auto* defaults = app.add_subcommand("print-config", "print the default pipeline configuration");

  for (auto* c : {extract, vitals_cmd, loops, evaluate, simulate, calibrate, import}) {
    c->add_option("--config", config_path, "configuration file (JSON)");
    c->add_option("--input", input, "input path")->required();
    c->add_option("--output", output, "output path")->required();
  }
  // simulate takes its scenario through --config instead of --input.
  simulate->get_option("--input")->required(false);
  simulate->get_option("--config")->required();
  simulate->add_option("--seed", seed, "random seed");
  simulate->add_flag("--raster", raster, "also write raster frames to <output>/raw");
  vitals_cmd->add_option("--method", methods, "chrom|pos|combined and/or red_ir|red_blue|ycgcr|calfree");
  vitals_cmd->add_option("--vital", vitals, "rr|tv|hr|spo2 (repeatable; default all)");
  vitals_cmd->add_option("--band", band, "passband lo,hi per minute for the selected vitals");
  vitals_cmd->add_option("--window", window, "estimation window in seconds for the selected vitals");
  evaluate->add_option("--reference", reference, "reference series CSV")->required();
  evaluate->add_option("--vital", vitals, "rr|tv|hr|spo2 selects coverage thresholds")->expected(0, 1);
  calibrate->add_option("--reference", reference, "reference SpO2 CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitContract;
  }

  try {
    if (*defaults) {
      std::cout << to_json(PipelineConfig{}).dump(2) << '\n';
    } else if (*extract) {
      const auto cfg = config_or_default(config_path);
      auto out = open_output(output);
      const auto n = extract_directory(input, cfg, out);
      std::cerr << "extracted " << n << " frames\n";
    } else if (*vitals_cmd) {
      auto cfg = config_or_default(config_path);
      VitalsRequest req;
      if (!vitals.empty()) {
        req.vitals.clear();
        for (const auto& v : vitals) req.vitals.insert(vital_from_string(v));
      }
      if (!methods.empty()) {
        req.hr_methods.clear();
        req.spo2_methods.clear();
        for (const auto& m : methods) {
          if (m == "chrom" || m == "pos" || m == "combined") {
            req.hr_methods.push_back(hr_method_from_string(m));
          } else {
            req.spo2_methods.push_back(spo2_method_from_string(m));
          }
        }
        if (req.hr_methods.empty()) req.hr_methods = VitalsRequest{}.hr_methods;
        if (req.spo2_methods.empty()) req.spo2_methods = VitalsRequest{}.spo2_methods;
      }
      if (!band.empty()) {
        const auto [lo, hi] = parse_band(band);
        if (req.vitals.contains(Vital::rr) || req.vitals.contains(Vital::tv)) {
          cfg.respiration.band_lo = lo;
          cfg.respiration.band_hi = hi;
        }
        if (req.vitals.contains(Vital::hr)) {
          cfg.cardio.band_lo = lo;
          cfg.cardio.band_hi = hi;
        }
        if (req.vitals.contains(Vital::spo2)) {
          cfg.oximetry.band_lo = lo;
          cfg.oximetry.band_hi = hi;
        }
      }
      if (window) {
        if (!(*window > 0.0)) throw ContractError("--window must be > 0");
        if (req.vitals.contains(Vital::rr) || req.vitals.contains(Vital::tv)) cfg.respiration.window_s = *window;
        if (req.vitals.contains(Vital::hr)) cfg.cardio.window_s = *window;
        if (req.vitals.contains(Vital::spo2)) cfg.oximetry.segment_s = *window;
      }
      const auto frames = read_summaries(fs::path(input));
      const auto results = compute_vitals(frames, cfg, req);
      fs::create_directories(output);
      for (const auto& r : results) write_vital_csv(fs::path(output) / (r.name + ".csv"), r.series);
    } else if (*loops) {
      const auto cfg = config_or_default(config_path);
      const auto frames = read_summaries(fs::path(input));
      const auto res = compute_loops(frames, cfg);
      json arr = json::array();
      for (const auto& b : res.breaths) arr.push_back(to_json(b, res.volume.rate, res.volume.start_time));
      auto out = open_output(output);
      out << json{{"breaths", arr}}.dump(2) << '\n';
    } else if (*evaluate) {
      const auto cfg = config_or_default(config_path);
      const auto cand = read_series_csv(fs::path(input));
      const auto ref = read_series_csv(fs::path(reference));
      const auto pairs = align(cand, ref);
      std::vector<CpThreshold> thresholds;
      std::string vital_name;
      if (!vitals.empty()) {
        const auto v = vital_from_string(vitals.front());
        thresholds = cfg.coverage.at(v);
        vital_name = vitals.front();
      }
      const auto report = agreement(pairs, thresholds);
      auto j = to_json(report, &pairs);
      if (!vital_name.empty()) j["vital"] = vital_name;
      const fs::path out_path(output);
      auto out = open_output(out_path);
      out << j.dump(2) << '\n';
      write_bland_altman_csv(out_path.parent_path() / (out_path.stem().string() + "_bland_altman.csv"), report, pairs);
    } else if (*simulate) {
      const auto sc = load_scenario(config_path);
      const auto res = generate(sc, seed);
      const fs::path dir(output);
      fs::create_directories(dir / "labels");
      {
        auto out = open_output(dir / "frames.ndjson");
        write_summaries(out, res.frames);
      }
      const auto& lb = res.labels;
      write_series_csv(dir / "labels" / "rr.csv", lb.rr);
      write_series_csv(dir / "labels" / "tv.csv", lb.tv);
      write_series_csv(dir / "labels" / "hr.csv", lb.hr);
      write_series_csv(dir / "labels" / "spo2.csv", lb.spo2);
      write_series_csv(dir / "labels" / "ratio.csv", lb.ratio);
      for (int q = 0; q < 4; ++q) {
        write_series_csv(dir / "labels" / ("tv_q" + std::to_string(q) + ".csv"), lb.regional_tv[q]);
      }
      if (raster) {
        const auto raw = dir / "raw";
        write_raw_header(raw, {sc.frame_width, sc.frame_height, sc.frame_rate}, sc.roi);
        for (std::size_t i = 0; i < res.frames.size(); ++i) write_raw_frame(raw, render_frame(sc, res.frames[i], seed), i);
      }
    } else if (*calibrate) {
      const auto ratio = read_series_csv(fs::path(input));
      const auto ref = read_series_csv(fs::path(reference), Unit::percent);
      const auto fit = fit_calibration(ratio, ref);
      auto out = open_output(output);
      out << json{{"a", fit.calibration.a}, {"b", fit.calibration.b}, {"n", fit.n}, {"rms_residual", fit.rms_residual}}.dump(2)
          << '\n';
    } else if (*import) {
      if (!fs::is_directory(input)) throw IoError("'" + input + "' is not a directory");
      fs::create_directories(output);
      json manifest = json::object();
      std::vector<fs::path> files;
      for (const auto& e : fs::recursive_directory_iterator(input)) {
        if (e.is_regular_file() && lower(e.path().extension().string()) == ".csv") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        auto found = import_table(f, output);
        if (!found.is_null()) manifest[fs::relative(f, input).string()] = found;
      }
      if (manifest.empty()) throw ContractError("no recognizable Apollo tables (need a time column and a vital column)");
      write_json(fs::path(output) / "manifest.json", manifest);
    }
  } catch (const ContractError& e) {
    std::cerr << json{{"error", "contract_violation"}, {"message", e.what()}}.dump() << '\n';
    return kExitContract;
  } catch (const IoError& e) {
    std::cerr << json{{"error", "io_failure"}, {"message", e.what()}}.dump() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << json{{"error", "io_failure"}, {"message", e.what()}}.dump() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "contract_violation"}, {"message", e.what()}}.dump() << '\n';
    return kExitContract;
  }
  return 0;
}
