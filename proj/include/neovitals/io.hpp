#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "neovitals/evaluation.hpp"
#include "neovitals/frame.hpp"
#include "neovitals/respiration.hpp"

namespace neovitals {

// FrameSummary NDJSON: one object per line with fields timestamp, roi, q_depth,
// q_count, r, g, b, ir, depth. Absent optional values are omitted (null inside q_depth).
nlohmann::json to_json(const FrameSummary& f);
FrameSummary frame_summary_from_json(const nlohmann::json& j);
void write_summaries(std::ostream& out, const std::vector<FrameSummary>& frames);
std::vector<FrameSummary> read_summaries(std::istream& in);
std::vector<FrameSummary> read_summaries(const std::filesystem::path& path);

// Vital series CSV: time,value,confidence,flags. Flags are '|'-separated
// (missing, low_confidence); missing rows carry an empty value.
struct SeriesRow {
  double confidence = 0.0;
  bool low_confidence = false;
};
void write_series_csv(std::ostream& out, const SampledSeries& s, const std::vector<SeriesRow>& rows = {});
void write_series_csv(const std::filesystem::path& path, const SampledSeries& s, const std::vector<SeriesRow>& rows = {});
void write_vital_csv(const std::filesystem::path& path, const VitalSeries& v);
/// Reads a CSV with at least time,value columns. The rate comes from the time
/// column, which must be uniform.
SampledSeries read_series_csv(std::istream& in, Unit unit = Unit::dimensionless);
SampledSeries read_series_csv(const std::filesystem::path& path, Unit unit = Unit::dimensionless);

// Raw frame directory: header.txt ("width height rate"), optional roi.csv
// ("x1,y1,x2,y2"), and per frame NNNNNN.ppm (P6 RGB), NNNNNN.depth and
// NNNNNN.ir (16-bit little-endian planes, optional).
struct RawHeader {
  int width = 0;
  int height = 0;
  double rate = 0.0;
};
RawHeader read_raw_header(const std::filesystem::path& dir);
std::optional<RoiGeometry> read_raw_roi(const std::filesystem::path& dir);
std::size_t raw_frame_count(const std::filesystem::path& dir);
RasterFrame read_raw_frame(const std::filesystem::path& dir, const RawHeader& h, std::size_t index);
void write_raw_header(const std::filesystem::path& dir, const RawHeader& h, const std::optional<RoiGeometry>& roi);
void write_raw_frame(const std::filesystem::path& dir, const RasterFrame& f, std::size_t index);

nlohmann::json to_json(const BreathSegment& b, double rate, double start_time);
nlohmann::json to_json(const AgreementReport& r, const PairedSamples* pairs = nullptr);
void write_bland_altman_csv(const std::filesystem::path& path, const AgreementReport& r, const PairedSamples& pairs);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace neovitals
