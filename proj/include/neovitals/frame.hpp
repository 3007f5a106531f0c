#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "neovitals/core.hpp"

namespace neovitals {

/// One RGB-D frame. `rgb` is interleaved 8-bit RGB; `ir` (8-bit scale) and
/// `depth` (mm, 0 = no infrared return) are optional and empty when absent.
struct RasterFrame {
  int width = 0;
  int height = 0;
  double timestamp = 0.0;
  std::vector<std::uint8_t> rgb;
  std::vector<std::uint8_t> ir;
  std::vector<std::uint16_t> depth;

  RasterFrame() = default;
  RasterFrame(int w, int h);

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x); }
  bool has_depth() const { return !depth.empty(); }
  bool has_ir() const { return !ir.empty(); }

  void set_rgb(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
  std::vector<std::string> violations() const;
};

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool value = false);

  int width() const { return width_; }
  int height() const { return height_; }
  bool get(int x, int y) const { return bits_[index(x, y)] != 0; }
  /// Out-of-frame pixels read as unset.
  bool get_or_unset(int x, int y) const;
  void set(int x, int y, bool v = true) { bits_[index(x, y)] = v ? 1 : 0; }
  std::size_t count() const;
  bool same_shape(const BinaryMask& o) const { return width_ == o.width_ && height_ == o.height_; }
  bool operator==(const BinaryMask&) const = default;

 private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x); }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

enum class SkinColorSpace { YCbCr, HSV };

struct SkinThresholds {
  // YCbCr (full-range BT.601, 0-255)
  double y_min = 16.0;
  double cb_min = 77.0, cb_max = 127.0;
  double cr_min = 133.0, cr_max = 173.0;
  // HSV (hue in degrees, saturation and value in [0, 1])
  double h_min = 0.0, h_max = 50.0;
  double s_min = 0.18, s_max = 0.68;
  double v_min = 0.35;
};

bool is_skin_ycbcr(std::uint8_t r, std::uint8_t g, std::uint8_t b, const SkinThresholds& t);
bool is_skin_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b, const SkinThresholds& t);

BinaryMask skin_mask_colorspace(const RasterFrame& frame, SkinColorSpace space, const SkinThresholds& t = {});

/// Binary opening with a k x k square. For even k the anchor sits at (k/2, k/2),
/// i.e. the window spans offsets [-k/2, k/2 - 1]. Pixels outside the frame are unset.
BinaryMask morph_open(const BinaryMask& m, int k);

/// 3 x 3 majority filter; outside pixels count as unset.
BinaryMask median3(const BinaryMask& m);

/// 3x3 opening of each mask, intersection, 3x3 median, then 4x4 opening.
BinaryMask refine_mask(std::span<const BinaryMask> masks);

struct DepthInlierOptions {
  double tol_mm = 25.0;
  double bin_width_mm = 5.0;
};

struct DepthInliers {
  BinaryMask mask;
  double modal_depth_mm = 0.0;  // centre of the most populated histogram bin
};

/// nullopt when the ROI has no nonzero depth pixel (frame is flagged missing).
std::optional<DepthInliers> depth_inliers(const RasterFrame& frame, const RoiGeometry& roi,
                                          const DepthInlierOptions& opt = {});

FrameSummary summarize_frame(const RasterFrame& frame, const RoiGeometry& roi, const BinaryMask& skin,
                             const BinaryMask& depth_in);

struct ExtractOptions {
  SkinThresholds skin;
  DepthInlierOptions depth;
};

/// Full per-frame stage: both skin masks, refinement, depth inliers, summary.
FrameSummary extract_frame(const RasterFrame& frame, const RoiGeometry& roi, const ExtractOptions& opt = {});

struct WorldPoint {
  double x = 0.0, y = 0.0, z = 0.0;  // mm
};

WorldPoint project_to_world(double x, double y, double z_mm, const CameraIntrinsics& k);

}  // namespace neovitals
