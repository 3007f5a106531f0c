#include "neovitals/frame.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace neovitals {

RasterFrame::RasterFrame(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, 0) {}

void RasterFrame::set_rgb(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const std::size_t i = index(x, y) * 3;
  rgb[i] = r;
  rgb[i + 1] = g;
  rgb[i + 2] = b;
}

std::vector<std::string> RasterFrame::violations() const {
  std::vector<std::string> out;
  if (width <= 0 || height <= 0) out.emplace_back("frame dimensions must be positive");
  if (rgb.size() != pixel_count() * 3) out.emplace_back("rgb plane size does not match dimensions");
  if (!ir.empty() && ir.size() != pixel_count()) out.emplace_back("ir plane size does not match dimensions");
  if (!depth.empty() && depth.size() != pixel_count()) out.emplace_back("depth plane size does not match dimensions");
  return out;
}

BinaryMask::BinaryMask(int width, int height, bool value)
    : width_(width), height_(height), bits_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), value ? 1 : 0) {}

bool BinaryMask::get_or_unset(int x, int y) const {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return false;
  return get(x, y);
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool is_skin_ycbcr(std::uint8_t r, std::uint8_t g, std::uint8_t b, const SkinThresholds& t) {
  const double y = 0.299 * r + 0.587 * g + 0.114 * b;
  const double cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
  const double cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
  return y >= t.y_min && cb >= t.cb_min && cb <= t.cb_max && cr >= t.cr_min && cr <= t.cr_max;
}

bool is_skin_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b, const SkinThresholds& t) {
  const double rf = r / 255.0, gf = g / 255.0, bf = b / 255.0;
  const double mx = std::max({rf, gf, bf});
  const double mn = std::min({rf, gf, bf});
  const double delta = mx - mn;
  const double v = mx;
  const double s = mx > 0.0 ? delta / mx : 0.0;
  double h = 0.0;
  if (delta > 0.0) {
    if (mx == rf) {
      h = 60.0 * std::fmod((gf - bf) / delta, 6.0);
    } else if (mx == gf) {
      h = 60.0 * ((bf - rf) / delta + 2.0);
    } else {
      h = 60.0 * ((rf - gf) / delta + 4.0);
    }
    if (h < 0.0) h += 360.0;
  }
  return h >= t.h_min && h <= t.h_max && s >= t.s_min && s <= t.s_max && v >= t.v_min;
}

BinaryMask skin_mask_colorspace(const RasterFrame& frame, SkinColorSpace space, const SkinThresholds& t) {
  if (auto v = frame.violations(); !v.empty()) throw ContractError("invalid frame: " + v.front());
  BinaryMask m(frame.width, frame.height);
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      const std::size_t i = frame.index(x, y) * 3;
      const auto r = frame.rgb[i], g = frame.rgb[i + 1], b = frame.rgb[i + 2];
      const bool skin = space == SkinColorSpace::YCbCr ? is_skin_ycbcr(r, g, b, t) : is_skin_hsv(r, g, b, t);
      if (skin) m.set(x, y);
    }
  }
  return m;
}

namespace {

BinaryMask erode(const BinaryMask& m, int lo, int hi) {
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      bool all = true;
      for (int dy = lo; dy <= hi && all; ++dy) {
        for (int dx = lo; dx <= hi && all; ++dx) all = m.get_or_unset(x + dx, y + dy);
      }
      if (all) out.set(x, y);
    }
  }
  return out;
}

// Dilation by the reflected element, so that erode followed by dilate is an opening.
BinaryMask dilate_reflected(const BinaryMask& m, int lo, int hi) {
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      bool any = false;
      for (int dy = lo; dy <= hi && !any; ++dy) {
        for (int dx = lo; dx <= hi && !any; ++dx) any = m.get_or_unset(x - dx, y - dy);
      }
      if (any) out.set(x, y);
    }
  }
  return out;
}

}  // namespace

BinaryMask morph_open(const BinaryMask& m, int k) {
  if (k < 1) throw ContractError("kernel size must be >= 1");
  const int lo = -(k / 2);
  const int hi = lo + k - 1;
  return dilate_reflected(erode(m, lo, hi), lo, hi);
}

BinaryMask median3(const BinaryMask& m) {
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      int votes = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) votes += m.get_or_unset(x + dx, y + dy) ? 1 : 0;
      }
      if (votes >= 5) out.set(x, y);
    }
  }
  return out;
}

BinaryMask refine_mask(std::span<const BinaryMask> masks) {
  if (masks.empty()) throw ContractError("refine_mask needs at least one mask");
  for (const auto& m : masks) {
    if (!m.same_shape(masks.front())) throw ContractError("refine_mask: mask dimensions differ");
  }
  BinaryMask combined = morph_open(masks.front(), 3);
  for (std::size_t i = 1; i < masks.size(); ++i) {
    const BinaryMask opened = morph_open(masks[i], 3);
    for (int y = 0; y < combined.height(); ++y) {
      for (int x = 0; x < combined.width(); ++x) {
        if (combined.get(x, y) && !opened.get(x, y)) combined.set(x, y, false);
      }
    }
  }
  return morph_open(median3(combined), 4);
}

std::optional<DepthInliers> depth_inliers(const RasterFrame& frame, const RoiGeometry& roi, const DepthInlierOptions& opt) {
  if (!frame.has_depth()) throw ContractError("depth_inliers: frame has no depth channel");
  if (!roi.valid_for(frame.width, frame.height)) throw ContractError("depth_inliers: ROI outside frame");

  std::map<long, std::size_t> histogram;
  for (int y = roi.y1; y < roi.y2; ++y) {
    for (int x = roi.x1; x < roi.x2; ++x) {
      const auto d = frame.depth[frame.index(x, y)];
      if (d == 0) continue;
      ++histogram[static_cast<long>(std::floor(d / opt.bin_width_mm))];
    }
  }
  if (histogram.empty()) return std::nullopt;

  // Ties go to the nearer bin.
  auto mode = histogram.begin();
  for (auto it = histogram.begin(); it != histogram.end(); ++it) {
    if (it->second > mode->second) mode = it;
  }
  DepthInliers out{BinaryMask(frame.width, frame.height), (static_cast<double>(mode->first) + 0.5) * opt.bin_width_mm};
  for (int y = roi.y1; y < roi.y2; ++y) {
    for (int x = roi.x1; x < roi.x2; ++x) {
      const auto d = frame.depth[frame.index(x, y)];
      if (d != 0 && std::abs(d - out.modal_depth_mm) <= opt.tol_mm) out.mask.set(x, y);
    }
  }
  return out;
}

FrameSummary summarize_frame(const RasterFrame& frame, const RoiGeometry& roi, const BinaryMask& skin,
                             const BinaryMask& depth_in) {
  if (!roi.valid_for(frame.width, frame.height)) throw ContractError("summarize_frame: ROI outside frame");
  if (skin.width() != frame.width || skin.height() != frame.height || depth_in.width() != frame.width ||
      depth_in.height() != frame.height) {
    throw ContractError("summarize_frame: mask dimensions do not match frame");
  }

  FrameSummary s;
  s.timestamp = frame.timestamp;
  s.roi = roi;

  double sum_r = 0.0, sum_g = 0.0, sum_b = 0.0, sum_ir = 0.0;
  std::size_t n_skin = 0;
  for (int y = roi.y1; y < roi.y2; ++y) {
    for (int x = roi.x1; x < roi.x2; ++x) {
      if (!skin.get(x, y)) continue;
      const std::size_t i = frame.index(x, y);
      sum_r += frame.rgb[i * 3];
      sum_g += frame.rgb[i * 3 + 1];
      sum_b += frame.rgb[i * 3 + 2];
      if (frame.has_ir()) sum_ir += frame.ir[i];
      ++n_skin;
    }
  }
  if (n_skin > 0) {
    const double n = static_cast<double>(n_skin);
    s.mean_r = sum_r / n;
    s.mean_g = sum_g / n;
    s.mean_b = sum_b / n;
    if (frame.has_ir()) s.mean_ir = sum_ir / n;
  }

  if (frame.has_depth()) {
    double total = 0.0;
    std::size_t total_n = 0;
    for (int q = 0; q < 4; ++q) {
      const RoiGeometry quad = roi.quadrant(q);
      double sum = 0.0;
      int n = 0;
      for (int y = quad.y1; y < quad.y2; ++y) {
        for (int x = quad.x1; x < quad.x2; ++x) {
          const auto d = frame.depth[frame.index(x, y)];
          if (!depth_in.get(x, y) || d == 0) continue;
          sum += d;
          ++n;
        }
      }
      s.quadrant_valid_count[q] = n;
      if (n > 0) s.quadrant_depth_mm[q] = sum / n;
      total += sum;
      total_n += static_cast<std::size_t>(n);
    }
    if (total_n > 0) s.mean_depth_mm = total / static_cast<double>(total_n);
  }
  return s;
}

FrameSummary extract_frame(const RasterFrame& frame, const RoiGeometry& roi, const ExtractOptions& opt) {
  const std::array<BinaryMask, 2> masks{skin_mask_colorspace(frame, SkinColorSpace::YCbCr, opt.skin),
                                        skin_mask_colorspace(frame, SkinColorSpace::HSV, opt.skin)};
  const BinaryMask skin = refine_mask(masks);
  BinaryMask depth_mask(frame.width, frame.height);
  if (frame.has_depth()) {
    if (auto inl = depth_inliers(frame, roi, opt.depth)) depth_mask = std::move(inl->mask);
  }
  return summarize_frame(frame, roi, skin, depth_mask);
}

WorldPoint project_to_world(double x, double y, double z_mm, const CameraIntrinsics& k) {
  if (!(z_mm > 0.0)) throw ContractError("project_to_world: depth must be > 0");
  if (!k.valid()) throw ContractError("project_to_world: focal lengths must be > 0");
  return {z_mm * (x - k.px) / k.fx, z_mm * (y - k.py) / k.fy, z_mm};
}

}  // namespace neovitals
