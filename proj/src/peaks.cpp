#include <algorithm>
#include <cmath>
#include <numeric>

#include "neovitals/dsp.hpp"

namespace neovitals {

namespace {

// Local maxima; a flat top counts once, at its middle sample.
std::vector<std::size_t> local_maxima(std::span<const double> x) {
  std::vector<std::size_t> out;
  const std::size_t n = x.size();
  std::size_t i = 1;
  while (i + 1 < n) {
    if (x[i - 1] < x[i]) {
      std::size_t ahead = i + 1;
      while (ahead + 1 < n && x[ahead] == x[i]) ++ahead;
      if (x[ahead] < x[i]) {
        out.push_back((i + ahead - 1) / 2);
        i = ahead;
        continue;
      }
    }
    ++i;
  }
  return out;
}

}  // namespace

std::vector<double> peak_prominences(std::span<const double> x, std::span<const std::size_t> peaks) {
  std::vector<double> out;
  out.reserve(peaks.size());
  const std::size_t n = x.size();
  for (std::size_t p : peaks) {
    const double h = x[p];
    double left_min = h;
    for (std::size_t i = p; i-- > 0;) {
      if (x[i] > h) break;
      left_min = std::min(left_min, x[i]);
    }
    double right_min = h;
    for (std::size_t i = p + 1; i < n; ++i) {
      if (x[i] > h) break;
      right_min = std::min(right_min, x[i]);
    }
    out.push_back(h - std::max(left_min, right_min));
  }
  return out;
}

PeakSet detect_peaks(std::span<const double> x, double min_prominence, std::size_t min_separation) {
  PeakSet result;
  auto candidates = local_maxima(x);
  const auto prom = peak_prominences(x, candidates);

  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (prom[i] > min_prominence) kept.push_back(candidates[i]);
  }

  // Enforce separation, highest peaks first.
  if (min_separation > 1 && kept.size() > 1) {
    std::vector<std::size_t> order(kept.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[kept[a]] > x[kept[b]]; });
    std::vector<bool> removed(kept.size(), false);
    for (std::size_t idx : order) {
      if (removed[idx]) continue;
      for (std::size_t j = idx; j-- > 0;) {
        if (kept[idx] - kept[j] >= min_separation) break;
        removed[j] = true;
      }
      for (std::size_t j = idx + 1; j < kept.size(); ++j) {
        if (kept[j] - kept[idx] >= min_separation) break;
        removed[j] = true;
      }
    }
    std::vector<std::size_t> spaced;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (!removed[i]) spaced.push_back(kept[i]);
    }
    kept = std::move(spaced);
  }

  result.peaks = kept;
  for (std::size_t i = 0; i + 1 < kept.size(); ++i) {
    const auto first = x.begin() + static_cast<std::ptrdiff_t>(kept[i]);
    const auto last = x.begin() + static_cast<std::ptrdiff_t>(kept[i + 1]) + 1;
    result.valleys.push_back(static_cast<std::size_t>(std::min_element(first, last) - x.begin()));
  }
  return result;
}

PeakSet detect_peaks(const SampledSeries& s, double min_prominence, double min_separation_s) {
  const auto filled = s.missing.empty() ? s.values : interpolate_missing(s);
  const auto sep = static_cast<std::size_t>(std::max(1.0, std::round(min_separation_s * s.rate)));
  PeakSet raw = detect_peaks(filled, min_prominence, sep);
  if (s.missing.empty()) return raw;

  // Drop peaks that landed on interpolated samples, then rebuild the valleys.
  std::vector<std::size_t> peaks;
  for (auto p : raw.peaks) {
    if (!s.is_missing(p)) peaks.push_back(p);
  }
  PeakSet out;
  out.peaks = peaks;
  for (std::size_t i = 0; i + 1 < peaks.size(); ++i) {
    const auto first = filled.begin() + static_cast<std::ptrdiff_t>(peaks[i]);
    const auto last = filled.begin() + static_cast<std::ptrdiff_t>(peaks[i + 1]) + 1;
    out.valleys.push_back(static_cast<std::size_t>(std::min_element(first, last) - filled.begin()));
  }
  return out;
}

}  // namespace neovitals
