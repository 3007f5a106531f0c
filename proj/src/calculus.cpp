#include <algorithm>
#include <cmath>
#include <numeric>

#include "neovitals/dsp.hpp"

namespace neovitals {

namespace {

Unit derivative_unit(Unit u) {
  switch (u) {
    case Unit::ml: return Unit::ml_per_s;
    case Unit::dimensionless: return Unit::dimensionless;
    default: throw ContractError("differentiate: no derivative unit for " + std::string(to_string(u)));
  }
}

Unit integral_unit(Unit u) {
  switch (u) {
    case Unit::ml_per_s: return Unit::ml;
    case Unit::dimensionless: return Unit::dimensionless;
    default: throw ContractError("integrate: no integral unit for " + std::string(to_string(u)));
  }
}

}  // namespace

SampledSeries differentiate(const SampledSeries& s) {
  const std::size_t n = s.size();
  if (n < 3) throw ContractError("differentiate needs at least 3 samples");
  const auto x = interpolate_missing(s);
  SampledSeries out = s;
  out.unit = derivative_unit(s.unit);
  out.values[0] = (x[1] - x[0]) * s.rate;
  out.values[n - 1] = (x[n - 1] - x[n - 2]) * s.rate;
  // Fourth-order stencil in the interior: at 30 Hz the plain central
  // difference underestimates a 1.5 Hz flow by 1.6%.
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (i >= 2 && i + 2 < n) {
      out.values[i] = (x[i - 2] - 8.0 * x[i - 1] + 8.0 * x[i + 1] - x[i + 2]) * s.rate / 12.0;
    } else {
      out.values[i] = (x[i + 1] - x[i - 1]) * s.rate / 2.0;
    }
  }
  return out;
}

SampledSeries integrate(const SampledSeries& s) {
  const std::size_t n = s.size();
  if (n < 3) throw ContractError("integrate needs at least 3 samples");
  const auto x = interpolate_missing(s);
  SampledSeries out = s;
  out.unit = integral_unit(s.unit);
  out.values[0] = 0.0;
  for (std::size_t i = 1; i < n; ++i) out.values[i] = out.values[i - 1] + 0.5 * (x[i] + x[i - 1]) / s.rate;
  return out;
}

double mean_of(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stddev_of(std::span<const double> x, bool sample) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  const double m = mean_of(x);
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return std::sqrt(acc / static_cast<double>(sample ? n - 1 : n));
}

double median_of(std::vector<double> x) {
  if (x.empty()) return 0.0;
  const std::size_t mid = x.size() / 2;
  std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid), x.end());
  const double hi = x[mid];
  if (x.size() % 2 == 1) return hi;
  const double lo = *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace neovitals
