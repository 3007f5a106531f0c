#pragma once

// Reference implementations used as test oracles. They are deliberately naive
// and share no code with the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

// Squared magnitude of a prewarped bilinear Butterworth bandpass of prototype
// order n at frequency f (Hz). Closed form from the analog prototype.
inline double butterworth_bandpass_gain(double f, double lo, double hi, double fs, int n) {
  const double w = std::tan(std::numbers::pi * f / fs);
  const double wl = std::tan(std::numbers::pi * lo / fs);
  const double wh = std::tan(std::numbers::pi * hi / fs);
  const double e = (w * w - wl * wh) / (w * (wh - wl));
  return 1.0 / std::sqrt(1.0 + std::pow(e * e, n));
}

inline std::vector<double> sine(std::size_t n, double fs, double f, double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs + phase);
  return x;
}

// Amplitude of the best-fit sinusoid at frequency f over x[a, b).
inline double fitted_amplitude(const std::vector<double>& x, double fs, double f, std::size_t a, std::size_t b) {
  double s = 0.0, c = 0.0;
  for (std::size_t i = a; i < b; ++i) {
    const double ph = 2.0 * std::numbers::pi * f * static_cast<double>(i) / fs;
    s += x[i] * std::sin(ph);
    c += x[i] * std::cos(ph);
  }
  return 2.0 * std::hypot(s, c) / static_cast<double>(b - a);
}

struct Agreement {
  double mae, mse, bias, sd, loa_low, loa_high;
};

inline Agreement agreement(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  Agreement a{};
  for (std::size_t i = 0; i < x.size(); ++i) {
    a.mae += std::fabs(x[i] - y[i]);
    a.mse += (x[i] - y[i]) * (x[i] - y[i]);
    a.bias += x[i] - y[i];
  }
  a.mae /= n;
  a.mse /= n;
  a.bias /= n;
  for (std::size_t i = 0; i < x.size(); ++i) a.sd += (x[i] - y[i] - a.bias) * (x[i] - y[i] - a.bias);
  a.sd = std::sqrt(a.sd / (n - 1.0));
  a.loa_low = a.bias - 2.0 * a.sd;
  a.loa_high = a.bias + 2.0 * a.sd;
  return a;
}

// Constant-velocity Kalman filter written out element by element.
struct ScalarKalman {
  double q00, q01, q10, q11, r, dt;  // r is the observation variance
  double x0 = 0, x1 = 0, p00 = 0, p01 = 0, p10 = 0, p11 = 0;
  bool init = false;

  double step(double z) {
    if (!init) {
      x0 = z;
      x1 = 0.0;
      p00 = r;
      p01 = p10 = 0.0;
      p11 = r / 100.0;
      init = true;
      return x0;
    }
    predict();
    const double s = p00 + r;
    const double k0 = p00 / s, k1 = p10 / s;
    const double innov = z - x0;
    x0 += k0 * innov;
    x1 += k1 * innov;
    // Joseph form (I - K H) P (I - K H)^T + K R K^T with H = [1 0], so
    // I - K H = [[a00, 0], [a10, 1]].
    const double a00 = 1 - k0, a10 = -k1;
    const double m00 = a00 * p00, m01 = a00 * p01;
    const double m10 = a10 * p00 + p10, m11 = a10 * p01 + p11;
    const double f00 = m00 * a00 + k0 * k0 * r;
    const double f01 = m00 * a10 + m01 + k0 * k1 * r;
    const double f10 = m10 * a00 + k1 * k0 * r;
    const double f11 = m10 * a10 + m11 + k1 * k1 * r;
    p00 = f00;
    p01 = f01;
    p10 = f10;
    p11 = f11;
    return x0;
  }

  void predict() {
    const double nx0 = x0 + dt * x1;
    // F P F^T with F = [[1, dt], [0, 1]].
    const double a00 = p00 + dt * p10 + dt * (p01 + dt * p11);
    const double a01 = p01 + dt * p11;
    const double a10 = p10 + dt * p11;
    const double a11 = p11;
    x0 = nx0;
    p00 = a00 + q00;
    p01 = a01 + q01;
    p10 = a10 + q10;
    p11 = a11 + q11;
  }
};

// Opening as the union of every kernel placement that fits inside the mask
// (placements touching the outside of the frame do not fit).
inline std::vector<int> open_brute(const std::vector<int>& m, int w, int h, int k) {
  const int lo = -(k / 2), hi = lo + k - 1;
  std::vector<int> out(m.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool fits = true;
      for (int dy = lo; dy <= hi && fits; ++dy) {
        for (int dx = lo; dx <= hi && fits; ++dx) {
          const int xx = x + dx, yy = y + dy;
          fits = xx >= 0 && yy >= 0 && xx < w && yy < h && m[yy * w + xx];
        }
      }
      if (!fits) continue;
      for (int dy = lo; dy <= hi; ++dy) {
        for (int dx = lo; dx <= hi; ++dx) out[(y + dy) * w + (x + dx)] = 1;
      }
    }
  }
  return out;
}

// Prominence by walking left and right to the nearest higher sample.
inline double prominence(const std::vector<double>& x, std::size_t p) {
  double left_min = x[p], right_min = x[p];
  for (std::size_t i = p; i-- > 0;) {
    if (x[i] > x[p]) break;
    left_min = std::min(left_min, x[i]);
  }
  for (std::size_t i = p + 1; i < x.size(); ++i) {
    if (x[i] > x[p]) break;
    right_min = std::min(right_min, x[i]);
  }
  return x[p] - std::max(left_min, right_min);
}

// Two-sided exact Mann-Whitney p by enumerating every split of the pooled sample.
inline double mann_whitney_enumerate(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> all(a);
  all.insert(all.end(), b.begin(), b.end());
  const std::size_t n = all.size(), na = a.size();
  auto u_of = [&](const std::vector<int>& pick) {
    double u = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!pick[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (pick[j]) continue;
        u += all[i] > all[j] ? 1.0 : (all[i] == all[j] ? 0.5 : 0.0);
      }
    }
    return u;
  };
  std::vector<int> observed(n, 0);
  for (std::size_t i = 0; i < na; ++i) observed[i] = 1;
  const double mean = static_cast<double>(na * (n - na)) / 2.0;
  const double dev = std::fabs(u_of(observed) - mean);
  std::vector<int> pick(n, 0);
  std::fill(pick.end() - static_cast<std::ptrdiff_t>(na), pick.end(), 1);
  double hit = 0.0, total = 0.0;
  do {
    total += 1.0;
    if (std::fabs(u_of(pick) - mean) >= dev - 1e-9) hit += 1.0;
  } while (std::next_permutation(pick.begin(), pick.end()));
  return hit / total;
}

}  // namespace oracle
