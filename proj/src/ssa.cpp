#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "neovitals/dsp.hpp"

namespace neovitals {

std::size_t default_ssa_window(std::size_t n, double rate) {
  const auto three_seconds = static_cast<std::size_t>(std::lround(3.0 * rate));
  return std::max<std::size_t>(2, std::min(n / 2, three_seconds));
}

// The trajectory matrix H has l rows and k = n - l + 1 columns, H(i, c) = x[i + c].
// Its left singular vectors are the eigenvectors of the l x l lag matrix H H^T,
// which is assembled in O(n l) with a running-sum update along each diagonal.
std::vector<double> ssa_reconstruct(std::span<const double> x, const SsaSpec& spec) {
  const std::size_t n = x.size();
  const std::size_t l = spec.window;
  if (l < 2 || n < l + 1) {
    throw ContractError("SSA needs 2 <= window and length >= window + 1 (window " + std::to_string(l) + ", length " +
                        std::to_string(n) + ")");
  }
  if (spec.components < 1 || spec.components > l) throw ContractError("SSA components must be in [1, window]");
  const std::size_t k = n - l + 1;

  Eigen::MatrixXd lag(l, l);
  for (std::size_t d = 0; d < l; ++d) {
    double acc = 0.0;
    for (std::size_t c = 0; c < k; ++c) acc += x[c] * x[c + d];
    lag(0, d) = acc;
    for (std::size_t i = 1; i + d < l; ++i) {
      acc += x[i - 1 + k] * x[i - 1 + d + k] - x[i - 1] * x[i - 1 + d];
      lag(i, i + d) = acc;
    }
  }
  lag = lag.selfadjointView<Eigen::Upper>();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lag);
  if (eig.info() != Eigen::Success) throw ContractError("SSA eigendecomposition failed");
  // Eigen sorts ascending; the leading triples are at the right.
  const Eigen::MatrixXd u = eig.eigenvectors().rightCols(static_cast<Eigen::Index>(spec.components));

  // Principal components: pc(j, c) = sum_i u(i, j) x[i + c].
  const auto r = static_cast<Eigen::Index>(spec.components);
  Eigen::MatrixXd pc = Eigen::MatrixXd::Zero(r, static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < l; ++i) {
    for (Eigen::Index j = 0; j < r; ++j) {
      const double w = u(static_cast<Eigen::Index>(i), j);
      double* row = &pc(j, 0);
      for (std::size_t c = 0; c < k; ++c) row[c * static_cast<std::size_t>(r)] += w * x[i + c];
    }
  }

  // Anti-diagonal averaging of U_r * PC.
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      double v = 0.0;
      for (Eigen::Index j = 0; j < r; ++j) v += u(static_cast<Eigen::Index>(i), j) * pc(j, static_cast<Eigen::Index>(c));
      out[i + c] += v;
    }
  }
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t count = std::min({t + 1, l, k, n - t});
    out[t] /= static_cast<double>(count);
  }
  return out;
}

SampledSeries ssa_denoise(const SampledSeries& s, const SsaSpec& spec) {
  SampledSeries out = s;
  out.values = ssa_reconstruct(interpolate_missing(s), spec);
  return out;
}

}  // namespace neovitals
