#include <cmath>

#include "neovitals/dsp.hpp"

namespace neovitals {

Eigen::Matrix2d kalman_initial_covariance(const KalmanParams& params) {
  const double r2 = params.r_std * params.r_std;
  Eigen::Matrix2d p = Eigen::Matrix2d::Zero();
  p(0, 0) = r2;
  p(1, 1) = r2 / 100.0;
  return p;
}

std::optional<double> kalman_step(KalmanState& state, std::optional<double> observation, const KalmanParams& params) {
  if (!state.initialised) {
    if (!observation) return std::nullopt;
    state.x << *observation, 0.0;
    state.p = kalman_initial_covariance(params);
    state.initialised = true;
    return state.x(0);
  }

  Eigen::Matrix2d f;
  f << 1.0, params.dt, 0.0, 1.0;
  state.x = f * state.x;
  state.p = f * state.p * f.transpose() + params.q;

  if (observation) {
    const double r = params.r_std * params.r_std;
    const double innovation = *observation - state.x(0);
    const double s = state.p(0, 0) + r;
    const Eigen::Vector2d gain = state.p.col(0) / s;
    state.x += gain * innovation;
    // Joseph form keeps P symmetric positive semidefinite.
    Eigen::Matrix2d ikh = Eigen::Matrix2d::Identity();
    ikh.col(0) -= gain;
    state.p = ikh * state.p * ikh.transpose() + r * gain * gain.transpose();
  }
  return state.x(0);
}

SampledSeries kalman_smooth(const SampledSeries& s, const KalmanParams& params) {
  if (auto v = validate_kalman_params(params); !v.empty()) throw ContractError("invalid Kalman parameters: " + v.front());
  SampledSeries out = s;
  out.missing.clear();
  KalmanState state;
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::optional<double> obs;
    if (!s.is_missing(i) && std::isfinite(s.values[i])) obs = s.values[i];
    const auto level = kalman_step(state, obs, params);
    if (level) {
      out.values[i] = *level;
    } else {
      out.values[i] = 0.0;
      out.set_missing(i);
    }
  }
  return out;
}

}  // namespace neovitals
