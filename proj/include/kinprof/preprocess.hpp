#pragma once

// Per-segment temporal smoothing of positions: a forward constant-velocity
// Kalman filter or a Savitzky-Golay filter. Smoothing never crosses gaps.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kinprof/data_model.hpp"

namespace kinprof {

enum class SmoothingMethod { none, kalman, savgol };

inline const char* to_string(SmoothingMethod m) {
  switch (m) {
    case SmoothingMethod::none: return "none";
    case SmoothingMethod::kalman: return "kalman";
    case SmoothingMethod::savgol: return "savgol";
  }
  return "?";
}

inline SmoothingMethod parse_smoothing_method(const std::string& name) {
  if (name == "none") return SmoothingMethod::none;
  if (name == "kalman") return SmoothingMethod::kalman;
  if (name == "savgol" || name == "savitzky_golay") return SmoothingMethod::savgol;
  throw ConfigError("unknown smoothing method '" + name + "'");
}

struct KalmanConfig {
  double process_accel_sigma = 2.0;  // m/s^2
  double measurement_sigma_m = 0.5;
  double initial_velocity_sigma = 10.0;  // m/s
};

struct SavgolConfig {
  int window = 9;
  int poly_order = 2;
};

struct SmoothingConfig {
  SmoothingMethod method = SmoothingMethod::kalman;
  KalmanConfig kalman;
  SavgolConfig savgol;

  void validate() const {
    if (!(kalman.process_accel_sigma > 0.0) || !(kalman.measurement_sigma_m > 0.0) ||
        !(kalman.initial_velocity_sigma > 0.0)) {
      throw ConfigError("Kalman sigmas must be positive");
    }
    if (savgol.window < 1 || savgol.window % 2 == 0) {
      throw ConfigError("Savitzky-Golay window must be odd and positive, got " + std::to_string(savgol.window));
    }
    if (savgol.poly_order < 0 || savgol.poly_order >= savgol.window) {
      throw ConfigError("Savitzky-Golay poly_order must be in [0, window)");
    }
  }
};

/// Centre-point least-squares weights for a window of 2h+1 samples.
inline std::vector<double> savgol_coefficients(int window, int poly_order) {
  SmoothingConfig cfg;
  cfg.savgol = {window, poly_order};
  cfg.validate();
  const int h = window / 2;
  Eigen::MatrixXd design(window, poly_order + 1);
  for (int i = 0; i < window; ++i) {
    double v = 1.0;
    for (int j = 0; j <= poly_order; ++j) {
      design(i, j) = v;
      v *= static_cast<double>(i - h);
    }
  }
  // Row 0 of the pseudo-inverse evaluates the fitted polynomial at offset 0.
  const Eigen::MatrixXd pinv = design.completeOrthogonalDecomposition().pseudoInverse();
  std::vector<double> coeffs(static_cast<std::size_t>(window));
  for (int i = 0; i < window; ++i) coeffs[static_cast<std::size_t>(i)] = pinv(0, i);
  return coeffs;
}

inline bool savgol_applicable(const Segment& seg, const SavgolConfig& cfg) {
  return seg.size() >= static_cast<std::size_t>(cfg.window);
}

/// Savitzky-Golay smoothing with mirror padding (edge sample not repeated).
/// Segments shorter than the window pass through unchanged.
inline Segment savgol_smooth(const Segment& seg, const SavgolConfig& cfg) {
  if (!savgol_applicable(seg, cfg) || cfg.window == 1) return seg;
  const auto coeffs = savgol_coefficients(cfg.window, cfg.poly_order);
  const auto n = static_cast<std::ptrdiff_t>(seg.size());
  const std::ptrdiff_t h = cfg.window / 2;
  auto mirrored = [&](std::ptrdiff_t i) -> const Vec2& {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
    return seg.samples[static_cast<std::size_t>(i)].position;
  };
  Segment out = seg;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    Vec2 acc;
    for (std::ptrdiff_t j = -h; j <= h; ++j) {
      acc = acc + coeffs[static_cast<std::size_t>(j + h)] * mirrored(i + j);
    }
    out.samples[static_cast<std::size_t>(i)].position = acc;
  }
  return out;
}

struct KalmanTrace {
  Segment filtered;
  std::vector<Vec2> innovations;  // one per sample after the first
  std::vector<Vec2> innovation_sigma;
};

/// Forward Kalman filter on state (x, y, vx, vy) with a constant-velocity
/// transition and continuous white-acceleration process noise.
inline KalmanTrace kalman_trace(const Segment& seg, const KalmanConfig& cfg, const FrameClock& clock) {
  using Mat4 = Eigen::Matrix4d;
  using Vec4 = Eigen::Vector4d;
  KalmanTrace trace{seg, {}, {}};
  if (seg.size() < 2) return trace;

  const double dt = clock.frame_period_s();
  const double q = cfg.process_accel_sigma * cfg.process_accel_sigma;
  const double r = cfg.measurement_sigma_m * cfg.measurement_sigma_m;

  Mat4 F = Mat4::Identity();
  F(0, 2) = dt;
  F(1, 3) = dt;
  Mat4 Q = Mat4::Zero();
  for (int a = 0; a < 2; ++a) {
    Q(a, a) = q * dt * dt * dt / 3.0;
    Q(a, a + 2) = Q(a + 2, a) = q * dt * dt / 2.0;
    Q(a + 2, a + 2) = q * dt;
  }
  Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
  H(0, 0) = 1.0;
  H(1, 1) = 1.0;
  const Eigen::Matrix2d R = r * Eigen::Matrix2d::Identity();

  const Vec2 p0 = seg.samples.front().position;
  Vec4 x(p0.x, p0.y, 0.0, 0.0);
  Mat4 P = Mat4::Zero();
  P(0, 0) = P(1, 1) = r;
  P(2, 2) = P(3, 3) = cfg.initial_velocity_sigma * cfg.initial_velocity_sigma;

  for (std::size_t k = 1; k < seg.size(); ++k) {
    x = F * x;
    P = F * P * F.transpose() + Q;
    const Vec2 z = seg.samples[k].position;
    const Eigen::Vector2d innov = Eigen::Vector2d(z.x, z.y) - H * x;
    const Eigen::Matrix2d S = H * P * H.transpose() + R;
    const Eigen::Matrix<double, 4, 2> K = P * H.transpose() * S.inverse();
    x += K * innov;
    const Mat4 IKH = Mat4::Identity() - K * H;
    P = IKH * P * IKH.transpose() + K * R * K.transpose();  // Joseph form
    if (!x.allFinite() || !P.allFinite()) {
      throw InternalError("Kalman filter diverged at frame " + std::to_string(seg.samples[k].frame));
    }
    trace.innovations.push_back({innov(0), innov(1)});
    trace.innovation_sigma.push_back({std::sqrt(S(0, 0)), std::sqrt(S(1, 1))});
    trace.filtered.samples[k].position = {x(0), x(1)};
  }
  return trace;
}

inline Segment kalman_forward(const Segment& seg, const KalmanConfig& cfg, const FrameClock& clock) {
  return kalman_trace(seg, cfg, clock).filtered;
}

/// Applies the configured smoother. Frame indices and statuses are unchanged.
inline Segment smooth_segment(const Segment& seg, const SmoothingConfig& cfg, const FrameClock& clock) {
  cfg.validate();
  switch (cfg.method) {
    case SmoothingMethod::none: return seg;
    case SmoothingMethod::kalman: return kalman_forward(seg, cfg.kalman, clock);
    case SmoothingMethod::savgol: return savgol_smooth(seg, cfg.savgol);
  }
  return seg;
}

}  // namespace kinprof
