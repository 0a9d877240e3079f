#pragma once

// Windowed differentiation of smoothed positions into velocity and
// acceleration, plus speed capping and centred moving-average smoothing of
// acceleration.
//
// For frame k of a segment spanning [first, last]:
//   k- = max(k - l_n, first),  k+ = min(k + l_n, last)
//   v(k) = (p(k+) - p(k-)) / (t(k+) - t(k-))
// and the same operator applied to v gives a(k). Windows never leave the
// segment.
//
// Stored scalars: speed = |v|; accel = |a| signed by the direction of a
// relative to v (negative while decelerating).

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kinprof/data_model.hpp"
#include "kinprof/preprocess.hpp"

namespace kinprof {

struct KinematicsConfig {
  int l_n = 20;
  double speed_cap_mps = 15.0;
  int accel_ma_window = 20;

  void validate() const {
    if (l_n < 1) throw ConfigError("l_n must be >= 1, got " + std::to_string(l_n));
    if (!(speed_cap_mps > 0.0)) throw ConfigError("speed cap must be positive");
    if (accel_ma_window < 1) throw ConfigError("acceleration moving-average window must be >= 1");
  }
};

struct KinematicsEntry {
  FrameIndex frame = 0;
  Vec2 velocity;
  Vec2 acceleration;
  double speed_mps = 0.0;
  double accel_mps2 = 0.0;
  bool valid_speed = false;
  bool valid_accel = false;
};

struct KinematicsSeries {
  std::string athlete;
  KinematicsConfig config;
  SmoothingMethod smoothing = SmoothingMethod::none;
  FrameClock clock;
  std::vector<KinematicsEntry> entries;  // frame order, only frames inside segments
  std::vector<std::pair<FrameIndex, FrameIndex>> segments;  // inclusive bounds of differentiated segments
  std::vector<FrameIndex> singleton_frames;  // length-1 segments, no kinematics

  const KinematicsEntry* find(FrameIndex frame) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), frame,
                               [](const KinematicsEntry& e, FrameIndex f) { return e.frame < f; });
    return it != entries.end() && it->frame == frame ? &*it : nullptr;
  }
};

/// Symmetric clamped difference quotient over a contiguous run of values
/// starting at `first_frame`. Returns an empty vector for fewer than two values.
inline std::vector<Vec2> windowed_derivative(std::span<const Vec2> values, FrameIndex first_frame, int l_n,
                                             const FrameClock& clock) {
  if (l_n < 1) throw ConfigError("l_n must be >= 1");
  const auto n = static_cast<std::ptrdiff_t>(values.size());
  std::vector<Vec2> out;
  if (n < 2) return out;
  out.reserve(values.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(i - l_n, 0);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(i + l_n, n - 1);
    const double dt = clock.timestamp(first_frame + hi) - clock.timestamp(first_frame + lo);
    out.push_back((values[static_cast<std::size_t>(hi)] - values[static_cast<std::size_t>(lo)]) / dt);
  }
  return out;
}

/// Velocity vectors for every frame of the segment (empty for length 1).
inline std::vector<Vec2> differentiate(const Segment& seg, int l_n, const FrameClock& clock) {
  std::vector<Vec2> positions;
  positions.reserve(seg.size());
  for (const auto& s : seg.samples) positions.push_back(s.position);
  return windowed_derivative(positions, seg.empty() ? 0 : seg.first_frame(), l_n, clock);
}

inline std::vector<Vec2> differentiate_velocity(std::span<const Vec2> velocity, FrameIndex first_frame, int l_n,
                                                const FrameClock& clock) {
  return windowed_derivative(velocity, first_frame, l_n, clock);
}

inline double signed_acceleration(Vec2 velocity, Vec2 acceleration) {
  const double mag = acceleration.norm();
  return acceleration.dot(velocity) < 0.0 ? -mag : mag;
}

/// Centred moving average. Interior windows cover [i - w/2, i + (w - 1 - w/2)];
/// near an edge the window shrinks to the largest symmetric [i - h, i + h]
/// that fits. A window touching an invalid entry yields nullopt.
inline std::vector<std::optional<double>> centred_moving_average(std::span<const double> values,
                                                                 const std::vector<bool>& valid, int window) {
  if (valid.size() != values.size()) throw ConfigError("moving average: value/validity length mismatch");
  if (window < 1) throw ConfigError("moving-average window must be >= 1");
  const auto n = static_cast<std::ptrdiff_t>(values.size());
  const std::ptrdiff_t left = window / 2;
  const std::ptrdiff_t right = window - 1 - left;
  std::vector<std::optional<double>> out(values.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    std::ptrdiff_t lo = i - left;
    std::ptrdiff_t hi = i + right;
    if (lo < 0 || hi > n - 1) {
      const std::ptrdiff_t h = std::min({i, n - 1 - i, right});
      lo = i - h;
      hi = i + h;
    }
    double sum = 0.0;
    bool ok = true;
    for (std::ptrdiff_t j = lo; j <= hi && ok; ++j) {
      ok = valid[static_cast<std::size_t>(j)];
      sum += values[static_cast<std::size_t>(j)];
    }
    if (ok) out[static_cast<std::size_t>(i)] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

/// Raw differentiation output of one segment.
struct SegmentDerivatives {
  FrameIndex first_frame = 0;
  std::vector<Vec2> velocity;
  std::vector<Vec2> acceleration;
};

/// Caps speed and smooths acceleration per segment. Speed above the cap is
/// invalid; any acceleration whose averaging window touches an invalid speed
/// is invalid.
inline KinematicsSeries postprocess(std::string athlete, std::span<const SegmentDerivatives> segments,
                                    const KinematicsConfig& cfg, const FrameClock& clock) {
  cfg.validate();
  KinematicsSeries series;
  series.athlete = std::move(athlete);
  series.config = cfg;
  series.clock = clock;
  for (const auto& seg : segments) {
    const std::size_t n = seg.velocity.size();
    if (n == 0) continue;
    std::vector<double> speed(n), accel(n);
    std::vector<bool> speed_ok(n);
    for (std::size_t i = 0; i < n; ++i) {
      speed[i] = seg.velocity[i].norm();
      speed_ok[i] = speed[i] <= cfg.speed_cap_mps;
      accel[i] = signed_acceleration(seg.velocity[i], seg.acceleration[i]);
    }
    const auto smoothed = centred_moving_average(accel, speed_ok, cfg.accel_ma_window);
    for (std::size_t i = 0; i < n; ++i) {
      KinematicsEntry e;
      e.frame = seg.first_frame + static_cast<FrameIndex>(i);
      e.velocity = seg.velocity[i];
      e.acceleration = seg.acceleration[i];
      e.speed_mps = speed[i];
      e.valid_speed = speed_ok[i];
      e.accel_mps2 = smoothed[i].value_or(accel[i]);
      e.valid_accel = smoothed[i].has_value();
      series.entries.push_back(e);
    }
    series.segments.emplace_back(seg.first_frame, seg.first_frame + static_cast<FrameIndex>(n) - 1);
  }
  return series;
}

/// Full per-athlete chain: segment, smooth, differentiate twice, postprocess.
inline KinematicsSeries compute_kinematics(const Trajectory& traj, int max_gap, const SmoothingConfig& smoothing,
                                           const KinematicsConfig& cfg) {
  cfg.validate();
  smoothing.validate();
  std::vector<SegmentDerivatives> derivs;
  std::vector<FrameIndex> singletons;
  for (const auto& raw : segment(traj, max_gap)) {
    if (raw.size() < 2) {
      singletons.push_back(raw.first_frame());
      continue;
    }
    const Segment smooth = smooth_segment(raw, smoothing, traj.clock);
    SegmentDerivatives d;
    d.first_frame = smooth.first_frame();
    d.velocity = differentiate(smooth, cfg.l_n, traj.clock);
    d.acceleration = differentiate_velocity(d.velocity, d.first_frame, cfg.l_n, traj.clock);
    derivs.push_back(std::move(d));
  }
  KinematicsSeries series = postprocess(traj.id.track, derivs, cfg, traj.clock);
  series.smoothing = smoothing.method;
  series.singleton_frames = std::move(singletons);
  return series;
}

}  // namespace kinprof
