#pragma once

// Core domain types: pitch-plane positions on a fixed frame clock, athlete
// trajectories with per-sample validity, and gap-free segments.
//
// Coordinates are metres in the canonical pitch frame: origin at the pitch
// centre, x along the touchline, y along the goal line.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kinprof/errors.hpp"

namespace kinprof {

using FrameIndex = std::int64_t;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
  friend bool operator==(Vec2, Vec2) = default;

  double norm() const { return std::hypot(x, y); }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

/// Fixed-rate clock. Frame k (1-based) is stamped at k / f seconds.
class FrameClock {
 public:
  FrameClock() = default;
  FrameClock(double frame_rate_hz, FrameIndex frame_count)
      : rate_(frame_rate_hz), count_(frame_count) {
    if (!(frame_rate_hz > 0.0) || !std::isfinite(frame_rate_hz)) {
      throw ConfigError("frame rate must be positive, got " + std::to_string(frame_rate_hz));
    }
    if (frame_count < 1) {
      throw ConfigError("frame count must be positive, got " + std::to_string(frame_count));
    }
  }

  double frame_rate_hz() const noexcept { return rate_; }
  FrameIndex frame_count() const noexcept { return count_; }
  double frame_period_s() const noexcept { return 1.0 / rate_; }
  double timestamp(FrameIndex k) const noexcept { return static_cast<double>(k) / rate_; }

  friend bool operator==(const FrameClock&, const FrameClock&) = default;

 private:
  double rate_ = 25.0;
  FrameIndex count_ = 1;
};

enum class SampleStatus { observed, interpolated, missing };

inline const char* to_string(SampleStatus s) {
  switch (s) {
    case SampleStatus::observed: return "observed";
    case SampleStatus::interpolated: return "interpolated";
    case SampleStatus::missing: return "missing";
  }
  return "?";
}

// Pitch plus a margin for calibration error.
inline constexpr double kMaxAbsX = 80.0;
inline constexpr double kMaxAbsY = 60.0;

struct PositionSample {
  FrameIndex frame = 0;
  Vec2 position;
  SampleStatus status = SampleStatus::missing;

  bool present() const noexcept { return status != SampleStatus::missing; }
  friend bool operator==(const PositionSample&, const PositionSample&) = default;
};

/// Track identity plus optional labels carried through from the source.
struct AthleteId {
  std::string track;
  std::string role;
  std::string team;
  std::string jersey;

  friend bool operator==(const AthleteId&, const AthleteId&) = default;
};

struct Trajectory {
  AthleteId id;
  std::vector<PositionSample> samples;  // strictly increasing frame
  FrameClock clock;

  std::size_t observed_count() const {
    std::size_t n = 0;
    for (const auto& s : samples) n += s.status == SampleStatus::observed;
    return n;
  }
};

/// All athlete tracks of one sequence on a shared clock.
struct TrajectorySet {
  std::string sequence_id;
  FrameClock clock;
  std::vector<Trajectory> tracks;

  const Trajectory* find(const std::string& track) const {
    for (const auto& t : tracks) {
      if (t.id.track == track) return &t;
    }
    return nullptr;
  }
};

/// A maximal gap-free run of one athlete's samples.
struct Segment {
  std::string track;
  std::vector<PositionSample> samples;  // contiguous frames, none missing

  FrameIndex first_frame() const { return samples.front().frame; }
  FrameIndex last_frame() const { return samples.back().frame; }
  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }

  friend bool operator==(const Segment&, const Segment&) = default;
};

enum class PitchOrigin { centre, corner };

/// Source coordinate convention. Canonical is {centre, 105 x 68, no flip}.
struct PitchConvention {
  PitchOrigin origin = PitchOrigin::centre;
  double length_m = 105.0;
  double width_m = 68.0;
  bool flip_y = false;

  Vec2 to_canonical(Vec2 p) const {
    if (origin == PitchOrigin::corner) p = {p.x - 0.5 * length_m, p.y - 0.5 * width_m};
    if (flip_y) p.y = -p.y;
    return p;
  }
  Vec2 from_canonical(Vec2 p) const {
    if (flip_y) p.y = -p.y;
    if (origin == PitchOrigin::corner) p = {p.x + 0.5 * length_m, p.y + 0.5 * width_m};
    return p;
  }
};

/// Throws ValidationError when the trajectory breaks an invariant.
inline void validate(const Trajectory& traj) {
  bool any_observed = false;
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const auto& s = traj.samples[i];
    if (i > 0 && s.frame <= traj.samples[i - 1].frame) {
      throw ValidationError("track " + traj.id.track + ": frame indices not strictly increasing at frame " +
                            std::to_string(s.frame));
    }
    if (s.present()) {
      if (!s.position.finite()) {
        throw ValidationError("track " + traj.id.track + " frame " + std::to_string(s.frame) +
                              ": non-finite coordinate");
      }
      if (std::abs(s.position.x) > kMaxAbsX || std::abs(s.position.y) > kMaxAbsY) {
        throw ValidationError("track " + traj.id.track + " frame " + std::to_string(s.frame) +
                              ": position outside pitch bounds");
      }
    }
    any_observed = any_observed || s.status == SampleStatus::observed;
  }
  if (!any_observed) throw ValidationError("track " + traj.id.track + ": no observed sample");
}

/// Splits a trajectory into gap-free segments. Runs of at most `max_gap`
/// missing frames between two present samples are filled by linear
/// interpolation and marked interpolated; longer runs end the segment.
/// Frames absent from `samples` count as missing.
inline std::vector<Segment> segment(const Trajectory& traj, int max_gap = 3) {
  if (max_gap < 0) throw ConfigError("g_max must be >= 0");
  std::vector<Segment> out;
  const PositionSample* prev = nullptr;
  for (const auto& s : traj.samples) {
    if (!s.present()) continue;
    const FrameIndex gap = prev ? s.frame - prev->frame - 1 : -1;
    if (prev == nullptr || gap > max_gap) {
      out.push_back(Segment{traj.id.track, {}});
    } else if (gap > 0) {
      const double span = static_cast<double>(s.frame - prev->frame);
      for (FrameIndex k = prev->frame + 1; k < s.frame; ++k) {
        const double w = static_cast<double>(k - prev->frame) / span;
        const Vec2 p = (1.0 - w) * prev->position + w * s.position;
        out.back().samples.push_back({k, p, SampleStatus::interpolated});
      }
    }
    out.back().samples.push_back(s);
    prev = &s;
  }
  return out;
}

/// Inverse view of segment(): a trajectory holding the segment samples, with
/// explicit missing entries for frames between segments.
inline Trajectory flatten(const Trajectory& base, std::span<const Segment> segments) {
  Trajectory t{base.id, {}, base.clock};
  for (const auto& seg : segments) {
    if (!t.samples.empty()) {
      for (FrameIndex k = t.samples.back().frame + 1; k < seg.first_frame(); ++k) {
        t.samples.push_back({k, {}, SampleStatus::missing});
      }
    }
    t.samples.insert(t.samples.end(), seg.samples.begin(), seg.samples.end());
  }
  return t;
}

}  // namespace kinprof
