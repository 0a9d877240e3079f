#pragma once

// Synthetic trajectories with closed-form kinematics, and synthetic A-S point
// clouds with a known line. Both are deterministic given the seed: the random
// stream is mt19937_64 with explicit uniform/normal transforms so output does
// not depend on the standard library's distribution implementations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kinprof/asprofile.hpp"
#include "kinprof/data_model.hpp"

namespace kinprof {

class SynthRng {
 public:
  explicit SynthRng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

enum class MotionKind { static_point, constant_velocity, constant_acceleration, sinusoid, piecewise_sprint };

inline const char* to_string(MotionKind k) {
  switch (k) {
    case MotionKind::static_point: return "static";
    case MotionKind::constant_velocity: return "constant_velocity";
    case MotionKind::constant_acceleration: return "constant_acceleration";
    case MotionKind::sinusoid: return "sinusoid";
    case MotionKind::piecewise_sprint: return "piecewise_sprint";
  }
  return "?";
}

inline MotionKind parse_motion_kind(const std::string& s) {
  for (auto k : {MotionKind::static_point, MotionKind::constant_velocity, MotionKind::constant_acceleration,
                 MotionKind::sinusoid, MotionKind::piecewise_sprint}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown motion kind '" + s + "'");
}

struct GapSpec {
  FrameIndex start = 0;  // first missing frame
  FrameIndex length = 0;
};

/// Envelope of the sprint generator: phase accelerations stay below
/// a0 * (1 - speed / s0).
struct SprintParams {
  double a0_mps2 = 6.0;
  double s0_mps = 9.0;
  double rest_min_s = 1.0, rest_max_s = 4.0;
  double effort_min = 0.55, effort_max = 0.95;  // fraction of s0 reached
  double drive_min = 0.7, drive_max = 1.0;      // fraction of the envelope slope
  double cruise_min_s = 0.3, cruise_max_s = 1.5;
  double decel_min_mps2 = 2.0, decel_max_mps2 = 4.0;
};

struct MotionScenario {
  MotionKind kind = MotionKind::static_point;
  double duration_s = 30.0;
  double frame_rate_hz = 25.0;
  double noise_sigma_m = 0.0;
  std::vector<GapSpec> gaps;
  std::uint64_t seed = 0;
  std::string track = "1";

  Vec2 origin{0.0, 0.0};
  Vec2 velocity{2.0, 0.0};      // constant_velocity / constant_acceleration initial velocity
  Vec2 acceleration{0.0, 0.0};  // constant_acceleration
  double amplitude_m = 10.0;    // sinusoid: origin + amplitude * sin(omega t) * axis
  double omega_rad_s = 0.5;
  Vec2 axis{1.0, 0.0};
  SprintParams sprint;

  void validate() const {
    if (!(duration_s > 0.0)) throw ConfigError("scenario duration must be positive");
    if (!(frame_rate_hz > 0.0)) throw ConfigError("scenario frame rate must be positive");
    if (!(noise_sigma_m >= 0.0)) throw ConfigError("noise sigma must be >= 0");
    for (const auto& g : gaps) {
      if (g.start < 1 || g.length < 0) throw ConfigError("gap start must be >= 1 and length >= 0");
    }
    if (kind == MotionKind::piecewise_sprint && !(sprint.a0_mps2 > 0.0 && sprint.s0_mps > 0.0)) {
      throw ConfigError("sprint envelope needs positive a0 and s0");
    }
  }
};

/// Analytic state at one instant.
struct MotionState {
  Vec2 position;
  Vec2 velocity;
  Vec2 acceleration;
};

struct GeneratedMotion {
  Trajectory trajectory;  // noisy, with gaps
  Trajectory clean;       // noiseless, fully observed
  std::vector<MotionState> analytic;  // index k-1 for frame k
  std::vector<double> analytic_speed;
  std::vector<double> analytic_accel;  // |a| signed by a.v, as in KinematicsSeries
};

namespace detail {

enum class PhaseKind { rest, accelerate, cruise, decelerate };

struct SprintPhase {
  PhaseKind kind;
  double t0, t1;
  Vec2 start;
  Vec2 heading;
  double v_start = 0.0;
  double v_target = 0.0;  // accelerate
  double tau = 1.0;       // accelerate
  double decel = 0.0;     // decelerate

  MotionState at(double t) const {
    const double s = t - t0;
    double dist = 0.0, speed = 0.0, acc = 0.0;
    switch (kind) {
      case PhaseKind::rest: break;
      case PhaseKind::accelerate: {
        const double e = std::exp(-s / tau);
        speed = v_target - (v_target - v_start) * e;
        acc = (v_target - speed) / tau;
        dist = v_target * s - (v_target - v_start) * tau * (1.0 - e);
        break;
      }
      case PhaseKind::cruise:
        speed = v_start;
        dist = v_start * s;
        break;
      case PhaseKind::decelerate:
        speed = v_start - decel * s;
        acc = -decel;
        dist = v_start * s - 0.5 * decel * s * s;
        break;
    }
    return {start + dist * heading, speed * heading, acc * heading};
  }
};

inline std::vector<SprintPhase> plan_sprints(const MotionScenario& sc, SynthRng& rng) {
  const auto& p = sc.sprint;
  std::vector<SprintPhase> phases;
  double t = 0.0;
  Vec2 pos = sc.origin;
  while (t <= sc.duration_s + 1.0) {
    const double rest = rng.uniform(p.rest_min_s, p.rest_max_s);
    phases.push_back({PhaseKind::rest, t, t + rest, pos, {1.0, 0.0}});
    t += rest;

    const double v_target = rng.uniform(p.effort_min, p.effort_max) * p.s0_mps;
    const double tau = p.s0_mps / (p.a0_mps2 * rng.uniform(p.drive_min, p.drive_max));
    const double t_acc = tau * rng.uniform(1.0, 2.0);
    const double v_cruise = v_target * (1.0 - std::exp(-t_acc / tau));
    const double t_cruise = rng.uniform(p.cruise_min_s, p.cruise_max_s);
    const double decel = rng.uniform(p.decel_min_mps2, p.decel_max_mps2);
    const double t_dec = v_cruise / decel;
    const double d_acc = v_target * t_acc - v_target * tau * (1.0 - std::exp(-t_acc / tau));
    const double dist = d_acc + v_cruise * t_cruise + 0.5 * v_cruise * t_dec;

    Vec2 heading{pos.x > 0 ? -1.0 : 1.0, 0.0};
    for (int attempt = 0; attempt < 64; ++attempt) {
      const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const Vec2 h{std::cos(ang), std::sin(ang)};
      const Vec2 end = pos + dist * h;
      if (std::abs(end.x) <= 50.0 && std::abs(end.y) <= 32.0) {
        heading = h;
        break;
      }
    }

    SprintPhase acc{PhaseKind::accelerate, t, t + t_acc, pos, heading, 0.0, v_target, tau};
    pos = acc.at(acc.t1).position;
    phases.push_back(acc);
    t += t_acc;
    SprintPhase cru{PhaseKind::cruise, t, t + t_cruise, pos, heading, v_cruise};
    pos = cru.at(cru.t1).position;
    phases.push_back(cru);
    t += t_cruise;
    SprintPhase dec{PhaseKind::decelerate, t, t + t_dec, pos, heading, v_cruise, 0.0, 1.0, decel};
    pos = dec.at(dec.t1).position;
    phases.push_back(dec);
    t += t_dec;
  }
  return phases;
}

}  // namespace detail

inline GeneratedMotion generate(const MotionScenario& sc) {
  sc.validate();
  const auto frames = std::max<FrameIndex>(1, static_cast<FrameIndex>(std::llround(sc.duration_s * sc.frame_rate_hz)));
  const FrameClock clock(sc.frame_rate_hz, frames);
  SynthRng rng(sc.seed);

  std::vector<detail::SprintPhase> phases;
  if (sc.kind == MotionKind::piecewise_sprint) phases = detail::plan_sprints(sc, rng);

  auto state_at = [&](double t) -> MotionState {
    switch (sc.kind) {
      case MotionKind::static_point: return {sc.origin, {}, {}};
      case MotionKind::constant_velocity: return {sc.origin + t * sc.velocity, sc.velocity, {}};
      case MotionKind::constant_acceleration:
        return {sc.origin + t * sc.velocity + (0.5 * t * t) * sc.acceleration, sc.velocity + t * sc.acceleration,
                sc.acceleration};
      case MotionKind::sinusoid: {
        const double w = sc.omega_rad_s;
        return {sc.origin + (sc.amplitude_m * std::sin(w * t)) * sc.axis,
                (sc.amplitude_m * w * std::cos(w * t)) * sc.axis,
                (-sc.amplitude_m * w * w * std::sin(w * t)) * sc.axis};
      }
      case MotionKind::piecewise_sprint: {
        auto it = std::upper_bound(phases.begin(), phases.end(), t,
                                   [](double v, const detail::SprintPhase& ph) { return v < ph.t1; });
        if (it == phases.end()) it = std::prev(phases.end());
        return it->at(t);
      }
    }
    return {};
  };

  GeneratedMotion out;
  out.trajectory = Trajectory{AthleteId{sc.track, "player", "", ""}, {}, clock};
  out.clean = out.trajectory;
  auto in_gap = [&](FrameIndex k) {
    return std::any_of(sc.gaps.begin(), sc.gaps.end(),
                       [&](const GapSpec& g) { return k >= g.start && k < g.start + g.length; });
  };
  for (FrameIndex k = 1; k <= frames; ++k) {
    const MotionState st = state_at(clock.timestamp(k));
    out.analytic.push_back(st);
    out.analytic_speed.push_back(st.velocity.norm());
    out.analytic_accel.push_back(st.acceleration.dot(st.velocity) < 0.0 ? -st.acceleration.norm()
                                                                        : st.acceleration.norm());
    out.clean.samples.push_back({k, st.position, SampleStatus::observed});
    Vec2 noisy = st.position;
    if (sc.noise_sigma_m > 0.0) {
      noisy.x += sc.noise_sigma_m * rng.normal();
      noisy.y += sc.noise_sigma_m * rng.normal();
    }
    out.trajectory.samples.push_back({k, noisy, in_gap(k) ? SampleStatus::missing : SampleStatus::observed});
  }
  for (auto& s : out.trajectory.samples) {
    if (!s.present()) s.position = {};
  }
  return out;
}

inline nlohmann::ordered_json analytic_sidecar(const MotionScenario& sc, const GeneratedMotion& m) {
  nlohmann::ordered_json j;
  j["scenario"] = {{"kind", to_string(sc.kind)},   {"duration_s", sc.duration_s}, {"frame_rate_hz", sc.frame_rate_hz},
                   {"noise_sigma_m", sc.noise_sigma_m}, {"seed", sc.seed},          {"track", sc.track}};
  auto frames = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < m.analytic.size(); ++i) {
    frames.push_back({{"frame", static_cast<FrameIndex>(i + 1)},
                      {"speed_mps", m.analytic_speed[i]},
                      {"accel_mps2", m.analytic_accel[i]}});
  }
  j["analytic"] = std::move(frames);
  return j;
}

struct ASDatasetSpec {
  double a0_mps2 = 8.0;
  double s0_mps = 9.0;
  std::size_t bins = 25;
  double min_speed_mps = 3.0;
  double bin_width_mps = 0.2;
  std::size_t points_per_bin = 2;
  double noise_sigma_mps2 = 0.0;
  std::size_t outliers = 0;
  double outlier_offset_mps2 = 1.5;  // added to the line value
  std::uint64_t seed = 0;
};

struct ASDataset {
  std::vector<ASPoint> points;
  std::vector<std::size_t> outlier_indices;
  double a0_mps2 = 0.0;
  double s0_mps = 0.0;
};

/// Points on a = A0 (1 - s / S0) spread over `bins` consecutive speed bins
/// from min_speed, with optional Gaussian noise and upward outliers.
inline ASDataset synthesize_as_dataset(const ASDatasetSpec& spec) {
  if (!(spec.a0_mps2 > 0.0) || !(spec.s0_mps > spec.min_speed_mps)) {
    throw ConfigError("A-S dataset needs A0 > 0 and S0 > min speed");
  }
  if (spec.bins == 0 || spec.points_per_bin == 0 || !(spec.bin_width_mps > 0.0) || !(spec.noise_sigma_mps2 >= 0.0)) {
    throw ConfigError("A-S dataset needs bins, points per bin and bin width > 0 and noise >= 0");
  }
  if (spec.min_speed_mps + static_cast<double>(spec.bins) * spec.bin_width_mps > spec.s0_mps) {
    throw ConfigError("A-S dataset bins extend beyond S0");
  }
  SynthRng rng(spec.seed);
  ASDataset ds{{}, {}, spec.a0_mps2, spec.s0_mps};
  FrameIndex frame = 1;
  for (std::size_t b = 0; b < spec.bins; ++b) {
    for (std::size_t k = 0; k < spec.points_per_bin; ++k) {
      const double u = (static_cast<double>(k) + 0.5) / static_cast<double>(spec.points_per_bin);
      const double s = spec.min_speed_mps + (static_cast<double>(b) + 0.1 + 0.8 * u) * spec.bin_width_mps;
      double a = spec.a0_mps2 * (1.0 - s / spec.s0_mps);
      if (spec.noise_sigma_mps2 > 0.0) a += spec.noise_sigma_mps2 * rng.normal();
      ds.points.push_back({frame++, s, a, static_cast<long>(b), true});
    }
  }
  // Outliers replace evenly spaced points in the middle half of the bins.
  for (std::size_t o = 0; o < spec.outliers; ++o) {
    const std::size_t idx = ds.points.size() / 4 + (o * ds.points.size() / 2) / std::max<std::size_t>(1, spec.outliers);
    ds.points[idx].accel_mps2 += spec.outlier_offset_mps2;
    ds.outlier_indices.push_back(idx);
  }
  return ds;
}

}  // namespace kinprof
