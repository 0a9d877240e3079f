#pragma once

// Acceleration-speed (A-S) profiling: bin (speed, acceleration) samples,
// keep the top accelerations per bin, fit a line, drop points outside the
// prediction band of that fit, refit. The refit gives
//   accel = slope * speed + A0,   S0 = -A0 / slope.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kinprof/kinematics.hpp"
#include "kinprof/regression.hpp"

namespace kinprof {

struct ASProfileConfig {
  double min_speed_mps = 3.0;
  double bin_width_mps = 0.2;
  int per_bin_top_k = 2;
  double ci_level = 0.95;
  std::size_t min_points = 10;
  std::size_t min_bins = 5;

  void validate() const {
    if (!(bin_width_mps > 0.0)) throw ConfigError("A-S bin width must be positive");
    if (!(ci_level > 0.0 && ci_level < 1.0)) throw ConfigError("A-S ci_level must be in (0, 1)");
    if (!(min_speed_mps >= 0.0)) throw ConfigError("A-S min speed must be >= 0");
    if (per_bin_top_k < 1) throw ConfigError("A-S per-bin top-k must be >= 1");
    if (min_points < 3) throw ConfigError("A-S min_points must be >= 3");
    if (min_bins < 2) throw ConfigError("A-S min_bins must be >= 2");
  }
};

/// One frame's scalar kinematics as seen by the profiler.
struct ASSample {
  FrameIndex frame = 0;
  double speed_mps = 0.0;
  double accel_mps2 = 0.0;
  bool valid = true;
};

struct ASPoint {
  FrameIndex frame = 0;
  double speed_mps = 0.0;
  double accel_mps2 = 0.0;
  long bin = 0;
  bool kept = true;

  friend bool operator==(const ASPoint&, const ASPoint&) = default;
};

struct ASProfile {
  std::vector<ASPoint> points;
  double slope = 0.0;  // 1/s
  double a0_mps2 = 0.0;
  double s0_mps = 0.0;
  double r_squared = 0.0;
  std::size_t kept_count = 0;
  std::size_t rejected_count = 0;
  std::size_t bins_used = 0;
  LineFit initial_fit;
};

enum class DegenerateReason { insufficient_data, non_negative_slope, all_rejected };

inline const char* to_string(DegenerateReason r) {
  switch (r) {
    case DegenerateReason::insufficient_data: return "insufficient data";
    case DegenerateReason::non_negative_slope: return "non-negative slope";
    case DegenerateReason::all_rejected: return "outlier rejection emptied selection";
  }
  return "?";
}

inline const char* reason_code(DegenerateReason r) {
  switch (r) {
    case DegenerateReason::insufficient_data: return "insufficient_data";
    case DegenerateReason::non_negative_slope: return "non_negative_slope";
    case DegenerateReason::all_rejected: return "all_rejected";
  }
  return "?";
}

class DegenerateProfile : public Error {
 public:
  DegenerateProfile(DegenerateReason reason, const std::string& detail)
      : Error(std::string("degenerate A-S profile (") + to_string(reason) + "): " + detail), reason_(reason) {}
  DegenerateReason reason() const noexcept { return reason_; }

 private:
  DegenerateReason reason_;
};

inline std::vector<ASSample> as_samples(const KinematicsSeries& series, std::optional<FrameIndex> from = {},
                                        std::optional<FrameIndex> to = {}) {
  std::vector<ASSample> out;
  for (const auto& e : series.entries) {
    if (from && e.frame < *from) continue;
    if (to && e.frame > *to) continue;
    out.push_back({e.frame, e.speed_mps, e.accel_mps2, e.valid_speed && e.valid_accel});
  }
  return out;
}

/// Keeps the per_bin_top_k highest positive accelerations of each speed bin
/// at or above min_speed. Ties go to the earlier frame.
inline std::vector<ASPoint> select_points(std::span<const ASSample> samples, const ASProfileConfig& cfg) {
  cfg.validate();
  double max_speed = -1.0;
  for (const auto& s : samples) {
    if (s.valid) max_speed = std::max(max_speed, s.speed_mps);
  }
  std::map<long, std::vector<ASPoint>> bins;
  for (const auto& s : samples) {
    if (!s.valid || s.speed_mps < cfg.min_speed_mps || s.speed_mps > max_speed || !(s.accel_mps2 > 0.0)) continue;
    const auto bin = static_cast<long>(std::floor((s.speed_mps - cfg.min_speed_mps) / cfg.bin_width_mps));
    bins[bin].push_back({s.frame, s.speed_mps, s.accel_mps2, bin, true});
  }
  std::vector<ASPoint> out;
  for (auto& [_, pts] : bins) {
    std::stable_sort(pts.begin(), pts.end(), [](const ASPoint& a, const ASPoint& b) {
      if (a.accel_mps2 != b.accel_mps2) return a.accel_mps2 > b.accel_mps2;
      return a.frame < b.frame;
    });
    const std::size_t k = std::min(pts.size(), static_cast<std::size_t>(cfg.per_bin_top_k));
    out.insert(out.end(), pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return out;
}

inline std::vector<ASPoint> select_points(const KinematicsSeries& series, const ASProfileConfig& cfg) {
  const auto samples = as_samples(series);
  return select_points(samples, cfg);
}

namespace detail {

inline LineFit fit_points(const std::vector<ASPoint>& pts, bool kept_only) {
  std::vector<double> x, y;
  for (const auto& p : pts) {
    if (kept_only && !p.kept) continue;
    x.push_back(p.speed_mps);
    y.push_back(p.accel_mps2);
  }
  return fit_line(x, y);
}

}  // namespace detail

/// Two-pass fit with one prediction-band rejection step.
inline ASProfile fit_profile(std::span<const ASPoint> points, const ASProfileConfig& cfg) {
  cfg.validate();
  std::set<long> bins;
  for (const auto& p : points) bins.insert(p.bin);
  if (points.size() < cfg.min_points || bins.size() < cfg.min_bins) {
    throw DegenerateProfile(DegenerateReason::insufficient_data,
                            std::to_string(points.size()) + " points in " + std::to_string(bins.size()) + " bins");
  }

  ASProfile prof;
  prof.points.assign(points.begin(), points.end());
  // Canonical order makes the fit independent of input order.
  std::sort(prof.points.begin(), prof.points.end(), [](const ASPoint& a, const ASPoint& b) {
    if (a.bin != b.bin) return a.bin < b.bin;
    if (a.speed_mps != b.speed_mps) return a.speed_mps < b.speed_mps;
    if (a.accel_mps2 != b.accel_mps2) return a.accel_mps2 < b.accel_mps2;
    return a.frame < b.frame;
  });
  for (auto& p : prof.points) p.kept = true;

  prof.initial_fit = detail::fit_points(prof.points, false);
  double scale = 1.0;
  for (const auto& p : prof.points) scale = std::max(scale, std::abs(p.accel_mps2));
  const double slack = 1e-12 * scale;
  for (auto& p : prof.points) {
    const double residual = p.accel_mps2 - prof.initial_fit.predict(p.speed_mps);
    const double band = prediction_half_width(prof.initial_fit, p.speed_mps, cfg.ci_level);
    p.kept = std::abs(residual) <= band + slack;
  }

  std::set<long> kept_bins;
  for (const auto& p : prof.points) {
    if (p.kept) {
      ++prof.kept_count;
      kept_bins.insert(p.bin);
    } else {
      ++prof.rejected_count;
    }
  }
  if (prof.kept_count == 0) throw DegenerateProfile(DegenerateReason::all_rejected, "no point inside the band");
  if (prof.kept_count < 2 || kept_bins.size() < 2) {
    throw DegenerateProfile(DegenerateReason::insufficient_data, "fewer than two distinct speeds after rejection");
  }
  prof.bins_used = kept_bins.size();

  const LineFit final_fit = detail::fit_points(prof.points, true);
  if (!(final_fit.slope < 0.0)) {
    throw DegenerateProfile(DegenerateReason::non_negative_slope, "slope " + std::to_string(final_fit.slope));
  }
  prof.slope = final_fit.slope;
  prof.a0_mps2 = final_fit.intercept;
  prof.s0_mps = -final_fit.intercept / final_fit.slope;
  prof.r_squared = final_fit.r_squared;
  if (!(prof.a0_mps2 > 0.0)) {
    throw DegenerateProfile(DegenerateReason::non_negative_slope,
                            "non-positive intercept A0 = " + std::to_string(prof.a0_mps2));
  }
  return prof;
}

struct ProfileDelta {
  double d_a0 = 0.0;
  double d_s0 = 0.0;
  double d_slope = 0.0;
};

/// Component-wise later - earlier.
inline ProfileDelta compare_profiles(const ASProfile& earlier, const ASProfile& later) {
  for (const ASProfile* p : {&earlier, &later}) {
    if (!(p->slope < 0.0) || !(p->a0_mps2 > 0.0)) {
      throw DegenerateProfile(DegenerateReason::non_negative_slope, "cannot compare a degenerate profile");
    }
  }
  return {later.a0_mps2 - earlier.a0_mps2, later.s0_mps - earlier.s0_mps, later.slope - earlier.slope};
}

inline nlohmann::ordered_json to_json(const ASProfile& p) {
  nlohmann::ordered_json j;
  j["status"] = "ok";
  j["A0_mps2"] = p.a0_mps2;
  j["S0_mps"] = p.s0_mps;
  j["slope_per_s"] = p.slope;
  j["r_squared"] = p.r_squared;
  j["points_kept"] = p.kept_count;
  j["points_rejected"] = p.rejected_count;
  j["bins_used"] = p.bins_used;
  j["initial_fit"] = {{"slope_per_s", p.initial_fit.slope},
                      {"intercept_mps2", p.initial_fit.intercept},
                      {"residual_sd", p.initial_fit.residual_sd}};
  auto pts = nlohmann::ordered_json::array();
  for (const auto& q : p.points) {
    pts.push_back({{"frame", q.frame}, {"speed_mps", q.speed_mps}, {"accel_mps2", q.accel_mps2}, {"bin", q.bin},
                   {"kept", q.kept}});
  }
  j["points"] = std::move(pts);
  return j;
}

}  // namespace kinprof
