#pragma once

// RunConfig: every knob of a pipeline run, its JSON form, and the hash that is
// stamped into each artifact.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kinprof/asprofile.hpp"
#include "kinprof/ingest.hpp"
#include "kinprof/kinematics.hpp"
#include "kinprof/metrics.hpp"
#include "kinprof/preprocess.hpp"
#include "kinprof/synth.hpp"

namespace kinprof {

struct SynthConfig {
  std::string kind = "piecewise_sprint";
  std::size_t athletes = 4;
  double duration_s = 30.0;
  double noise_sigma_m = 0.3;
  double dropout_fraction = 0.0;  // share of frames removed from predictions, in runs
  std::string sequence = "synth";
  // as_points: A-S point cloud on a known line.
  double as_a0_mps2 = 8.0;
  double as_s0_mps = 9.0;
  std::size_t as_bins = 25;
  double as_noise_mps2 = 0.0;
  std::size_t as_outliers = 0;
};

struct RunConfig {
  std::vector<std::string> predictions;
  std::vector<std::string> ground_truth;
  std::string format = "normalized_jsonl";
  std::string gt_format = "normalized_jsonl";
  PitchConvention pitch;
  double frame_rate_hz = 25.0;

  int max_gap = 3;
  SmoothingConfig smoothing;
  KinematicsConfig kinematics;
  ASProfileConfig profile;
  int profile_windows = 2;

  MatchOptions match;
  MaxLagOptions max_lag;
  double stratify_fraction = 0.3;
  bool ablation = false;
  std::vector<std::string> ablation_filters{"none", "kalman", "savgol"};
  std::vector<int> ablation_windows{2, 5, 10, 15, 20};

  std::string output_dir = "out";
  std::uint64_t seed = 0;
  SynthConfig synth;

  void validate() const {
    if (!(frame_rate_hz > 0.0)) throw ConfigError("frame_rate_hz must be positive");
    if (max_gap < 0) throw ConfigError("max_gap must be >= 0");
    smoothing.validate();
    kinematics.validate();
    profile.validate();
    if (profile_windows < 1) throw ConfigError("profile_windows must be >= 1");
    if (!(match.gate_m > 0.0)) throw ConfigError("match gate must be positive");
    if (max_lag.max_lag_frames < 0) throw ConfigError("max_lag must be >= 0");
    if (!(stratify_fraction > 0.0 && stratify_fraction <= 0.5)) {
      throw ConfigError("stratify_fraction must be in (0, 0.5]");
    }
    parse_format(format);
    parse_format(gt_format);
    for (const auto& f : ablation_filters) parse_smoothing_method(f);
    for (int l : ablation_windows) {
      if (l < 1) throw ConfigError("ablation l_n values must be >= 1");
    }
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
    if (synth.athletes == 0) throw ConfigError("synth.athletes must be >= 1");
    if (!(synth.dropout_fraction >= 0.0 && synth.dropout_fraction < 1.0)) {
      throw ConfigError("synth.dropout_fraction must be in [0, 1)");
    }
  }
};

/// Shortest decimal that round-trips to the same double.
inline std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

inline nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["predictions"] = c.predictions;
  j["ground_truth"] = c.ground_truth;
  j["format"] = c.format;
  j["gt_format"] = c.gt_format;
  j["pitch"] = {{"origin", c.pitch.origin == PitchOrigin::corner ? "corner" : "centre"},
                {"length_m", c.pitch.length_m},
                {"width_m", c.pitch.width_m},
                {"flip_y", c.pitch.flip_y}};
  j["frame_rate_hz"] = c.frame_rate_hz;
  j["max_gap"] = c.max_gap;
  j["smoothing"] = {{"method", to_string(c.smoothing.method)},
                    {"kalman",
                     {{"process_accel_sigma", c.smoothing.kalman.process_accel_sigma},
                      {"measurement_sigma_m", c.smoothing.kalman.measurement_sigma_m},
                      {"initial_velocity_sigma", c.smoothing.kalman.initial_velocity_sigma}}},
                    {"savgol", {{"window", c.smoothing.savgol.window}, {"poly_order", c.smoothing.savgol.poly_order}}}};
  j["kinematics"] = {{"l_n", c.kinematics.l_n},
                     {"speed_cap_mps", c.kinematics.speed_cap_mps},
                     {"accel_ma_window", c.kinematics.accel_ma_window}};
  j["profile"] = {{"min_speed_mps", c.profile.min_speed_mps}, {"bin_width_mps", c.profile.bin_width_mps},
                  {"per_bin_top_k", c.profile.per_bin_top_k}, {"ci_level", c.profile.ci_level},
                  {"min_points", c.profile.min_points},       {"min_bins", c.profile.min_bins},
                  {"windows", c.profile_windows}};
  j["match"] = {{"gate_m", c.match.gate_m}, {"min_overlap_frames", c.match.min_overlap_frames}};
  j["metrics"] = {{"max_lag_frames", c.max_lag.max_lag_frames},
                  {"min_overlap", c.max_lag.min_overlap},
                  {"stratify_fraction", c.stratify_fraction}};
  j["ablation"] = {{"enabled", c.ablation}, {"filters", c.ablation_filters}, {"l_n", c.ablation_windows}};
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["synth"] = {{"kind", c.synth.kind},
                {"athletes", c.synth.athletes},
                {"duration_s", c.synth.duration_s},
                {"noise_sigma_m", c.synth.noise_sigma_m},
                {"dropout_fraction", c.synth.dropout_fraction},
                {"sequence", c.synth.sequence},
                {"as_a0_mps2", c.synth.as_a0_mps2},
                {"as_s0_mps", c.synth.as_s0_mps},
                {"as_bins", c.synth.as_bins},
                {"as_noise_mps2", c.synth.as_noise_mps2},
                {"as_outliers", c.synth.as_outliers}};
  return j;
}

namespace detail {

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& item : j.items()) {
    const std::string& k = item.key();
    if (std::none_of(known.begin(), known.end(), [&](const char* n) { return k == n; })) {
      throw ConfigError("unknown config key '" + where + "." + k + "'");
    }
  }
}

}  // namespace detail

/// Overlays the keys present in `j` onto `c`. Unknown keys are an error.
inline void apply_json(RunConfig& c, const nlohmann::json& j) {
  using detail::read_opt;
  detail::reject_unknown(j,
                         {"predictions", "ground_truth", "format", "gt_format", "pitch", "frame_rate_hz", "max_gap",
                          "smoothing", "kinematics", "profile", "match", "metrics", "ablation", "output_dir", "seed",
                          "synth"},
                         "config");
  read_opt(j, "predictions", c.predictions, "config");
  read_opt(j, "ground_truth", c.ground_truth, "config");
  read_opt(j, "format", c.format, "config");
  read_opt(j, "gt_format", c.gt_format, "config");
  read_opt(j, "frame_rate_hz", c.frame_rate_hz, "config");
  read_opt(j, "max_gap", c.max_gap, "config");
  read_opt(j, "output_dir", c.output_dir, "config");
  read_opt(j, "seed", c.seed, "config");
  if (j.contains("pitch")) {
    const auto& p = j["pitch"];
    detail::reject_unknown(p, {"origin", "length_m", "width_m", "flip_y"}, "pitch");
    std::string origin = c.pitch.origin == PitchOrigin::corner ? "corner" : "centre";
    read_opt(p, "origin", origin, "pitch");
    if (origin != "centre" && origin != "corner") throw ConfigError("pitch.origin must be 'centre' or 'corner'");
    c.pitch.origin = origin == "corner" ? PitchOrigin::corner : PitchOrigin::centre;
    read_opt(p, "length_m", c.pitch.length_m, "pitch");
    read_opt(p, "width_m", c.pitch.width_m, "pitch");
    read_opt(p, "flip_y", c.pitch.flip_y, "pitch");
  }
  if (j.contains("smoothing")) {
    const auto& s = j["smoothing"];
    detail::reject_unknown(s, {"method", "kalman", "savgol"}, "smoothing");
    if (s.contains("method")) {
      std::string m;
      read_opt(s, "method", m, "smoothing");
      c.smoothing.method = parse_smoothing_method(m);
    }
    if (s.contains("kalman")) {
      const auto& k = s["kalman"];
      detail::reject_unknown(k, {"process_accel_sigma", "measurement_sigma_m", "initial_velocity_sigma"},
                             "smoothing.kalman");
      read_opt(k, "process_accel_sigma", c.smoothing.kalman.process_accel_sigma, "smoothing.kalman");
      read_opt(k, "measurement_sigma_m", c.smoothing.kalman.measurement_sigma_m, "smoothing.kalman");
      read_opt(k, "initial_velocity_sigma", c.smoothing.kalman.initial_velocity_sigma, "smoothing.kalman");
    }
    if (s.contains("savgol")) {
      const auto& g = s["savgol"];
      detail::reject_unknown(g, {"window", "poly_order"}, "smoothing.savgol");
      read_opt(g, "window", c.smoothing.savgol.window, "smoothing.savgol");
      read_opt(g, "poly_order", c.smoothing.savgol.poly_order, "smoothing.savgol");
    }
  }
  if (j.contains("kinematics")) {
    const auto& k = j["kinematics"];
    detail::reject_unknown(k, {"l_n", "speed_cap_mps", "accel_ma_window"}, "kinematics");
    read_opt(k, "l_n", c.kinematics.l_n, "kinematics");
    read_opt(k, "speed_cap_mps", c.kinematics.speed_cap_mps, "kinematics");
    read_opt(k, "accel_ma_window", c.kinematics.accel_ma_window, "kinematics");
  }
  if (j.contains("profile")) {
    const auto& p = j["profile"];
    detail::reject_unknown(p, {"min_speed_mps", "bin_width_mps", "per_bin_top_k", "ci_level", "min_points", "min_bins",
                               "windows"},
                           "profile");
    read_opt(p, "min_speed_mps", c.profile.min_speed_mps, "profile");
    read_opt(p, "bin_width_mps", c.profile.bin_width_mps, "profile");
    read_opt(p, "per_bin_top_k", c.profile.per_bin_top_k, "profile");
    read_opt(p, "ci_level", c.profile.ci_level, "profile");
    read_opt(p, "min_points", c.profile.min_points, "profile");
    read_opt(p, "min_bins", c.profile.min_bins, "profile");
    read_opt(p, "windows", c.profile_windows, "profile");
  }
  if (j.contains("match")) {
    const auto& m = j["match"];
    detail::reject_unknown(m, {"gate_m", "min_overlap_frames"}, "match");
    read_opt(m, "gate_m", c.match.gate_m, "match");
    read_opt(m, "min_overlap_frames", c.match.min_overlap_frames, "match");
  }
  if (j.contains("metrics")) {
    const auto& m = j["metrics"];
    detail::reject_unknown(m, {"max_lag_frames", "min_overlap", "stratify_fraction"}, "metrics");
    read_opt(m, "max_lag_frames", c.max_lag.max_lag_frames, "metrics");
    read_opt(m, "min_overlap", c.max_lag.min_overlap, "metrics");
    read_opt(m, "stratify_fraction", c.stratify_fraction, "metrics");
  }
  if (j.contains("ablation")) {
    const auto& a = j["ablation"];
    detail::reject_unknown(a, {"enabled", "filters", "l_n"}, "ablation");
    read_opt(a, "enabled", c.ablation, "ablation");
    read_opt(a, "filters", c.ablation_filters, "ablation");
    read_opt(a, "l_n", c.ablation_windows, "ablation");
  }
  if (j.contains("synth")) {
    const auto& s = j["synth"];
    detail::reject_unknown(s, {"kind", "athletes", "duration_s", "noise_sigma_m", "dropout_fraction", "sequence",
                               "as_a0_mps2", "as_s0_mps", "as_bins", "as_noise_mps2", "as_outliers"},
                           "synth");
    read_opt(s, "kind", c.synth.kind, "synth");
    read_opt(s, "athletes", c.synth.athletes, "synth");
    read_opt(s, "duration_s", c.synth.duration_s, "synth");
    read_opt(s, "noise_sigma_m", c.synth.noise_sigma_m, "synth");
    read_opt(s, "dropout_fraction", c.synth.dropout_fraction, "synth");
    read_opt(s, "sequence", c.synth.sequence, "synth");
    read_opt(s, "as_a0_mps2", c.synth.as_a0_mps2, "synth");
    read_opt(s, "as_s0_mps", c.synth.as_s0_mps, "synth");
    read_opt(s, "as_bins", c.synth.as_bins, "synth");
    read_opt(s, "as_noise_mps2", c.synth.as_noise_mps2, "synth");
    read_opt(s, "as_outliers", c.synth.as_outliers, "synth");
  }
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  RunConfig c;
  apply_json(c, j);
  return c;
}

/// The config as embedded in artifacts: input paths reduced to file names and
/// the output directory dropped, so artifacts do not depend on where they ran.
inline nlohmann::ordered_json embedded_config(const RunConfig& c) {
  auto j = to_json(c);
  j.erase("output_dir");
  for (const char* key : {"predictions", "ground_truth"}) {
    auto& arr = j[key];
    for (auto& v : arr) v = std::filesystem::path(v.get<std::string>()).filename().string();
  }
  return j;
}

inline std::string config_hash(const RunConfig& c) { return hex64(fnv1a64(embedded_config(c).dump())); }

}  // namespace kinprof
