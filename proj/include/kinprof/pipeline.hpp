#pragma once

// The batch commands behind the CLI: ingest, synth, kinematics, profile,
// evaluate and report. Each takes a resolved RunConfig, writes only below
// config.output_dir and returns the list of files it wrote.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kinprof/asprofile.hpp"
#include "kinprof/config.hpp"
#include "kinprof/ingest.hpp"
#include "kinprof/kinematics.hpp"
#include "kinprof/metrics.hpp"
#include "kinprof/report.hpp"
#include "kinprof/synth.hpp"

namespace kinprof {

class NoMatchError : public Error {
 public:
  using Error::Error;
};

struct CommandResult {
  std::vector<WrittenFile> files;
  std::vector<std::string> warnings;  // per-athlete failures, also recorded in the manifest
};

// ---------------------------------------------------------------------------
// Per-athlete evaluation

struct SignalMetrics {
  std::size_t n = 0;
  std::optional<double> mae, rmse, r, max_lag_r;
  std::optional<int> lag;
};

struct AthleteEvaluation {
  std::string athlete;  // sequence/ground-truth track
  std::string sequence;
  std::string predicted_track;
  std::string gt_track;
  std::size_t gt_frames = 0;
  std::size_t detected_frames = 0;
  SignalMetrics speed;
  SignalMetrics accel;
  ReliabilityScore reliability;
};

struct EvalSettings {
  int max_gap = 3;
  SmoothingConfig smoothing;
  KinematicsConfig kinematics;
  MaxLagOptions max_lag;
};

inline EvalSettings eval_settings(const RunConfig& c) { return {c.max_gap, c.smoothing, c.kinematics, c.max_lag}; }

inline FrameSignal speed_signal(const KinematicsSeries& s) {
  FrameSignal f;
  for (const auto& e : s.entries) {
    if (e.valid_speed) f.push(e.frame, e.speed_mps);
  }
  return f;
}

inline FrameSignal accel_signal(const KinematicsSeries& s) {
  FrameSignal f;
  for (const auto& e : s.entries) {
    if (e.valid_accel) f.push(e.frame, e.accel_mps2);
  }
  return f;
}

inline SignalMetrics signal_metrics(const FrameSignal& pred, const FrameSignal& ref, const MaxLagOptions& opts) {
  SignalMetrics m;
  const SignalPair pair = align(pred, ref);
  m.n = pair.size();
  if (m.n == 0) return m;
  const auto e = amplitude_errors(pair);
  m.mae = e.mae;
  m.rmse = e.rmse;
  try {
    m.r = pearson(pair);
  } catch (const UndefinedMetric&) {
  }
  try {
    const auto c = max_lag_r(pred, ref, opts);
    m.max_lag_r = c.r;
    m.lag = c.lag;
  } catch (const UndefinedMetric&) {
  }
  return m;
}

/// Prediction kinematics use the configured smoothing; ground truth uses the
/// same l_n with no smoothing.
inline AthleteEvaluation evaluate_athlete(const Trajectory& pred, const Trajectory& gt, const EvalSettings& s) {
  SmoothingConfig none = s.smoothing;
  none.method = SmoothingMethod::none;
  const auto ps = compute_kinematics(pred, s.max_gap, s.smoothing, s.kinematics);
  const auto gs = compute_kinematics(gt, s.max_gap, none, s.kinematics);

  AthleteEvaluation ev;
  ev.predicted_track = pred.id.track;
  ev.gt_track = gt.id.track;
  std::map<FrameIndex, bool> observed;
  for (const auto& p : pred.samples) {
    if (p.status == SampleStatus::observed) observed[p.frame] = true;
  }
  for (const auto& g : gt.samples) {
    if (g.status != SampleStatus::observed) continue;
    ++ev.gt_frames;
    ev.detected_frames += observed.count(g.frame);
  }
  const FrameSignal pv = speed_signal(ps), gv = speed_signal(gs);
  ev.speed = signal_metrics(pv, gv, s.max_lag);
  ev.accel = signal_metrics(accel_signal(ps), accel_signal(gs), s.max_lag);
  ev.reliability = reliability(align(pv, gv), ev.detected_frames, ev.gt_frames);
  return ev;
}

// ---------------------------------------------------------------------------
// Aggregation

struct MetricSummary {
  std::size_t athletes = 0;
  std::optional<MeanSd> visible_frames;
  std::optional<MeanSd> speed_mae, speed_rmse, speed_r, speed_max_lag_r;
  std::optional<MeanSd> accel_mae, accel_rmse, accel_r, accel_max_lag_r;
};

inline MetricSummary summarize(const std::vector<const AthleteEvaluation*>& evs) {
  MetricSummary s;
  s.athletes = evs.size();
  auto collect = [&](auto get) {
    std::vector<double> v;
    for (const auto* e : evs) {
      const std::optional<double> x = get(*e);
      if (x) v.push_back(*x);
    }
    return v;
  };
  auto plain = [&](auto get) { return mean_sd(collect(get)); };
  auto corr = [&](auto get) { return correlation_summary(collect(get)); };
  s.visible_frames = plain([](const AthleteEvaluation& e) { return std::optional<double>(e.detected_frames); });
  s.speed_mae = plain([](const AthleteEvaluation& e) { return e.speed.mae; });
  s.speed_rmse = plain([](const AthleteEvaluation& e) { return e.speed.rmse; });
  s.speed_r = corr([](const AthleteEvaluation& e) { return e.speed.r; });
  s.speed_max_lag_r = corr([](const AthleteEvaluation& e) { return e.speed.max_lag_r; });
  s.accel_mae = plain([](const AthleteEvaluation& e) { return e.accel.mae; });
  s.accel_rmse = plain([](const AthleteEvaluation& e) { return e.accel.rmse; });
  s.accel_r = corr([](const AthleteEvaluation& e) { return e.accel.r; });
  s.accel_max_lag_r = corr([](const AthleteEvaluation& e) { return e.accel.max_lag_r; });
  return s;
}

inline MetricSummary summarize(const std::vector<AthleteEvaluation>& evs) {
  std::vector<const AthleteEvaluation*> ptrs;
  for (const auto& e : evs) ptrs.push_back(&e);
  return summarize(ptrs);
}

inline nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline nlohmann::ordered_json to_json(const std::optional<MeanSd>& m) {
  if (!m) return nullptr;
  return {{"mean", m->mean}, {"sd", m->sd}, {"n", m->n}};
}

inline nlohmann::ordered_json to_json(const MetricSummary& s) {
  nlohmann::ordered_json j;
  j["athletes"] = s.athletes;
  j["visible_frames"] = to_json(s.visible_frames);
  j["speed"] = {{"mae", to_json(s.speed_mae)},
                {"rmse", to_json(s.speed_rmse)},
                {"r", to_json(s.speed_r)},
                {"max_lag_r", to_json(s.speed_max_lag_r)}};
  j["accel"] = {{"mae", to_json(s.accel_mae)},
                {"rmse", to_json(s.accel_rmse)},
                {"r", to_json(s.accel_r)},
                {"max_lag_r", to_json(s.accel_max_lag_r)}};
  return j;
}

inline nlohmann::ordered_json to_json(const SignalMetrics& m) {
  nlohmann::ordered_json j;
  j["n"] = m.n;
  j["mae"] = opt_json(m.mae);
  j["rmse"] = opt_json(m.rmse);
  j["r"] = opt_json(m.r);
  j["max_lag_r"] = opt_json(m.max_lag_r);
  j["lag_frames"] = m.lag ? nlohmann::ordered_json(*m.lag) : nlohmann::ordered_json(nullptr);
  return j;
}

inline nlohmann::ordered_json to_json(const AthleteEvaluation& e) {
  nlohmann::ordered_json j;
  j["athlete"] = e.athlete;
  j["sequence"] = e.sequence;
  j["predicted_track"] = e.predicted_track;
  j["ground_truth_track"] = e.gt_track;
  j["gt_frames"] = e.gt_frames;
  j["detected_frames"] = e.detected_frames;
  j["speed"] = to_json(e.speed);
  j["accel"] = to_json(e.accel);
  j["reliability"] = {{"R_c", opt_json(e.reliability.r_c)},
                      {"R_MAE", opt_json(e.reliability.r_mae)},
                      {"R_d", e.reliability.r_d},
                      {"R", opt_json(e.reliability.r)}};
  return j;
}

// ---------------------------------------------------------------------------
// Inputs

struct SequenceInput {
  std::string pred_file;
  std::string gt_file;
  TrajectorySet predictions;
  TrajectorySet ground_truth;
};

inline std::vector<TrajectorySet> load_predictions(const RunConfig& c) {
  if (c.predictions.empty()) throw ConfigError("no prediction inputs given");
  std::vector<TrajectorySet> out;
  for (const auto& p : c.predictions) {
    out.push_back(parse_trajectories(p, parse_format(c.format), c.pitch, c.frame_rate_hz));
  }
  return out;
}

inline std::vector<SequenceInput> load_pairs(const RunConfig& c) {
  if (c.predictions.empty()) throw ConfigError("no prediction inputs given");
  if (c.ground_truth.size() != c.predictions.size()) {
    throw ConfigError("need one ground-truth file per prediction file (" + std::to_string(c.predictions.size()) +
                      " predictions, " + std::to_string(c.ground_truth.size()) + " ground truth)");
  }
  std::vector<SequenceInput> out;
  for (std::size_t i = 0; i < c.predictions.size(); ++i) {
    SequenceInput in;
    in.pred_file = c.predictions[i];
    in.gt_file = c.ground_truth[i];
    in.predictions = parse_trajectories(c.predictions[i], parse_format(c.format), c.pitch, c.frame_rate_hz);
    in.ground_truth = parse_trajectories(c.ground_truth[i], parse_format(c.gt_format), c.pitch, c.frame_rate_hz);
    out.push_back(std::move(in));
  }
  return out;
}

inline std::string athlete_key(const std::string& sequence, const std::string& track) { return sequence + "/" + track; }

inline std::string file_name(const std::string& path) { return std::filesystem::path(path).filename().string(); }

inline nlohmann::ordered_json run_header(const std::string& command, const RunConfig& c) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config_hash"] = config_hash(c);
  j["config"] = embedded_config(c);
  return j;
}

// ---------------------------------------------------------------------------
// ingest

inline CommandResult run_ingest(const RunConfig& c) {
  c.validate();
  OutputDir out(c.output_dir);
  CommandResult res;
  auto manifest = run_header("ingest", c);
  auto inputs = nlohmann::ordered_json::array();
  auto ingest_one = [&](const std::string& path, const std::string& format, const std::string& role) {
    const auto set = parse_trajectories(path, parse_format(format), c.pitch, c.frame_rate_hz);
    const std::string rel = "ingest/" + safe_name(role + "_" + std::filesystem::path(path).stem().string()) + ".jsonl";
    std::ostringstream os;
    write_normalized_jsonl(os, set);
    out.write(rel, os.str());
    auto tracks = nlohmann::ordered_json::array();
    for (const auto& t : set.tracks) {
      std::size_t missing = 0;
      for (const auto& s : t.samples) missing += !s.present();
      tracks.push_back({{"track", t.id.track},
                        {"first_frame", t.samples.front().frame},
                        {"last_frame", t.samples.back().frame},
                        {"observed", t.observed_count()},
                        {"missing", missing},
                        {"segments", segment(t, c.max_gap).size()}});
    }
    inputs.push_back({{"role", role},
                      {"file", file_name(path)},
                      {"sequence", set.sequence_id},
                      {"frame_count", set.clock.frame_count()},
                      {"output", rel},
                      {"tracks", std::move(tracks)}});
    return set;
  };
  std::vector<TrajectorySet> preds, gts;
  for (const auto& p : c.predictions) preds.push_back(ingest_one(p, c.format, "predictions"));
  for (const auto& g : c.ground_truth) gts.push_back(ingest_one(g, c.gt_format, "ground_truth"));
  manifest["inputs"] = std::move(inputs);

  if (!gts.empty()) {
    if (gts.size() != preds.size()) throw ConfigError("need one ground-truth file per prediction file");
    std::ostringstream csv;
    csv << "# config_hash: " << config_hash(c) << "\n";
    csv << "sequence,predicted_track,ground_truth_track,overlap_frames,mean_distance_m\n";
    for (std::size_t i = 0; i < preds.size(); ++i) {
      for (const auto& m : match_tracks(preds[i], gts[i], c.match)) {
        csv << preds[i].sequence_id << ',' << m.predicted_id << ',' << m.ground_truth_id << ',' << m.overlap_frames
            << ',' << format_number(m.mean_distance_m) << '\n';
      }
    }
    out.write("ingest/matches.csv", csv.str());
  }
  manifest["files"] = to_json(out.files());
  out.write_json("ingest_manifest.json", manifest);
  res.files = out.files();
  return res;
}

// ---------------------------------------------------------------------------
// synth

inline std::uint64_t athlete_seed(std::uint64_t seed, std::size_t i) {
  return fnv1a64(std::to_string(seed) + ":" + std::to_string(i));
}

inline CommandResult run_synth(const RunConfig& c) {
  c.validate();
  OutputDir out(c.output_dir);
  CommandResult res;
  auto manifest = run_header("synth", c);
  const std::string seq = c.synth.sequence;

  if (c.synth.kind == "as_points") {
    ASDatasetSpec spec;
    spec.a0_mps2 = c.synth.as_a0_mps2;
    spec.s0_mps = c.synth.as_s0_mps;
    spec.bins = c.synth.as_bins;
    spec.min_speed_mps = c.profile.min_speed_mps;
    spec.bin_width_mps = c.profile.bin_width_mps;
    spec.noise_sigma_mps2 = c.synth.as_noise_mps2;
    spec.outliers = c.synth.as_outliers;
    spec.seed = c.seed;
    const auto ds = synthesize_as_dataset(spec);
    nlohmann::ordered_json j;
    j["config_hash"] = config_hash(c);
    j["A0_mps2"] = ds.a0_mps2;
    j["S0_mps"] = ds.s0_mps;
    j["outlier_indices"] = ds.outlier_indices;
    auto pts = nlohmann::ordered_json::array();
    for (const auto& p : ds.points) {
      pts.push_back({{"frame", p.frame}, {"speed_mps", p.speed_mps}, {"accel_mps2", p.accel_mps2}});
    }
    j["points"] = std::move(pts);
    out.write_json(safe_name(seq) + "_as_points.json", j);
  } else {
    const MotionKind kind = parse_motion_kind(c.synth.kind);
    TrajectorySet gt_set{seq, FrameClock{}, {}}, pred_set{seq, FrameClock{}, {}};
    nlohmann::ordered_json sidecar;
    sidecar["config_hash"] = config_hash(c);
    auto athletes = nlohmann::ordered_json::array();
    const std::size_t n = c.synth.athletes;
    for (std::size_t i = 0; i < n; ++i) {
      MotionScenario sc;
      sc.kind = kind;
      sc.duration_s = c.synth.duration_s;
      sc.frame_rate_hz = c.frame_rate_hz;
      sc.noise_sigma_m = c.synth.noise_sigma_m;
      sc.seed = athlete_seed(c.seed, i);
      sc.track = std::to_string(i + 1);
      const double lane = -25.0 + 50.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      sc.origin = kind == MotionKind::piecewise_sprint ? Vec2{0.0, lane} : Vec2{-30.0, lane};
      const auto frames = static_cast<FrameIndex>(std::llround(sc.duration_s * sc.frame_rate_hz));
      const auto drop = static_cast<FrameIndex>(std::llround(c.synth.dropout_fraction * static_cast<double>(frames)));
      if (drop > 0) {
        SynthRng rng(sc.seed ^ 0x9e3779b97f4a7c15ULL);
        const FrameIndex start = 1 + static_cast<FrameIndex>(rng.uniform() * static_cast<double>(frames - drop + 1));
        sc.gaps.push_back({std::min(start, frames - drop + 1), drop});
      }
      const auto m = generate(sc);
      Trajectory gt = m.clean;
      Trajectory pred = m.trajectory;
      pred.id.track = std::to_string(101 + i);
      gt_set.clock = gt.clock;
      pred_set.clock = pred.clock;
      gt_set.tracks.push_back(std::move(gt));
      pred_set.tracks.push_back(std::move(pred));
      auto side = analytic_sidecar(sc, m);
      side["ground_truth_track"] = sc.track;
      side["predicted_track"] = std::to_string(101 + i);
      athletes.push_back(std::move(side));
    }
    sidecar["athletes"] = std::move(athletes);
    std::ostringstream g, p;
    write_normalized_jsonl(g, gt_set);
    write_normalized_jsonl(p, pred_set);
    out.write(safe_name(seq) + "_gt.jsonl", g.str());
    out.write(safe_name(seq) + "_pred.jsonl", p.str());
    out.write_json(safe_name(seq) + "_analytic.json", sidecar);
  }
  manifest["files"] = to_json(out.files());
  out.write_json("synth_manifest.json", manifest);
  res.files = out.files();
  return res;
}

// ---------------------------------------------------------------------------
// kinematics

inline CommandResult run_kinematics(const RunConfig& c) {
  c.validate();
  const auto sets = load_predictions(c);
  OutputDir out(c.output_dir);
  CommandResult res;
  const std::string hash = config_hash(c);
  auto manifest = run_header("kinematics", c);
  auto athletes = nlohmann::ordered_json::array();
  auto errors = nlohmann::ordered_json::array();
  for (std::size_t f = 0; f < sets.size(); ++f) {
    const auto& set = sets[f];
    for (const auto& t : set.tracks) {
      const std::string id = athlete_key(set.sequence_id, t.id.track);
      try {
        auto series = compute_kinematics(t, c.max_gap, c.smoothing, c.kinematics);
        series.athlete = id;
        const std::string rel = "kinematics/" + safe_name(set.sequence_id) + "__" + safe_name(t.id.track) + ".csv";
        out.write(rel, kinematics_csv(series, hash));
        auto segs = nlohmann::ordered_json::array();
        for (const auto& [a, b] : series.segments) segs.push_back({a, b});
        athletes.push_back({{"athlete", id},
                            {"source", file_name(c.predictions[f])},
                            {"csv", rel},
                            {"rows", series.entries.size()},
                            {"segments", std::move(segs)},
                            {"singleton_frames", series.singleton_frames}});
      } catch (const Error& e) {
        errors.push_back({{"athlete", id}, {"error", e.what()}});
        res.warnings.push_back(id + ": " + e.what());
      }
    }
  }
  manifest["athletes"] = std::move(athletes);
  manifest["errors"] = std::move(errors);
  manifest["files"] = to_json(out.files());
  out.write_json("kinematics_manifest.json", manifest);
  res.files = out.files();
  return res;
}

// ---------------------------------------------------------------------------
// profile

/// Inclusive frame bounds of `windows` equal consecutive parts of [first, last].
inline std::vector<std::pair<FrameIndex, FrameIndex>> split_windows(FrameIndex first, FrameIndex last, int windows) {
  std::vector<std::pair<FrameIndex, FrameIndex>> out;
  const FrameIndex len = last - first + 1;
  for (int w = 0; w < windows; ++w) {
    const FrameIndex a = first + len * w / windows;
    const FrameIndex b = first + len * (w + 1) / windows - 1;
    out.emplace_back(a, b);
  }
  return out;
}

struct WindowProfile {
  int window = 0;
  FrameIndex from = 0, to = 0;
  std::optional<ASProfile> profile;
  std::optional<DegenerateReason> reason;
  std::string detail;
  std::size_t selected = 0;
};

inline WindowProfile profile_window(std::span<const ASSample> samples, const ASProfileConfig& cfg) {
  WindowProfile w;
  const auto pts = select_points(samples, cfg);
  w.selected = pts.size();
  try {
    w.profile = fit_profile(pts, cfg);
  } catch (const DegenerateProfile& e) {
    w.reason = e.reason();
    w.detail = e.what();
  }
  return w;
}

inline nlohmann::ordered_json window_json(const std::string& athlete, const WindowProfile& w, const std::string& hash) {
  nlohmann::ordered_json j;
  j["config_hash"] = hash;
  j["athlete"] = athlete;
  j["window"] = w.window;
  j["frames"] = {w.from, w.to};
  if (w.profile) {
    const auto pj = to_json(*w.profile);
    for (const auto& item : pj.items()) j[item.key()] = item.value();
  } else {
    j["status"] = "degenerate";
    j["reason"] = reason_code(*w.reason);
    j["detail"] = w.detail;
    j["points_selected"] = w.selected;
  }
  return j;
}

inline std::vector<ASSample> load_as_points(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path, e.what());
  }
  if (!j.contains("points") || !j["points"].is_array()) throw ParseError(path, "missing 'points' array");
  std::vector<ASSample> out;
  std::size_t i = 0;
  for (const auto& p : j["points"]) {
    ++i;
    if (!p.contains("speed_mps") || !p.contains("accel_mps2") || !p["speed_mps"].is_number() ||
        !p["accel_mps2"].is_number()) {
      throw ParseError(path + ":points[" + std::to_string(i - 1) + "]", "needs numeric speed_mps and accel_mps2");
    }
    const FrameIndex frame = p.contains("frame") ? p["frame"].get<FrameIndex>() : static_cast<FrameIndex>(i);
    out.push_back({frame, p["speed_mps"].get<double>(), p["accel_mps2"].get<double>(), true});
  }
  return out;
}

/// Profiles every athlete of the prediction inputs (or the given point files)
/// over `profile_windows` equal frame windows.
inline CommandResult run_profile(const RunConfig& c, const std::vector<std::string>& point_files = {}) {
  c.validate();
  OutputDir out(c.output_dir);
  CommandResult res;
  const std::string hash = config_hash(c);
  auto manifest = run_header("profile", c);
  auto athletes = nlohmann::ordered_json::array();
  auto errors = nlohmann::ordered_json::array();

  auto emit = [&](const std::string& id, const std::string& stem, const std::vector<WindowProfile>& ws) {
    nlohmann::ordered_json a;
    a["athlete"] = id;
    auto wj = nlohmann::ordered_json::array();
    for (const auto& w : ws) {
      const std::string base = "profiles/" + stem + "_w" + std::to_string(w.window);
      out.write_json(base + ".json", window_json(id, w, hash));
      nlohmann::ordered_json e{{"window", w.window}, {"frames", {w.from, w.to}}, {"json", base + ".json"}};
      if (w.profile) {
        const std::string title = id + " window " + std::to_string(w.window) + " (frames " + std::to_string(w.from) +
                                  "-" + std::to_string(w.to) + ")";
        out.write(base + ".svg", profile_svg(*w.profile, title, hash));
        e["status"] = "ok";
        e["A0_mps2"] = w.profile->a0_mps2;
        e["S0_mps"] = w.profile->s0_mps;
        e["slope_per_s"] = w.profile->slope;
        e["svg"] = base + ".svg";
      } else {
        e["status"] = "degenerate";
        e["reason"] = reason_code(*w.reason);
      }
      wj.push_back(std::move(e));
    }
    a["windows"] = std::move(wj);
    auto deltas = nlohmann::ordered_json::array();
    for (std::size_t i = 1; i < ws.size(); ++i) {
      if (!ws[i - 1].profile || !ws[i].profile) continue;
      const auto d = compare_profiles(*ws[i - 1].profile, *ws[i].profile);
      deltas.push_back({{"from_window", ws[i - 1].window},
                        {"to_window", ws[i].window},
                        {"d_A0_mps2", d.d_a0},
                        {"d_S0_mps", d.d_s0},
                        {"d_slope_per_s", d.d_slope}});
    }
    a["deltas"] = std::move(deltas);
    athletes.push_back(std::move(a));
  };

  if (!point_files.empty()) {
    for (const auto& pf : point_files) {
      const auto samples = load_as_points(pf);
      WindowProfile w = profile_window(samples, c.profile);
      w.window = 1;
      if (!samples.empty()) {
        w.from = samples.front().frame;
        w.to = samples.back().frame;
      }
      const std::string stem = safe_name(std::filesystem::path(pf).stem().string());
      emit(stem, stem, {w});
    }
  } else {
    for (const auto& set : load_predictions(c)) {
      for (const auto& t : set.tracks) {
        const std::string id = athlete_key(set.sequence_id, t.id.track);
        try {
          const auto series = compute_kinematics(t, c.max_gap, c.smoothing, c.kinematics);
          if (series.entries.empty()) throw ValidationError("no kinematics (all segments shorter than 2 frames)");
          std::vector<WindowProfile> ws;
          int idx = 0;
          for (const auto& [a, b] : split_windows(series.entries.front().frame, series.entries.back().frame,
                                                  c.profile_windows)) {
            const auto samples = as_samples(series, a, b);
            WindowProfile w = profile_window(samples, c.profile);
            w.window = ++idx;
            w.from = a;
            w.to = b;
            ws.push_back(std::move(w));
          }
          emit(id, safe_name(set.sequence_id) + "__" + safe_name(t.id.track), ws);
        } catch (const Error& e) {
          errors.push_back({{"athlete", id}, {"error", e.what()}});
          res.warnings.push_back(id + ": " + e.what());
        }
      }
    }
  }
  manifest["athletes"] = std::move(athletes);
  manifest["errors"] = std::move(errors);
  manifest["files"] = to_json(out.files());
  out.write_json("profile_manifest.json", manifest);
  res.files = out.files();
  return res;
}

// ---------------------------------------------------------------------------
// evaluate

struct MatchedSequence {
  std::string sequence;
  std::string pred_file, gt_file;
  std::size_t predicted_tracks = 0, gt_tracks = 0;
  std::vector<TrackMatch> matches;
  std::vector<std::string> unmatched_predicted, unmatched_gt;
};

struct Evaluation {
  std::vector<MatchedSequence> sequences;
  std::vector<AthleteEvaluation> athletes;
};

inline std::vector<MatchedSequence> match_all(const std::vector<SequenceInput>& inputs, const MatchOptions& opts) {
  std::vector<MatchedSequence> out;
  for (const auto& in : inputs) {
    MatchedSequence m;
    m.sequence = in.ground_truth.sequence_id;
    m.pred_file = file_name(in.pred_file);
    m.gt_file = file_name(in.gt_file);
    m.predicted_tracks = in.predictions.tracks.size();
    m.gt_tracks = in.ground_truth.tracks.size();
    m.matches = match_tracks(in.predictions, in.ground_truth, opts);
    for (const auto& t : in.predictions.tracks) {
      if (std::none_of(m.matches.begin(), m.matches.end(),
                       [&](const TrackMatch& x) { return x.predicted_id == t.id.track; })) {
        m.unmatched_predicted.push_back(t.id.track);
      }
    }
    for (const auto& t : in.ground_truth.tracks) {
      if (std::none_of(m.matches.begin(), m.matches.end(),
                       [&](const TrackMatch& x) { return x.ground_truth_id == t.id.track; })) {
        m.unmatched_gt.push_back(t.id.track);
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

inline std::vector<AthleteEvaluation> evaluate_matched(const std::vector<SequenceInput>& inputs,
                                                       const std::vector<MatchedSequence>& matched,
                                                       const EvalSettings& s) {
  std::vector<AthleteEvaluation> out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (const auto& m : matched[i].matches) {
      auto ev = evaluate_athlete(*inputs[i].predictions.find(m.predicted_id),
                                 *inputs[i].ground_truth.find(m.ground_truth_id), s);
      ev.sequence = matched[i].sequence;
      ev.athlete = athlete_key(ev.sequence, m.ground_truth_id);
      out.push_back(std::move(ev));
    }
  }
  std::sort(out.begin(), out.end(), [](const AthleteEvaluation& a, const AthleteEvaluation& b) {
    if (a.sequence != b.sequence) return a.sequence < b.sequence;
    return detail::track_less(a.gt_track, b.gt_track);
  });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].athlete == out[i - 1].athlete) {
      throw ValidationError("athlete id '" + out[i].athlete + "' occurs twice; sequence ids must be unique across inputs");
    }
  }
  return out;
}

namespace detail {

inline std::string cell(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

inline std::string mean_cell(const std::optional<MeanSd>& m) { return m ? format_number(m->mean) : std::string(); }

inline std::string sd_cell(const std::optional<MeanSd>& m) { return m ? format_number(m->sd) : std::string(); }

}  // namespace detail

inline std::string athletes_csv(const std::vector<AthleteEvaluation>& evs, const std::string& hash) {
  using detail::cell;
  std::ostringstream o;
  o << "# config_hash: " << hash << "\n";
  o << "athlete,predicted_track,gt_frames,detected_frames,speed_n,speed_mae,speed_rmse,speed_r,speed_max_lag_r,"
       "speed_lag,accel_n,accel_mae,accel_rmse,accel_r,accel_max_lag_r,accel_lag,R_c,R_MAE,R_d,R\n";
  for (const auto& e : evs) {
    o << e.athlete << ',' << e.predicted_track << ',' << e.gt_frames << ',' << e.detected_frames;
    for (const SignalMetrics* m : {&e.speed, &e.accel}) {
      o << ',' << m->n << ',' << cell(m->mae) << ',' << cell(m->rmse) << ',' << cell(m->r) << ','
        << cell(m->max_lag_r) << ',' << (m->lag ? std::to_string(*m->lag) : std::string());
    }
    o << ',' << cell(e.reliability.r_c) << ',' << cell(e.reliability.r_mae) << ',' << format_number(e.reliability.r_d)
      << ',' << cell(e.reliability.r) << '\n';
  }
  return o.str();
}

struct ReliabilityStrata {
  Strata strata;
  std::vector<std::string> undefined;
  MetricSummary top, bottom;
};

inline ReliabilityStrata reliability_strata(const std::vector<AthleteEvaluation>& evs, double fraction) {
  ReliabilityStrata r;
  std::vector<RankedAthlete> ranked;
  std::map<std::string, const AthleteEvaluation*> by_id;
  for (const auto& e : evs) {
    by_id[e.athlete] = &e;
    if (e.reliability.defined()) {
      ranked.push_back({e.athlete, *e.reliability.r});
    } else {
      r.undefined.push_back(e.athlete);
    }
  }
  if (ranked.empty()) return r;
  r.strata = stratify(ranked, fraction);
  std::vector<const AthleteEvaluation*> top, bottom;
  for (const auto& a : r.strata.top) top.push_back(by_id.at(a.athlete));
  for (const auto& a : r.strata.bottom) bottom.push_back(by_id.at(a.athlete));
  r.top = summarize(top);
  r.bottom = summarize(bottom);
  return r;
}

inline std::string table3_csv(const ReliabilityStrata& r, double frame_rate, const std::string& hash) {
  using detail::mean_cell;
  using detail::sd_cell;
  std::ostringstream o;
  o << "# config_hash: " << hash << "\n";
  o << "# correlations are Fisher-z means; sd is across athletes\n";
  o << "section,metric,top_mean,top_sd,bottom_mean,bottom_sd\n";
  o << "athletes,count," << r.top.athletes << ",," << r.bottom.athletes << ",\n";
  auto row = [&](const char* section, const char* metric, const std::optional<MeanSd>& t,
                 const std::optional<MeanSd>& b) {
    o << section << ',' << metric << ',' << mean_cell(t) << ',' << sd_cell(t) << ',' << mean_cell(b) << ','
      << sd_cell(b) << '\n';
  };
  row("visibility", "visible_frames", r.top.visible_frames, r.bottom.visible_frames);
  auto seconds = [&](std::optional<MeanSd> m) {
    if (m) {
      m->mean /= frame_rate;
      m->sd /= frame_rate;
    }
    return m;
  };
  row("visibility", "visible_seconds", seconds(r.top.visible_frames), seconds(r.bottom.visible_frames));
  row("speed", "pearson_r", r.top.speed_r, r.bottom.speed_r);
  row("speed", "mae", r.top.speed_mae, r.bottom.speed_mae);
  row("speed", "rmse", r.top.speed_rmse, r.bottom.speed_rmse);
  row("acceleration", "pearson_r", r.top.accel_r, r.bottom.accel_r);
  row("acceleration", "mae", r.top.accel_mae, r.bottom.accel_mae);
  row("acceleration", "rmse", r.top.accel_rmse, r.bottom.accel_rmse);
  return o.str();
}

struct AblationCell {
  std::string filter;
  int l_n = 0;
  MetricSummary summary;
};

inline std::vector<AblationCell> run_ablation(const std::vector<SequenceInput>& inputs,
                                              const std::vector<MatchedSequence>& matched, const RunConfig& c) {
  std::vector<AblationCell> cells;
  for (int l : c.ablation_windows) {
    for (const auto& f : c.ablation_filters) {
      EvalSettings s = eval_settings(c);
      s.smoothing.method = parse_smoothing_method(f);
      s.kinematics.l_n = l;
      cells.push_back({f, l, summarize(evaluate_matched(inputs, matched, s))});
    }
  }
  return cells;
}

inline std::string table1_csv(const std::vector<AblationCell>& cells, const std::string& hash) {
  using detail::mean_cell;
  std::ostringstream o;
  o << "# config_hash: " << hash << "\n";
  o << "# means across athletes; correlations are Fisher-z means\n";
  o << "l_n,filter,athletes,speed_mae,speed_rmse,speed_r,speed_max_lag_r,accel_mae,accel_rmse,accel_r,"
       "accel_max_lag_r\n";
  for (const auto& c : cells) {
    const auto& s = c.summary;
    o << c.l_n << ',' << c.filter << ',' << s.athletes << ',' << mean_cell(s.speed_mae) << ','
      << mean_cell(s.speed_rmse) << ',' << mean_cell(s.speed_r) << ',' << mean_cell(s.speed_max_lag_r) << ','
      << mean_cell(s.accel_mae) << ',' << mean_cell(s.accel_rmse) << ',' << mean_cell(s.accel_r) << ','
      << mean_cell(s.accel_max_lag_r) << '\n';
  }
  return o.str();
}

/// Temporal span of the differencing window: 2 * l_n + 1 frames.
inline double temporal_window_s(int l_n, double frame_rate) { return (2.0 * l_n + 1.0) / frame_rate; }

inline std::string table2_csv(const std::vector<AblationCell>& cells, const std::string& filter, double frame_rate,
                              const std::string& hash) {
  using detail::mean_cell;
  using detail::sd_cell;
  std::ostringstream o;
  o << "# config_hash: " << hash << "\n";
  o << "# filter: " << filter << "; mean and sd across athletes; correlations are Fisher-z means\n";
  o << "l_n,temporal_window_s,athletes";
  for (const char* sig : {"speed", "accel"}) {
    for (const char* m : {"mae", "rmse", "r", "max_lag_r"}) o << ',' << sig << '_' << m << "_mean," << sig << '_' << m << "_sd";
  }
  o << '\n';
  for (const auto& c : cells) {
    if (c.filter != filter) continue;
    const auto& s = c.summary;
    o << c.l_n << ',' << format_number(temporal_window_s(c.l_n, frame_rate)) << ',' << s.athletes;
    for (const auto* m : {&s.speed_mae, &s.speed_rmse, &s.speed_r, &s.speed_max_lag_r, &s.accel_mae, &s.accel_rmse,
                          &s.accel_r, &s.accel_max_lag_r}) {
      o << ',' << mean_cell(*m) << ',' << sd_cell(*m);
    }
    o << '\n';
  }
  return o.str();
}

inline CommandResult run_evaluate(const RunConfig& c) {
  c.validate();
  const auto inputs = load_pairs(c);
  const auto matched = match_all(inputs, c.match);
  std::size_t total = 0;
  for (const auto& m : matched) total += m.matches.size();
  if (total == 0) {
    std::string msg = "no predicted track matched any ground-truth track (gate " + format_number(c.match.gate_m) +
                      " m, min overlap " + std::to_string(c.match.min_overlap_frames) + " frames)";
    throw NoMatchError(msg);
  }
  const auto evs = evaluate_matched(inputs, matched, eval_settings(c));

  OutputDir out(c.output_dir);
  CommandResult res;
  const std::string hash = config_hash(c);
  auto report = run_header("evaluate", c);

  auto seqs = nlohmann::ordered_json::array();
  for (const auto& m : matched) {
    auto mj = nlohmann::ordered_json::array();
    for (const auto& x : m.matches) {
      mj.push_back({{"predicted_track", x.predicted_id},
                    {"ground_truth_track", x.ground_truth_id},
                    {"overlap_frames", x.overlap_frames},
                    {"mean_distance_m", x.mean_distance_m}});
    }
    seqs.push_back({{"sequence", m.sequence},
                    {"predictions_file", m.pred_file},
                    {"ground_truth_file", m.gt_file},
                    {"predicted_tracks", m.predicted_tracks},
                    {"ground_truth_tracks", m.gt_tracks},
                    {"matched", m.matches.size()},
                    {"unmatched_predicted", m.unmatched_predicted},
                    {"unmatched_ground_truth", m.unmatched_gt},
                    {"matches", std::move(mj)}});
  }
  report["sequences"] = std::move(seqs);
  auto aj = nlohmann::ordered_json::array();
  for (const auto& e : evs) aj.push_back(to_json(e));
  report["athletes"] = std::move(aj);
  report["aggregate"] = to_json(summarize(evs));

  const auto strata = reliability_strata(evs, c.stratify_fraction);
  auto ids = [](const std::vector<RankedAthlete>& v) {
    auto a = nlohmann::ordered_json::array();
    for (const auto& x : v) a.push_back({{"athlete", x.athlete}, {"R", x.score}});
    return a;
  };
  report["reliability"] = {{"fraction", c.stratify_fraction},
                           {"undefined", strata.undefined},
                           {"top", ids(strata.strata.top)},
                           {"bottom", ids(strata.strata.bottom)},
                           {"top_summary", to_json(strata.top)},
                           {"bottom_summary", to_json(strata.bottom)}};

  out.write("athletes.csv", athletes_csv(evs, hash));
  out.write("table3_reliability.csv", table3_csv(strata, c.frame_rate_hz, hash));
  if (c.ablation) {
    const auto cells = run_ablation(inputs, matched, c);
    out.write("table1_filter.csv", table1_csv(cells, hash));
    out.write("table2_window.csv", table2_csv(cells, to_string(c.smoothing.method), c.frame_rate_hz, hash));
    auto cj = nlohmann::ordered_json::array();
    for (const auto& cell : cells) {
      cj.push_back({{"filter", cell.filter}, {"l_n", cell.l_n}, {"summary", to_json(cell.summary)}});
    }
    report["ablation"] = std::move(cj);
  }
  report["files"] = to_json(out.files());
  out.write_json("evaluation.json", report);
  res.files = out.files();
  return res;
}

// ---------------------------------------------------------------------------
// report

namespace detail {

inline std::string md_num(const nlohmann::json& v, int digits = 3) {
  if (v.is_null()) return "n/a";
  return fixed(v.get<double>(), digits);
}

inline std::string md_mean_sd(const nlohmann::json& v) {
  if (v.is_null()) return "n/a";
  return fixed(v["mean"].get<double>(), 3) + " ± " + fixed(v["sd"].get<double>(), 3);
}

inline nlohmann::json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ParseError(p.string(), "cannot open file");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(p.string(), e.what());
  }
}

}  // namespace detail

/// Renders report.md from evaluation.json and/or profile_manifest.json found
/// in `input_dir`, written to the output directory.
inline CommandResult run_report(const RunConfig& c, const std::filesystem::path& input_dir) {
  c.validate();
  using detail::md_mean_sd;
  using detail::md_num;
  const auto eval_path = input_dir / "evaluation.json";
  const auto prof_path = input_dir / "profile_manifest.json";
  const bool has_eval = std::filesystem::exists(eval_path);
  const bool has_prof = std::filesystem::exists(prof_path);
  if (!has_eval && !has_prof) {
    throw ParseError(input_dir.string(), "neither evaluation.json nor profile_manifest.json found");
  }
  std::ostringstream md;
  md << "# Kinematics report\n\n";
  md << "Report config hash: `" << config_hash(c) << "`\n\n";

  if (has_eval) {
    const auto ev = detail::read_json_file(eval_path);
    md << "## Evaluation\n\n";
    md << "Evaluation config hash: `" << ev["config_hash"].get<std::string>() << "`\n\n";
    md << "| sequence | predicted tracks | ground-truth tracks | matched |\n|---|---|---|---|\n";
    for (const auto& s : ev["sequences"]) {
      md << "| " << s["sequence"].get<std::string>() << " | " << s["predicted_tracks"] << " | "
         << s["ground_truth_tracks"] << " | " << s["matched"] << " |\n";
    }
    const auto& ag = ev["aggregate"];
    md << "\n### Aggregate (" << ag["athletes"] << " athletes)\n\n";
    md << "| signal | MAE | RMSE | r | max-lag r |\n|---|---|---|---|---|\n";
    for (const char* sig : {"speed", "accel"}) {
      const auto& g = ag[sig];
      md << "| " << sig << " | " << md_mean_sd(g["mae"]) << " | " << md_mean_sd(g["rmse"]) << " | "
         << md_mean_sd(g["r"]) << " | " << md_mean_sd(g["max_lag_r"]) << " |\n";
    }
    const auto& rel = ev["reliability"];
    md << "\n### Reliability strata (fraction " << md_num(rel["fraction"], 2) << ")\n\n";
    md << "| metric | top | bottom |\n|---|---|---|\n";
    md << "| athletes | " << rel["top_summary"]["athletes"] << " | " << rel["bottom_summary"]["athletes"] << " |\n";
    md << "| visible frames | " << md_mean_sd(rel["top_summary"]["visible_frames"]) << " | "
       << md_mean_sd(rel["bottom_summary"]["visible_frames"]) << " |\n";
    for (const char* sig : {"speed", "accel"}) {
      for (const char* m : {"r", "mae", "rmse"}) {
        md << "| " << sig << ' ' << m << " | " << md_mean_sd(rel["top_summary"][sig][m]) << " | "
           << md_mean_sd(rel["bottom_summary"][sig][m]) << " |\n";
      }
    }
    if (!rel["undefined"].empty()) {
      md << "\nReliability undefined for " << rel["undefined"].size() << " athlete(s).\n";
    }
    md << "\n### Athletes\n\n| athlete | speed MAE | speed r | accel MAE | accel r | R |\n|---|---|---|---|---|---|\n";
    for (const auto& a : ev["athletes"]) {
      md << "| " << a["athlete"].get<std::string>() << " | " << md_num(a["speed"]["mae"]) << " | "
         << md_num(a["speed"]["r"]) << " | " << md_num(a["accel"]["mae"]) << " | " << md_num(a["accel"]["r"])
         << " | " << md_num(a["reliability"]["R"]) << " |\n";
    }
    if (ev.contains("ablation")) {
      md << "\n### Ablation (means)\n\n| l_n | filter | speed MAE | speed r | accel MAE | accel r |\n"
            "|---|---|---|---|---|---|\n";
      for (const auto& cell : ev["ablation"]) {
        const auto& s = cell["summary"];
        auto mean = [](const nlohmann::json& v) { return v.is_null() ? nlohmann::json() : v["mean"]; };
        md << "| " << cell["l_n"] << " | " << cell["filter"].get<std::string>() << " | "
           << md_num(mean(s["speed"]["mae"])) << " | " << md_num(mean(s["speed"]["r"])) << " | "
           << md_num(mean(s["accel"]["mae"])) << " | " << md_num(mean(s["accel"]["r"])) << " |\n";
      }
    }
    md << '\n';
  }

  if (has_prof) {
    const auto pm = detail::read_json_file(prof_path);
    md << "## A-S profiles\n\n";
    md << "Profile config hash: `" << pm["config_hash"].get<std::string>() << "`\n\n";
    md << "| athlete | window | frames | status | A0 (m/s²) | S0 (m/s) | slope (1/s) |\n|---|---|---|---|---|---|---|\n";
    for (const auto& a : pm["athletes"]) {
      for (const auto& w : a["windows"]) {
        const bool ok = w["status"] == "ok";
        md << "| " << a["athlete"].get<std::string>() << " | " << w["window"] << " | " << w["frames"][0] << "-"
           << w["frames"][1] << " | " << (ok ? std::string("ok") : w["reason"].get<std::string>()) << " | "
           << (ok ? md_num(w["A0_mps2"], 2) : "") << " | " << (ok ? md_num(w["S0_mps"], 2) : "") << " | "
           << (ok ? md_num(w["slope_per_s"], 3) : "") << " |\n";
      }
    }
    bool any_delta = false;
    for (const auto& a : pm["athletes"]) {
      for (const auto& d : a["deltas"]) {
        if (!any_delta) md << "\n| athlete | windows | ΔA0 (m/s²) | ΔS0 (m/s) | Δslope (1/s) |\n|---|---|---|---|---|\n";
        any_delta = true;
        md << "| " << a["athlete"].get<std::string>() << " | " << d["from_window"] << " → " << d["to_window"] << " | "
           << md_num(d["d_A0_mps2"]) << " | " << md_num(d["d_S0_mps"]) << " | " << md_num(d["d_slope_per_s"]) << " |\n";
      }
    }
    md << '\n';
  }

  OutputDir out(c.output_dir);
  out.write("report.md", md.str());
  CommandResult res;
  res.files = out.files();
  return res;
}

}  // namespace kinprof
