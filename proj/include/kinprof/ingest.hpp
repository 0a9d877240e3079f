#pragma once

// Trajectory file readers/writers and predicted-to-ground-truth track matching.
//
// normalized_jsonl: one detection per line,
//   {"sequence": str, "frame": int >= 1, "track": str|int, "x": m, "y": m,
//    "role"?: str, "team"?: str, "jersey"?: str|int}
// A (track, frame) pair with no record is a missing sample.
//
// gsr_json: a game-state-reconstruction prediction/label file with "images"
// and "annotations" arrays; see docs/formats.md.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kinprof/assignment.hpp"
#include "kinprof/data_model.hpp"

namespace kinprof {

enum class TrajectoryFormat { gsr_json, normalized_jsonl };

inline TrajectoryFormat parse_format(const std::string& name) {
  if (name == "gsr_json") return TrajectoryFormat::gsr_json;
  if (name == "normalized_jsonl" || name == "jsonl") return TrajectoryFormat::normalized_jsonl;
  throw ConfigError("unknown trajectory format '" + name + "'");
}

struct SequenceBundle {
  std::string sequence_id;
  TrajectorySet predictions;
  std::optional<TrajectorySet> ground_truth;
  FrameClock clock;
};

struct TrackMatch {
  std::string predicted_id;
  std::string ground_truth_id;
  std::size_t overlap_frames = 0;
  double mean_distance_m = 0.0;
};

struct MatchOptions {
  double gate_m = 3.0;
  std::size_t min_overlap_frames = 25;
};

namespace detail {

// Numeric ids sort numerically, everything else lexicographically.
inline bool track_less(const std::string& a, const std::string& b) {
  auto numeric = [](const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
  };
  if (numeric(a) && numeric(b) && a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

struct Detection {
  FrameIndex frame;
  Vec2 position;
};

struct TrackAccumulator {
  AthleteId id;
  std::vector<Detection> detections;
};

inline std::string id_string(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) {
    const double d = v.get<double>();
    if (d == std::floor(d)) return std::to_string(static_cast<long long>(d));
  }
  return v.dump();
}

inline std::optional<double> coordinate(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) return std::numeric_limits<double>::quiet_NaN();
  return it->get<double>();
}

inline TrajectorySet assemble(std::string sequence_id, std::map<std::string, TrackAccumulator> tracks,
                              double frame_rate_hz, FrameIndex frame_count_hint) {
  FrameIndex max_frame = std::max<FrameIndex>(1, frame_count_hint);
  for (const auto& [_, acc] : tracks) {
    for (const auto& d : acc.detections) max_frame = std::max(max_frame, d.frame);
  }
  const FrameClock clock(frame_rate_hz, max_frame);

  std::vector<std::string> keys;
  for (const auto& [k, _] : tracks) keys.push_back(k);
  std::sort(keys.begin(), keys.end(), track_less);

  TrajectorySet set{std::move(sequence_id), clock, {}};
  for (const auto& key : keys) {
    auto& acc = tracks.at(key);
    auto& dets = acc.detections;
    std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) { return a.frame < b.frame; });
    for (std::size_t i = 1; i < dets.size(); ++i) {
      if (dets[i].frame == dets[i - 1].frame) {
        throw ValidationError("track " + key + " frame " + std::to_string(dets[i].frame) +
                              ": duplicate detection");
      }
    }
    Trajectory traj{acc.id, {}, clock};
    for (const auto& d : dets) {
      if (!traj.samples.empty()) {
        for (FrameIndex k = traj.samples.back().frame + 1; k < d.frame; ++k) {
          traj.samples.push_back({k, {}, SampleStatus::missing});
        }
      }
      traj.samples.push_back({d.frame, d.position, SampleStatus::observed});
    }
    validate(traj);
    set.tracks.push_back(std::move(traj));
  }
  return set;
}

inline void merge_labels(AthleteId& id, const nlohmann::json& rec) {
  auto label = [&](const char* key, std::string& dst) {
    auto it = rec.find(key);
    if (dst.empty() && it != rec.end() && !it->is_null()) dst = id_string(*it);
  };
  label("role", id.role);
  label("team", id.team);
  label("jersey", id.jersey);
}

inline void add_detection(std::map<std::string, TrackAccumulator>& tracks, const std::string& track,
                          FrameIndex frame, double x, double y, const PitchConvention& convention,
                          const nlohmann::json& labels) {
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw ValidationError("track " + track + " frame " + std::to_string(frame) + ": non-finite coordinate");
  }
  auto& acc = tracks[track];
  acc.id.track = track;
  merge_labels(acc.id, labels);
  acc.detections.push_back({frame, convention.to_canonical({x, y})});
}

}  // namespace detail

/// Reads normalized_jsonl. `locator` prefixes error messages (usually the path).
inline TrajectorySet parse_normalized_jsonl(std::istream& in, const std::string& locator = "<stream>",
                                            const PitchConvention& convention = {}, double frame_rate_hz = 25.0) {
  std::map<std::string, detail::TrackAccumulator> tracks;
  std::optional<std::string> sequence;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = locator + ":" + std::to_string(line_no);
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where, std::string("invalid JSON: ") + e.what());
    }
    if (!rec.is_object()) throw ParseError(where, "record is not a JSON object");
    for (const char* key : {"frame", "track", "x", "y"}) {
      if (!rec.contains(key)) throw ParseError(where, std::string("missing key '") + key + "'");
    }
    if (!rec["frame"].is_number_integer() || rec["frame"].get<long long>() < 1) {
      throw ParseError(where, "'frame' must be an integer >= 1");
    }
    const FrameIndex frame = rec["frame"].get<long long>();
    const std::string track = detail::id_string(rec["track"]);
    const std::string seq = rec.contains("sequence") ? detail::id_string(rec["sequence"]) : std::string{};
    if (sequence && *sequence != seq) {
      throw ParseError(where, "mixed sequences ('" + *sequence + "' and '" + seq + "') in one file");
    }
    sequence = seq;
    const auto x = detail::coordinate(rec, "x");
    const auto y = detail::coordinate(rec, "y");
    detail::add_detection(tracks, track, frame, x.value_or(NAN), y.value_or(NAN), convention, rec);
  }
  if (tracks.empty()) throw ParseError(locator, "no detections");
  return detail::assemble(sequence.value_or(""), std::move(tracks), frame_rate_hz, 1);
}

namespace detail {

inline FrameIndex gsr_frame(const nlohmann::json& image, const std::string& image_id) {
  if (image.contains("frame_id") && image["frame_id"].is_number_integer()) return image["frame_id"].get<long long>();
  if (image.contains("file_name") && image["file_name"].is_string()) {
    std::string digits;
    for (char c : image["file_name"].get<std::string>()) {
      if (std::isdigit(static_cast<unsigned char>(c))) digits += c;
    }
    if (!digits.empty()) return std::stoll(digits);
  }
  // Image ids encode the frame number in their last six digits.
  if (image_id.size() >= 6 &&
      std::all_of(image_id.end() - 6, image_id.end(), [](unsigned char c) { return std::isdigit(c); })) {
    return std::stoll(image_id.substr(image_id.size() - 6));
  }
  return 0;
}

}  // namespace detail

/// Reads a gsr_json file. Unknown fields are ignored; ball annotations and
/// annotations without a track id or pitch position are skipped.
inline TrajectorySet parse_gsr_json(std::istream& in, const std::string& locator = "<stream>",
                                    const PitchConvention& convention = {}, double frame_rate_hz = 25.0) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(locator, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("annotations") || !doc["annotations"].is_array()) {
    throw ParseError(locator, "expected an object with an 'annotations' array");
  }

  std::map<std::string, FrameIndex> frame_of_image;
  FrameIndex frame_count = 1;
  if (doc.contains("images") && doc["images"].is_array()) {
    for (std::size_t i = 0; i < doc["images"].size(); ++i) {
      const auto& img = doc["images"][i];
      if (!img.is_object() || !img.contains("image_id")) {
        throw ParseError(locator + ":images[" + std::to_string(i) + "]", "missing 'image_id'");
      }
      const std::string id = detail::id_string(img["image_id"]);
      const FrameIndex f = detail::gsr_frame(img, id);
      if (f >= 1) {
        frame_of_image[id] = f;
        frame_count = std::max(frame_count, f);
      }
    }
  }
  std::string sequence;
  if (doc.contains("info") && doc["info"].is_object()) {
    for (const char* key : {"name", "id", "video_id"}) {
      if (doc["info"].contains(key) && !doc["info"][key].is_null()) {
        sequence = detail::id_string(doc["info"][key]);
        break;
      }
    }
  }

  std::map<std::string, detail::TrackAccumulator> tracks;
  const auto& anns = doc["annotations"];
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const auto& a = anns[i];
    const std::string where = locator + ":annotations[" + std::to_string(i) + "]";
    if (!a.is_object()) throw ParseError(where, "annotation is not an object");
    const auto attrs = a.contains("attributes") && a["attributes"].is_object() ? a["attributes"] : nlohmann::json::object();
    const std::string role = attrs.contains("role") && attrs["role"].is_string() ? attrs["role"].get<std::string>() : "";
    if (role == "ball" || (a.contains("category_id") && a["category_id"] == 4)) continue;
    if (!a.contains("track_id") || a["track_id"].is_null()) continue;
    if (!a.contains("bbox_pitch") || !a["bbox_pitch"].is_object()) continue;
    const auto& pitch = a["bbox_pitch"];
    const auto x = detail::coordinate(pitch, "x_bottom_middle");
    const auto y = detail::coordinate(pitch, "y_bottom_middle");
    if (!x && !y) continue;

    FrameIndex frame = 0;
    if (a.contains("frame") && a["frame"].is_number_integer()) {
      frame = a["frame"].get<long long>();
    } else if (a.contains("image_id")) {
      const std::string img = detail::id_string(a["image_id"]);
      auto it = frame_of_image.find(img);
      frame = it != frame_of_image.end() ? it->second : detail::gsr_frame(nlohmann::json::object(), img);
    }
    if (frame < 1) throw ParseError(where, "cannot resolve frame index");

    nlohmann::json labels = attrs;
    detail::add_detection(tracks, detail::id_string(a["track_id"]), frame, x.value_or(NAN), y.value_or(NAN),
                          convention, labels);
  }
  if (tracks.empty()) throw ParseError(locator, "no usable annotations");
  return detail::assemble(sequence, std::move(tracks), frame_rate_hz, frame_count);
}

inline TrajectorySet parse_trajectories(const std::filesystem::path& path, TrajectoryFormat format,
                                        const PitchConvention& convention = {}, double frame_rate_hz = 25.0) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), "cannot open file");
  return format == TrajectoryFormat::gsr_json
             ? parse_gsr_json(in, path.string(), convention, frame_rate_hz)
             : parse_normalized_jsonl(in, path.string(), convention, frame_rate_hz);
}

/// Writes observed samples as normalized_jsonl, frame-major then track order.
inline void write_normalized_jsonl(std::ostream& out, const TrajectorySet& set) {
  std::map<FrameIndex, std::vector<const Trajectory*>> by_frame;
  std::vector<std::map<FrameIndex, Vec2>> positions(set.tracks.size());
  for (std::size_t i = 0; i < set.tracks.size(); ++i) {
    for (const auto& s : set.tracks[i].samples) {
      if (s.status != SampleStatus::observed) continue;
      by_frame[s.frame].push_back(&set.tracks[i]);
      positions[i][s.frame] = s.position;
    }
  }
  for (const auto& [frame, trajs] : by_frame) {
    for (const Trajectory* t : trajs) {
      const auto idx = static_cast<std::size_t>(t - set.tracks.data());
      const Vec2 p = positions[idx].at(frame);
      nlohmann::ordered_json rec;
      rec["sequence"] = set.sequence_id;
      rec["frame"] = frame;
      rec["track"] = t->id.track;
      rec["x"] = p.x;
      rec["y"] = p.y;
      if (!t->id.role.empty()) rec["role"] = t->id.role;
      if (!t->id.team.empty()) rec["team"] = t->id.team;
      if (!t->id.jersey.empty()) rec["jersey"] = t->id.jersey;
      out << rec.dump() << '\n';
    }
  }
}

/// Mean Euclidean distance over frames where both tracks are observed.
struct CoVisibility {
  std::size_t frames = 0;
  double mean_distance_m = 0.0;
};

inline CoVisibility co_visibility(const Trajectory& a, const Trajectory& b) {
  CoVisibility cv;
  double sum = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.samples.size() && j < b.samples.size()) {
    const auto& sa = a.samples[i];
    const auto& sb = b.samples[j];
    if (sa.frame < sb.frame) {
      ++i;
    } else if (sb.frame < sa.frame) {
      ++j;
    } else {
      if (sa.status == SampleStatus::observed && sb.status == SampleStatus::observed) {
        sum += (sa.position - sb.position).norm();
        ++cv.frames;
      }
      ++i;
      ++j;
    }
  }
  if (cv.frames > 0) cv.mean_distance_m = sum / static_cast<double>(cv.frames);
  return cv;
}

/// One-to-one matching of predicted to ground-truth tracks. Pairs beyond the
/// gate or below the overlap threshold are never matched; among the remaining
/// pairs the matching has maximum cardinality and, within that, minimum total
/// mean distance.
inline std::vector<TrackMatch> match_tracks(const TrajectorySet& predictions, const TrajectorySet& ground_truth,
                                            const MatchOptions& opts = {}) {
  if (!(opts.gate_m > 0.0)) throw ConfigError("match gate must be positive");
  const std::size_t np = predictions.tracks.size();
  const std::size_t ng = ground_truth.tracks.size();
  std::vector<CoVisibility> cv(np * ng);
  std::vector<bool> feasible(np * ng, false);
  double feasible_sum = 0.0;
  for (std::size_t i = 0; i < np; ++i) {
    for (std::size_t j = 0; j < ng; ++j) {
      cv[i * ng + j] = co_visibility(predictions.tracks[i], ground_truth.tracks[j]);
      const auto& c = cv[i * ng + j];
      if (c.frames > 0 && c.frames >= opts.min_overlap_frames && c.mean_distance_m <= opts.gate_m) {
        feasible[i * ng + j] = true;
        feasible_sum += c.mean_distance_m;
      }
    }
  }

  const double blocked = 2.0 * (feasible_sum + 1.0);
  CostMatrix cost(np, ng, blocked);
  for (std::size_t k = 0; k < np * ng; ++k) {
    if (feasible[k]) cost.values[k] = cv[k].mean_distance_m;
  }
  const auto assignment = solve_assignment(cost);

  std::vector<TrackMatch> out;
  for (std::size_t i = 0; i < np; ++i) {
    if (!assignment[i]) continue;
    const std::size_t j = *assignment[i];
    if (!feasible[i * ng + j]) continue;
    const auto& c = cv[i * ng + j];
    out.push_back({predictions.tracks[i].id.track, ground_truth.tracks[j].id.track, c.frames, c.mean_distance_m});
  }
  return out;
}

}  // namespace kinprof
