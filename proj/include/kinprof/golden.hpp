#pragma once

// Golden fixtures: a config with a seed, the synthetic inputs it generates and
// the artifacts every command produces from them. Verification regenerates the
// whole tree into a scratch directory and compares file by file.

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kinprof/pipeline.hpp"

namespace kinprof {

inline constexpr double kGoldenTolerance = 1e-9;

enum class CompareKind { csv, json, bytes };

inline CompareKind compare_kind(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".csv") return CompareKind::csv;
  if (ext == ".json" || ext == ".jsonl") return CompareKind::json;
  return CompareKind::bytes;
}

inline const char* to_string(CompareKind k) {
  switch (k) {
    case CompareKind::csv: return "csv";
    case CompareKind::json: return "json";
    case CompareKind::bytes: return "bytes";
  }
  return "?";
}

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

inline std::optional<double> as_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(a)); }

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ParseError(p.string(), "cannot open file");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void compare_json_value(const nlohmann::json& e, const nlohmann::json& a, const std::string& where, double tol,
                               std::vector<std::string>& out) {
  if (e.is_number() && a.is_number()) {
    if (!close(e.get<double>(), a.get<double>(), tol)) {
      out.push_back(where + ": expected " + format_number(e.get<double>()) + ", got " + format_number(a.get<double>()));
    }
    return;
  }
  if (e.type() != a.type()) {
    out.push_back(where + ": expected " + e.dump() + ", got " + a.dump());
    return;
  }
  if (e.is_object()) {
    for (const auto& item : e.items()) {
      if (!a.contains(item.key())) {
        out.push_back(where + "/" + item.key() + ": missing");
      } else {
        compare_json_value(item.value(), a[item.key()], where + "/" + item.key(), tol, out);
      }
    }
    for (const auto& item : a.items()) {
      if (!e.contains(item.key())) out.push_back(where + "/" + item.key() + ": unexpected key");
    }
  } else if (e.is_array()) {
    if (e.size() != a.size()) {
      out.push_back(where + ": expected " + std::to_string(e.size()) + " elements, got " + std::to_string(a.size()));
      return;
    }
    for (std::size_t i = 0; i < e.size(); ++i) compare_json_value(e[i], a[i], where + "/" + std::to_string(i), tol, out);
  } else if (e != a) {
    out.push_back(where + ": expected " + e.dump() + ", got " + a.dump());
  }
}

}  // namespace detail

/// Numeric cells within tolerance, everything else exact. Locators read
/// "name:line L col C (header)".
inline std::vector<std::string> compare_csv(const std::string& expected, const std::string& actual,
                                            const std::string& name, double tol = kGoldenTolerance) {
  std::vector<std::string> out;
  const auto el = detail::lines(expected), al = detail::lines(actual);
  if (el.size() != al.size()) {
    out.push_back(name + ": expected " + std::to_string(el.size()) + " lines, got " + std::to_string(al.size()));
  }
  std::vector<std::string> header;
  for (std::size_t i = 0; i < std::min(el.size(), al.size()); ++i) {
    const std::string where = name + ":line " + std::to_string(i + 1);
    if (el[i].starts_with("#") || al[i].starts_with("#")) {
      if (el[i] != al[i]) out.push_back(where + ": expected '" + el[i] + "', got '" + al[i] + "'");
      continue;
    }
    const auto ec = detail::split(el[i], ','), ac = detail::split(al[i], ',');
    if (header.empty()) header = ec;
    if (ec.size() != ac.size()) {
      out.push_back(where + ": expected " + std::to_string(ec.size()) + " cells, got " + std::to_string(ac.size()));
      continue;
    }
    for (std::size_t c = 0; c < ec.size(); ++c) {
      const auto en = detail::as_number(ec[c]), an = detail::as_number(ac[c]);
      const bool same = en && an ? detail::close(*en, *an, tol) : ec[c] == ac[c];
      if (!same) {
        const std::string col = c < header.size() ? " (" + header[c] + ")" : "";
        out.push_back(where + " col " + std::to_string(c + 1) + col + ": expected '" + ec[c] + "', got '" + ac[c] +
                      "'");
      }
    }
  }
  return out;
}

/// Structural comparison; JSON-lines files are compared record by record.
inline std::vector<std::string> compare_json_text(const std::string& expected, const std::string& actual,
                                                  const std::string& name, bool json_lines,
                                                  double tol = kGoldenTolerance) {
  std::vector<std::string> out;
  auto parse = [&](const std::string& s, const char* which) -> std::optional<nlohmann::json> {
    try {
      return nlohmann::json::parse(s);
    } catch (const nlohmann::json::parse_error& e) {
      out.push_back(name + ": " + which + " is not valid JSON: " + e.what());
      return std::nullopt;
    }
  };
  if (!json_lines) {
    const auto e = parse(expected, "expected"), a = parse(actual, "actual");
    if (e && a) detail::compare_json_value(*e, *a, name + "#", tol, out);
    return out;
  }
  const auto el = detail::lines(expected), al = detail::lines(actual);
  if (el.size() != al.size()) {
    out.push_back(name + ": expected " + std::to_string(el.size()) + " records, got " + std::to_string(al.size()));
  }
  for (std::size_t i = 0; i < std::min(el.size(), al.size()); ++i) {
    const auto e = parse(el[i], "expected"), a = parse(al[i], "actual");
    if (e && a) detail::compare_json_value(*e, *a, name + ":line " + std::to_string(i + 1) + "#", tol, out);
  }
  return out;
}

inline std::vector<std::string> compare_bytes(const std::string& expected, const std::string& actual,
                                              const std::string& name) {
  if (expected == actual) return {};
  const auto el = detail::lines(expected), al = detail::lines(actual);
  for (std::size_t i = 0; i < std::max(el.size(), al.size()); ++i) {
    if (i >= el.size() || i >= al.size() || el[i] != al[i]) {
      return {name + ":line " + std::to_string(i + 1) + ": content differs"};
    }
  }
  return {name + ": content differs (line endings)"};
}

inline std::vector<std::string> compare_artifact(const std::filesystem::path& expected,
                                                 const std::filesystem::path& actual, const std::string& name) {
  if (!std::filesystem::exists(expected)) return {name + ": expected file missing"};
  if (!std::filesystem::exists(actual)) return {name + ": not produced"};
  const auto e = detail::read_text(expected), a = detail::read_text(actual);
  switch (compare_kind(name)) {
    case CompareKind::csv: return compare_csv(e, a, name);
    case CompareKind::json: return compare_json_text(e, a, name, std::filesystem::path(name).extension() == ".jsonl");
    case CompareKind::bytes: return compare_bytes(e, a, name);
  }
  return {};
}

// ---------------------------------------------------------------------------

/// Regenerates a fixture tree below `root`: synthetic inputs in inputs/, every
/// command's artifacts in expected/. The config's input paths are replaced by
/// the generated files.
inline std::vector<WrittenFile> build_golden_tree(RunConfig cfg, const std::filesystem::path& root) {
  std::vector<WrittenFile> files;
  auto collect = [&](const CommandResult& r, const std::string& prefix) {
    for (auto f : r.files) {
      f.path = prefix + f.path;
      files.push_back(std::move(f));
    }
  };
  const std::string seq = safe_name(cfg.synth.sequence);
  cfg.predictions = {(root / "inputs" / (seq + "_pred.jsonl")).string()};
  cfg.ground_truth = {(root / "inputs" / (seq + "_gt.jsonl")).string()};
  RunConfig s = cfg;
  s.output_dir = (root / "inputs").string();
  collect(run_synth(s), "inputs/");

  cfg.output_dir = (root / "expected").string();
  collect(run_kinematics(cfg), "expected/");
  collect(run_profile(cfg), "expected/");
  collect(run_evaluate(cfg), "expected/");
  collect(run_report(cfg, cfg.output_dir), "expected/");
  return files;
}

inline nlohmann::ordered_json golden_manifest(const RunConfig& cfg, const std::vector<WrittenFile>& files) {
  nlohmann::ordered_json m;
  m["seed"] = cfg.seed;
  m["config"] = "config.json";
  m["config_hash"] = config_hash(cfg);
  m["tolerance"] = kGoldenTolerance;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& f : files) {
    arr.push_back({{"path", f.path}, {"fnv1a64", f.fnv1a}, {"bytes", f.bytes}, {"compare", to_string(compare_kind(f.path))}});
  }
  m["files"] = std::move(arr);
  return m;
}

/// Writes config.json, the regenerated tree and manifest.json into `dir`.
inline std::vector<WrittenFile> write_golden(const RunConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto files = build_golden_tree(cfg, dir);
  RunConfig stored = cfg;
  const std::string seq = safe_name(cfg.synth.sequence);
  stored.predictions = {"inputs/" + seq + "_pred.jsonl"};
  stored.ground_truth = {"inputs/" + seq + "_gt.jsonl"};
  stored.output_dir = "expected";
  OutputDir out(dir);
  out.write_json("config.json", to_json(stored));
  out.write_json("manifest.json", golden_manifest(stored, files));
  return files;
}

struct GoldenResult {
  std::vector<std::string> failures;
  std::size_t files_checked = 0;
  bool ok() const { return failures.empty(); }
};

inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  const auto ticks = std::chrono::steady_clock::now().time_since_epoch().count();
  auto p = std::filesystem::temp_directory_path() /
           ("kinprof_" + tag + "_" + hex64(fnv1a64(std::to_string(ticks) + ":" + std::to_string(counter++))));
  std::filesystem::create_directories(p);
  return p;
}

/// Checks that every file the manifest lists exists, regenerates the tree from
/// the stored config and compares each file against its regenerated twin.
inline GoldenResult verify_golden(const std::filesystem::path& dir) {
  GoldenResult res;
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    res.failures.push_back("manifest.json: missing");
    return res;
  }
  const auto manifest = detail::read_json_file(manifest_path);
  const RunConfig cfg = load_config(dir / manifest.at("config").get<std::string>());

  std::set<std::string> listed;
  for (const auto& f : manifest.at("files")) {
    const auto path = f.at("path").get<std::string>();
    listed.insert(path);
    if (!std::filesystem::exists(dir / path)) res.failures.push_back(path + ": missing from fixture");
  }

  const auto scratch = scratch_dir("golden");
  try {
    const auto files = build_golden_tree(cfg, scratch);
    std::set<std::string> produced;
    for (const auto& f : files) produced.insert(f.path);
    for (const auto& p : produced) {
      if (!listed.count(p)) res.failures.push_back(p + ": produced but not listed in manifest");
    }
    for (const auto& p : listed) {
      if (!produced.count(p)) {
        res.failures.push_back(p + ": listed in manifest but no longer produced");
        continue;
      }
      if (!std::filesystem::exists(dir / p)) continue;
      ++res.files_checked;
      for (auto& d : compare_artifact(dir / p, scratch / p, p)) res.failures.push_back(std::move(d));
    }
  } catch (...) {
    std::filesystem::remove_all(scratch);
    throw;
  }
  std::filesystem::remove_all(scratch);
  return res;
}

}  // namespace kinprof
