#pragma once

// Artifact writing: a sandboxed output directory, kinematics CSV and the A-S
// scatter-plus-line SVG.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kinprof/asprofile.hpp"
#include "kinprof/config.hpp"
#include "kinprof/kinematics.hpp"

namespace kinprof {

/// Maps an arbitrary id to a file-name-safe token: [A-Za-z0-9._-] kept,
/// everything else '_', and no leading dot.
inline std::string safe_name(const std::string& id) {
  std::string out;
  for (unsigned char c : id) {
    const bool ok = std::isalnum(c) || c == '-' || c == '_' || c == '.';
    out.push_back(ok ? static_cast<char>(c) : '_');
  }
  if (out.empty()) out = "_";
  if (out.front() == '.') out.front() = '_';
  return out;
}

struct WrittenFile {
  std::string path;  // relative to the output root, '/' separated
  std::string fnv1a;
  std::size_t bytes = 0;
};

/// All writes go through here; relative paths that would leave the root are
/// rejected.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  const std::vector<WrittenFile>& files() const { return files_; }

  std::filesystem::path resolve(const std::string& rel) const {
    const std::filesystem::path p = std::filesystem::path(rel).lexically_normal();
    if (p.empty() || p.is_absolute() || p.has_root_name() || *p.begin() == "..") {
      throw ConfigError("refusing to write outside the output directory: " + rel);
    }
    for (const auto& part : p) {
      if (part == "..") throw ConfigError("refusing to write outside the output directory: " + rel);
    }
    return root_ / p;
  }

  void write(const std::string& rel, const std::string& content) {
    const auto path = resolve(rel);
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out) throw Error("write failed for " + path.string());
    files_.push_back({std::filesystem::path(rel).lexically_normal().generic_string(), hex64(fnv1a64(content)),
                      content.size()});
  }

  void write_json(const std::string& rel, const nlohmann::ordered_json& j) { write(rel, j.dump(2) + "\n"); }

 private:
  std::filesystem::path root_;
  std::vector<WrittenFile> files_;
};

inline nlohmann::ordered_json to_json(const std::vector<WrittenFile>& files) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& f : files) arr.push_back({{"path", f.path}, {"fnv1a64", f.fnv1a}, {"bytes", f.bytes}});
  return arr;
}

inline std::string kinematics_csv(const KinematicsSeries& s, const std::string& hash) {
  std::ostringstream out;
  out << "# config_hash: " << hash << "\n";
  out << "# athlete: " << s.athlete << "\n";
  out << "frame,t_s,speed_mps,accel_mps2,valid_speed,valid_accel\n";
  for (const auto& e : s.entries) {
    out << e.frame << ',' << format_number(s.clock.timestamp(e.frame)) << ',';
    if (e.valid_speed) out << format_number(e.speed_mps);
    out << ',';
    if (e.valid_accel) out << format_number(e.accel_mps2);
    out << ',' << (e.valid_speed ? 1 : 0) << ',' << (e.valid_accel ? 1 : 0) << '\n';
  }
  return out.str();
}

namespace detail {

inline std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  if (s == "-0.00" || s == "-0.0" || s == "-0") s.erase(0, 1);
  return s;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline double nice_step(double range) {
  const double raw = range / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace detail

/// Scatter of selected points (kept filled, rejected hollow), the final line
/// from (0, A0) to (S0, 0), and the three parameters as text.
inline std::string profile_svg(const ASProfile& p, const std::string& title, const std::string& hash) {
  using detail::fixed;
  const double W = 640, H = 480, ml = 60, mr = 20, mt = 40, mb = 50;
  double xmax = p.s0_mps, ymax = p.a0_mps2;
  for (const auto& q : p.points) {
    xmax = std::max(xmax, q.speed_mps);
    ymax = std::max(ymax, q.accel_mps2);
  }
  xmax *= 1.05;
  ymax *= 1.1;
  auto X = [&](double s) { return ml + (W - ml - mr) * s / xmax; };
  auto Y = [&](double a) { return H - mb - (H - mt - mb) * a / ymax; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\">\n";
  o << "<!-- config_hash: " << hash << " -->\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
    << detail::xml_escape(title) << "</text>\n";

  o << "<g stroke=\"#999\" stroke-width=\"1\" font-family=\"sans-serif\" font-size=\"11\">\n";
  const double sx = detail::nice_step(xmax), sy = detail::nice_step(ymax);
  for (double v = 0.0; v <= xmax + 1e-9; v += sx) {
    o << "<line x1=\"" << fixed(X(v)) << "\" y1=\"" << fixed(Y(0)) << "\" x2=\"" << fixed(X(v)) << "\" y2=\""
      << fixed(Y(0) + 5) << "\"/>";
    o << "<text x=\"" << fixed(X(v)) << "\" y=\"" << fixed(Y(0) + 18) << "\" text-anchor=\"middle\" stroke=\"none\">"
      << fixed(v, 1) << "</text>\n";
  }
  for (double v = 0.0; v <= ymax + 1e-9; v += sy) {
    o << "<line x1=\"" << fixed(X(0) - 5) << "\" y1=\"" << fixed(Y(v)) << "\" x2=\"" << fixed(X(0)) << "\" y2=\""
      << fixed(Y(v)) << "\"/>";
    o << "<text x=\"" << fixed(X(0) - 8) << "\" y=\"" << fixed(Y(v) + 4) << "\" text-anchor=\"end\" stroke=\"none\">"
      << fixed(v, 1) << "</text>\n";
  }
  o << "<line x1=\"" << fixed(X(0)) << "\" y1=\"" << fixed(Y(0)) << "\" x2=\"" << fixed(X(xmax)) << "\" y2=\""
    << fixed(Y(0)) << "\"/>\n";
  o << "<line x1=\"" << fixed(X(0)) << "\" y1=\"" << fixed(Y(0)) << "\" x2=\"" << fixed(X(0)) << "\" y2=\""
    << fixed(Y(ymax)) << "\"/>\n";
  o << "</g>\n";
  o << "<text x=\"" << fixed((ml + W - mr) / 2) << "\" y=\"" << H - 10
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">speed (m/s)</text>\n";
  o << "<text x=\"16\" y=\"" << fixed((mt + H - mb) / 2) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
    << "font-size=\"12\" transform=\"rotate(-90 16 " << fixed((mt + H - mb) / 2) << ")\">acceleration (m/s²)</text>\n";

  o << "<g>\n";
  for (const auto& q : p.points) {
    o << "<circle cx=\"" << fixed(X(q.speed_mps)) << "\" cy=\"" << fixed(Y(q.accel_mps2)) << "\" r=\"3\" "
      << (q.kept ? "fill=\"#1f77b4\"" : "fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.2\"") << "/>\n";
  }
  o << "</g>\n";
  o << "<line x1=\"" << fixed(X(0)) << "\" y1=\"" << fixed(Y(p.a0_mps2)) << "\" x2=\"" << fixed(X(p.s0_mps))
    << "\" y2=\"" << fixed(Y(0)) << "\" stroke=\"#2ca02c\" stroke-width=\"2\"/>\n";
  o << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<text x=\"" << fixed(X(0) + 8) << "\" y=\"" << fixed(Y(p.a0_mps2) - 6) << "\">A0 = " << fixed(p.a0_mps2)
    << " m/s²</text>\n";
  o << "<text x=\"" << fixed(X(p.s0_mps) - 4) << "\" y=\"" << fixed(Y(0) - 8) << "\" text-anchor=\"end\">S0 = "
    << fixed(p.s0_mps) << " m/s</text>\n";
  o << "<text x=\"" << fixed(W - mr - 4) << "\" y=\"" << mt + 14 << "\" text-anchor=\"end\">slope = " << fixed(p.slope, 3)
    << " 1/s, kept " << p.kept_count << ", rejected " << p.rejected_count << "</text>\n";
  o << "</g>\n</svg>\n";
  return o.str();
}

}  // namespace kinprof
