#ifdef KINPROF_CLI11_PACKAGE
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "kinprof/golden.hpp"
#include "kinprof/pipeline.hpp"

namespace {

using kinprof::RunConfig;

// Flags are collected into a JSON overlay with the config-file schema, so the
// precedence is defaults < --config < flags and validation is shared.
class FlagOverlay {
 public:
  template <typename T>
  void add(CLI::App* app, const std::string& name, std::vector<std::string> path, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(name, *value, help);
    setters_.push_back([=](nlohmann::json& j) {
      if (opt->count() > 0) at(j, path) = *value;
    });
  }

  void flag(CLI::App* app, const std::string& name, std::vector<std::string> path, const std::string& help) {
    auto value = std::make_shared<bool>(false);
    CLI::Option* opt = app->add_flag(name, *value, help);
    setters_.push_back([=](nlohmann::json& j) {
      if (opt->count() > 0) at(j, path) = *value;
    });
  }

  nlohmann::json overlay() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& s : setters_) s(j);
    return j;
  }

 private:
  static nlohmann::json& at(nlohmann::json& j, const std::vector<std::string>& path) {
    nlohmann::json* cur = &j;
    for (const auto& p : path) cur = &(*cur)[p];
    return *cur;
  }

  std::vector<std::function<void(nlohmann::json&)>> setters_;
};

struct Command {
  CLI::App* app = nullptr;
  FlagOverlay flags;
  std::string config_path;
};

void add_run_flags(Command& cmd) {
  CLI::App* a = cmd.app;
  FlagOverlay& f = cmd.flags;
  a->add_option("--config", cmd.config_path, "JSON run configuration (flags override it)");
  f.add<std::vector<std::string>>(a, "-p,--predictions", {"predictions"}, "prediction trajectory files");
  f.add<std::vector<std::string>>(a, "-g,--ground-truth", {"ground_truth"}, "ground-truth files, one per prediction file");
  f.add<std::string>(a, "--format", {"format"}, "prediction format: normalized_jsonl | gsr_json");
  f.add<std::string>(a, "--gt-format", {"gt_format"}, "ground-truth format: normalized_jsonl | gsr_json");
  f.add<double>(a, "--frame-rate", {"frame_rate_hz"}, "frames per second");
  f.add<int>(a, "--max-gap", {"max_gap"}, "longest gap (frames) bridged by interpolation");
  f.add<std::string>(a, "--pitch-origin", {"pitch", "origin"}, "centre | corner");
  f.add<double>(a, "--pitch-length", {"pitch", "length_m"}, "pitch length in metres");
  f.add<double>(a, "--pitch-width", {"pitch", "width_m"}, "pitch width in metres");
  f.flag(a, "--flip-y", {"pitch", "flip_y"}, "mirror the y axis of the input");
  f.add<std::string>(a, "--smoothing", {"smoothing", "method"}, "none | kalman | savgol");
  f.add<double>(a, "--kalman-accel-sigma", {"smoothing", "kalman", "process_accel_sigma"}, "Kalman process noise (m/s^2)");
  f.add<double>(a, "--kalman-meas-sigma", {"smoothing", "kalman", "measurement_sigma_m"}, "Kalman measurement noise (m)");
  f.add<double>(a, "--kalman-init-vel-sigma", {"smoothing", "kalman", "initial_velocity_sigma"},
                "Kalman initial velocity sd (m/s)");
  f.add<int>(a, "--savgol-window", {"smoothing", "savgol", "window"}, "Savitzky-Golay window (odd)");
  f.add<int>(a, "--savgol-order", {"smoothing", "savgol", "poly_order"}, "Savitzky-Golay polynomial order");
  f.add<int>(a, "--ln", {"kinematics", "l_n"}, "differencing half-window in frames");
  f.add<double>(a, "--speed-cap", {"kinematics", "speed_cap_mps"}, "speeds above this are invalid (m/s)");
  f.add<int>(a, "--accel-ma-window", {"kinematics", "accel_ma_window"}, "acceleration moving-average width");
  f.add<double>(a, "--min-speed", {"profile", "min_speed_mps"}, "A-S lower speed bound (m/s)");
  f.add<double>(a, "--bin-width", {"profile", "bin_width_mps"}, "A-S speed bin width (m/s)");
  f.add<int>(a, "--top-k", {"profile", "per_bin_top_k"}, "A-S points kept per bin");
  f.add<double>(a, "--ci-level", {"profile", "ci_level"}, "prediction-interval level for outlier rejection");
  f.add<std::size_t>(a, "--min-points", {"profile", "min_points"}, "minimum A-S points for a fit");
  f.add<std::size_t>(a, "--min-bins", {"profile", "min_bins"}, "minimum distinct A-S bins for a fit");
  f.add<int>(a, "--windows", {"profile", "windows"}, "equal time windows per athlete profile");
  f.add<double>(a, "--gate", {"match", "gate_m"}, "track matching gate (m)");
  f.add<std::size_t>(a, "--min-match-overlap", {"match", "min_overlap_frames"}, "minimum co-observed frames to match");
  f.add<int>(a, "--max-lag", {"metrics", "max_lag_frames"}, "max-lag correlation search range (frames)");
  f.add<std::size_t>(a, "--min-lag-overlap", {"metrics", "min_overlap"}, "minimum overlap per lag");
  f.add<double>(a, "--stratify-fraction", {"metrics", "stratify_fraction"}, "top/bottom reliability fraction");
  f.flag(a, "--ablation", {"ablation", "enabled"}, "also evaluate every filter x l_n combination");
  f.add<std::vector<std::string>>(a, "--ablation-filters", {"ablation", "filters"}, "filters for the ablation");
  f.add<std::vector<int>>(a, "--ablation-ln", {"ablation", "l_n"}, "l_n values for the ablation");
  f.add<std::string>(a, "-o,--out", {"output_dir"}, "output directory");
  f.add<std::uint64_t>(a, "--seed", {"seed"}, "random seed");
  f.add<std::string>(a, "--kind", {"synth", "kind"},
                     "synthetic motion: static | constant_velocity | constant_acceleration | sinusoid | "
                     "piecewise_sprint | as_points");
  f.add<std::size_t>(a, "--athletes", {"synth", "athletes"}, "synthetic athletes");
  f.add<double>(a, "--duration", {"synth", "duration_s"}, "synthetic duration (s)");
  f.add<double>(a, "--noise", {"synth", "noise_sigma_m"}, "position noise sd (m)");
  f.add<double>(a, "--dropout", {"synth", "dropout_fraction"}, "share of prediction frames removed");
  f.add<std::string>(a, "--sequence", {"synth", "sequence"}, "synthetic sequence id");
  f.add<double>(a, "--as-a0", {"synth", "as_a0_mps2"}, "A0 for as_points");
  f.add<double>(a, "--as-s0", {"synth", "as_s0_mps"}, "S0 for as_points");
  f.add<std::size_t>(a, "--as-bins", {"synth", "as_bins"}, "speed bins for as_points");
  f.add<double>(a, "--as-noise", {"synth", "as_noise_mps2"}, "acceleration noise sd for as_points");
  f.add<std::size_t>(a, "--as-outliers", {"synth", "as_outliers"}, "outliers for as_points");
}

RunConfig resolve_config(const Command& cmd) {
  RunConfig c;
  if (!cmd.config_path.empty()) {
    c = kinprof::load_config(cmd.config_path);
    // Input paths in a config file are relative to the file itself.
    const auto base = std::filesystem::path(cmd.config_path).parent_path();
    for (auto* list : {&c.predictions, &c.ground_truth}) {
      for (auto& p : *list) {
        if (std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
      }
    }
  }
  kinprof::apply_json(c, cmd.flags.overlay());
  c.validate();
  return c;
}

void print_result(const kinprof::CommandResult& r, const std::string& root) {
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "wrote " << r.files.size() << " file(s) to " << root << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kinprof: speed, acceleration and A-S profiles from tracking data"};
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Command>> commands;
  auto make = [&](const std::string& name, const std::string& help) {
    auto cmd = std::make_unique<Command>();
    cmd->app = app.add_subcommand(name, help);
    add_run_flags(*cmd);
    commands.push_back(std::move(cmd));
    return commands.back().get();
  };
  Command* ingest = make("ingest", "normalise trajectory files and optionally match predictions to ground truth");
  Command* synth = make("synth", "write synthetic trajectories (or A-S points) with analytic ground truth");
  Command* kin = make("kinematics", "per-athlete speed and acceleration CSVs");
  Command* profile = make("profile", "A-S profiles per athlete and time window");
  Command* evaluate = make("evaluate", "match tracks and score predicted kinematics against ground truth");
  Command* report = make("report", "render report.md from evaluate/profile outputs");
  Command* golden = make("golden", "regenerate a golden fixture directory from its config");

  std::vector<std::string> points;
  profile->app->add_option("--points", points, "fit A-S point files directly instead of trajectories");
  std::string report_input;
  report->app->add_option("--input", report_input, "directory holding evaluation.json / profile_manifest.json");
  std::string golden_dir;
  golden->app->add_option("--fixture", golden_dir, "fixture directory")->required();

  std::string verify_dir;
  CLI::App* verify = app.add_subcommand("verify", "regenerate a golden fixture in scratch space and compare");
  verify->add_option("fixture", verify_dir, "fixture directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (verify->parsed()) {
      const auto res = kinprof::verify_golden(verify_dir);
      for (const auto& f : res.failures) std::cout << "MISMATCH " << f << "\n";
      std::cout << (res.ok() ? "golden OK" : "golden FAILED") << " (" << res.files_checked << " files compared)\n";
      return res.ok() ? 0 : 1;
    }
    for (const auto& cmd : commands) {
      if (!cmd->app->parsed()) continue;
      const RunConfig c = resolve_config(*cmd);
      kinprof::CommandResult r;
      if (cmd.get() == ingest) r = kinprof::run_ingest(c);
      if (cmd.get() == synth) r = kinprof::run_synth(c);
      if (cmd.get() == kin) r = kinprof::run_kinematics(c);
      if (cmd.get() == profile) r = kinprof::run_profile(c, points);
      if (cmd.get() == evaluate) r = kinprof::run_evaluate(c);
      if (cmd.get() == report) r = kinprof::run_report(c, report_input.empty() ? c.output_dir : report_input);
      if (cmd.get() == golden) r.files = kinprof::write_golden(c, golden_dir);
      print_result(r, cmd.get() == golden ? golden_dir : c.output_dir);
      return 0;
    }
  } catch (const kinprof::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const kinprof::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
