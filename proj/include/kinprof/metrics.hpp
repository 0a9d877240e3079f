#pragma once

// Agreement metrics between predicted and reference per-frame signals:
// MAE/RMSE, Pearson r, max-lag r, Fisher-z averaging of correlations, the
// detection-weighted reliability score and top/bottom stratification.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kinprof/data_model.hpp"

namespace kinprof {

/// Valid samples of one signal, strictly increasing frames.
struct FrameSignal {
  std::vector<FrameIndex> frames;
  std::vector<double> values;

  void push(FrameIndex f, double v) {
    frames.push_back(f);
    values.push_back(v);
  }
  std::size_t size() const noexcept { return frames.size(); }
};

/// Predicted and reference values over frames valid in both.
struct SignalPair {
  std::vector<FrameIndex> frames;
  std::vector<double> predicted;
  std::vector<double> reference;

  std::size_t size() const noexcept { return frames.size(); }
};

inline SignalPair align(const FrameSignal& predicted, const FrameSignal& reference) {
  SignalPair pair;
  std::size_t i = 0, j = 0;
  while (i < predicted.size() && j < reference.size()) {
    if (predicted.frames[i] < reference.frames[j]) {
      ++i;
    } else if (reference.frames[j] < predicted.frames[i]) {
      ++j;
    } else {
      pair.frames.push_back(predicted.frames[i]);
      pair.predicted.push_back(predicted.values[i]);
      pair.reference.push_back(reference.values[j]);
      ++i;
      ++j;
    }
  }
  return pair;
}

struct AmplitudeErrors {
  double mae = 0.0;
  double rmse = 0.0;
};

inline AmplitudeErrors amplitude_errors(const SignalPair& pair) {
  if (pair.size() == 0) throw UndefinedMetric("MAE/RMSE undefined on an empty signal pair");
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i = 0; i < pair.size(); ++i) {
    const double e = pair.predicted[i] - pair.reference[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
  }
  const auto n = static_cast<double>(pair.size());
  return {abs_sum / n, std::sqrt(sq_sum / n)};
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw UndefinedMetric("Pearson r needs at least two paired samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw UndefinedMetric("Pearson r undefined for a constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double pearson(const SignalPair& pair) { return pearson(pair.predicted, pair.reference); }

struct LagCorrelation {
  double r = 0.0;
  int lag = 0;  // > 0: prediction trails the reference by `lag` frames
  std::size_t overlap = 0;
};

struct MaxLagOptions {
  int max_lag_frames = 25;
  std::size_t min_overlap = 50;
};

/// Pearson r between predicted(k + lag) and reference(k) on the frames where
/// both exist.
inline std::optional<LagCorrelation> lagged_pearson(const FrameSignal& predicted, const FrameSignal& reference,
                                                    int lag, std::size_t min_overlap) {
  std::vector<double> x, y;
  std::size_t i = 0, j = 0;
  while (i < predicted.size() && j < reference.size()) {
    const FrameIndex shifted = predicted.frames[i] - lag;
    if (shifted < reference.frames[j]) {
      ++i;
    } else if (reference.frames[j] < shifted) {
      ++j;
    } else {
      x.push_back(predicted.values[i]);
      y.push_back(reference.values[j]);
      ++i;
      ++j;
    }
  }
  if (x.size() < std::max<std::size_t>(min_overlap, 2)) return std::nullopt;
  try {
    return LagCorrelation{pearson(x, y), lag, x.size()};
  } catch (const UndefinedMetric&) {
    return std::nullopt;
  }
}

/// Best Pearson r over lags in [-L, L]. Ties go to the smaller |lag|, then to
/// the negative lag.
inline LagCorrelation max_lag_r(const FrameSignal& predicted, const FrameSignal& reference,
                                const MaxLagOptions& opts = {}) {
  if (opts.max_lag_frames < 0) throw ConfigError("max lag must be >= 0");
  std::optional<LagCorrelation> best;
  auto consider = [&](int lag) {
    auto c = lagged_pearson(predicted, reference, lag, opts.min_overlap);
    if (c && (!best || c->r > best->r)) best = c;
  };
  consider(0);
  for (int d = 1; d <= opts.max_lag_frames; ++d) {
    consider(-d);
    consider(d);
  }
  if (!best) throw UndefinedMetric("max-lag r undefined: no lag with enough non-constant overlap");
  return *best;
}

inline LagCorrelation max_lag_r(const SignalPair& pair, const MaxLagOptions& opts = {}) {
  FrameSignal p{pair.frames, pair.predicted};
  FrameSignal r{pair.frames, pair.reference};
  return max_lag_r(p, r, opts);
}

inline constexpr double kFisherClamp = 1.0 - 1e-7;

inline double fisher_z(double r) {
  const double c = std::clamp(r, -kFisherClamp, kFisherClamp);
  return 0.5 * std::log((1.0 + c) / (1.0 - c));
}

/// tanh(mean(z)) with z the Fisher transform of each r.
inline double fisher_average(std::span<const double> rs) {
  if (rs.empty()) throw UndefinedMetric("Fisher average of an empty list");
  double z = 0.0;
  for (double r : rs) {
    if (!(r >= -1.0 && r <= 1.0)) throw UndefinedMetric("correlation outside [-1, 1]");
    z += fisher_z(r);
  }
  z /= static_cast<double>(rs.size());
  return std::tanh(z);
}

struct ReliabilityScore {
  std::optional<double> r_c;
  std::optional<double> r_mae;
  double r_d = 0.0;
  std::optional<double> r;

  bool defined() const noexcept { return r.has_value(); }
};

/// R = R_c * R_MAE * R_d with R_c = Pearson r of speed, R_MAE = 1/(1 + MAE),
/// R_d = detected / total frames. Undefined when R_c is.
inline ReliabilityScore reliability(const SignalPair& speed, std::size_t frames_detected, std::size_t frames_total) {
  if (frames_detected > frames_total) throw ConfigError("detected frames exceed total frames");
  ReliabilityScore s;
  s.r_d = frames_total > 0 ? static_cast<double>(frames_detected) / static_cast<double>(frames_total) : 0.0;
  if (speed.size() > 0) s.r_mae = 1.0 / (1.0 + amplitude_errors(speed).mae);
  try {
    s.r_c = pearson(speed);
  } catch (const UndefinedMetric&) {
    return s;
  }
  if (s.r_mae) s.r = *s.r_c * *s.r_mae * s.r_d;
  return s;
}

struct RankedAthlete {
  std::string athlete;
  double score = 0.0;
};

struct Strata {
  std::vector<RankedAthlete> top;
  std::vector<RankedAthlete> bottom;
};

/// Ranks by score descending (ties: athlete id ascending) and returns the
/// first and last floor(fraction * n).
inline Strata stratify(std::vector<RankedAthlete> scores, double fraction) {
  if (!(fraction > 0.0 && fraction <= 0.5)) throw ConfigError("stratify fraction must be in (0, 0.5]");
  std::sort(scores.begin(), scores.end(), [](const RankedAthlete& a, const RankedAthlete& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.athlete < b.athlete;
  });
  // Guard the floor against representation error (0.3 * 10 = 2.9999...).
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(scores.size()) + 1e-9));
  Strata s;
  s.top.assign(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(k));
  s.bottom.assign(scores.end() - static_cast<std::ptrdiff_t>(k), scores.end());
  return s;
}

/// Arithmetic mean and sample standard deviation across athletes.
struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};

inline std::optional<MeanSd> mean_sd(std::span<const double> v) {
  if (v.empty()) return std::nullopt;
  MeanSd m;
  m.n = v.size();
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(m.n);
  if (m.n > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(m.n - 1));
  }
  return m;
}

/// Fisher-z mean of correlations, with the plain sample sd alongside.
inline std::optional<MeanSd> correlation_summary(std::span<const double> rs) {
  auto m = mean_sd(rs);
  if (!m) return m;
  m->mean = fisher_average(rs);
  return m;
}

}  // namespace kinprof
