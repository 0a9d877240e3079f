#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kinprof/preprocess.hpp"
#include "kinprof/synth.hpp"
#include "test_support.hpp"

namespace kinprof {
namespace {

using test::path_segment;

const FrameClock kClock(25.0, 10000);

SmoothingConfig method(SmoothingMethod m) {
  SmoothingConfig c;
  c.method = m;
  return c;
}

TEST(Savgol, CoefficientsMatchTabulatedWindow9Order2) {
  // Classic table: (-21, 14, 39, 54, 59, 54, 39, 14, -21) / 231.
  const double table[] = {-21, 14, 39, 54, 59, 54, 39, 14, -21};
  const auto c = savgol_coefficients(9, 2);
  ASSERT_EQ(c.size(), 9u);
  for (int i = 0; i < 9; ++i) EXPECT_NEAR(c[static_cast<std::size_t>(i)], table[i] / 231.0, 1e-14);
}

TEST(Smoothing, ConstantSignalIsFixedPoint) {
  const auto seg = path_segment([](double) { return Vec2{12.5, -7.25}; }, 1, 60, kClock);
  for (auto m : {SmoothingMethod::none, SmoothingMethod::kalman, SmoothingMethod::savgol}) {
    const auto out = smooth_segment(seg, method(m), kClock);
    ASSERT_EQ(out.size(), seg.size());
    for (std::size_t i = 0; i < seg.size(); ++i) {
      EXPECT_NEAR(out.samples[i].position.x, 12.5, 1e-6) << to_string(m);
      EXPECT_NEAR(out.samples[i].position.y, -7.25, 1e-6) << to_string(m);
    }
  }
}

TEST(Savgol, QuadraticReproducedAtInteriorPoints) {
  const auto seg = path_segment([](double t) { return Vec2{t * t, 0.0}; }, 1, 100, kClock);
  const auto out = smooth_segment(seg, method(SmoothingMethod::savgol), kClock);
  for (std::size_t i = 4; i + 4 < seg.size(); ++i) {
    EXPECT_NEAR(out.samples[i].position.x, seg.samples[i].position.x, 1e-9);
  }
}

TEST(SavgolProperty, PolynomialsUpToOrderReproduced) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  for (int window : {5, 7, 9, 11, 15}) {
    for (int order = 0; order < std::min(window, 5); ++order) {
      std::vector<double> cx(static_cast<std::size_t>(order) + 1), cy(cx.size());
      for (auto& v : cx) v = coef(rng);
      for (auto& v : cy) v = coef(rng);
      auto poly = [&](double t) {
        Vec2 p;
        double tp = 1.0;
        for (std::size_t d = 0; d < cx.size(); ++d) {
          p.x += cx[d] * tp;
          p.y += cy[d] * tp;
          tp *= t;
        }
        return p;
      };
      const auto seg = path_segment(poly, 1, 80, kClock);
      SmoothingConfig cfg = method(SmoothingMethod::savgol);
      cfg.savgol = {window, order};
      const auto out = smooth_segment(seg, cfg, kClock);
      const std::size_t h = static_cast<std::size_t>(window / 2);
      for (std::size_t i = h; i + h < seg.size(); ++i) {
        EXPECT_NEAR(out.samples[i].position.x, seg.samples[i].position.x, 1e-9) << window << "/" << order;
        EXPECT_NEAR(out.samples[i].position.y, seg.samples[i].position.y, 1e-9) << window << "/" << order;
      }
    }
  }
}

TEST(Savgol, WhiteNoiseVarianceRatio) {
  // Monte-Carlo estimate; the closed form is the sum of squared weights,
  // 13629 / 231^2 = 0.2554.
  SynthRng rng(5);
  const double sigma = 0.5;
  Segment seg{"1", {}};
  for (FrameIndex k = 1; k <= 100008; ++k) {
    seg.samples.push_back({k, {sigma * rng.normal(), sigma * rng.normal()}, SampleStatus::observed});
  }
  const auto out = smooth_segment(seg, method(SmoothingMethod::savgol), kClock);
  double in_var = 0.0, out_var = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 4; i + 4 < seg.size(); ++i, ++n) {
    in_var += seg.samples[i].position.x * seg.samples[i].position.x;
    out_var += out.samples[i].position.x * out.samples[i].position.x;
  }
  EXPECT_NEAR(out_var / in_var, 0.255, 0.02);
  EXPECT_NEAR(13629.0 / (231.0 * 231.0), 0.2554, 1e-4);
}

TEST(Savgol, ShortSegmentPassesThrough) {
  const auto seg = path_segment([](double t) { return Vec2{std::sin(10 * t), t}; }, 5, 8, kClock);
  EXPECT_FALSE(savgol_applicable(seg, SavgolConfig{}));
  EXPECT_EQ(smooth_segment(seg, method(SmoothingMethod::savgol), kClock), seg);
}

TEST(SmoothingConfig, InvalidRejected) {
  SmoothingConfig c = method(SmoothingMethod::savgol);
  c.savgol.window = 8;
  EXPECT_THROW(c.validate(), ConfigError);
  c.savgol = {5, 5};
  EXPECT_THROW(c.validate(), ConfigError);
  c = method(SmoothingMethod::kalman);
  c.kalman.measurement_sigma_m = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.kalman.measurement_sigma_m = 0.5;
  c.kalman.process_accel_sigma = -1.0;
  const auto seg = path_segment([](double) { return Vec2{}; }, 1, 3, kClock);
  EXPECT_THROW(smooth_segment(seg, c, kClock), ConfigError);
}

TEST(Smoothing, FramesStatusesAndCountsUnchanged) {
  Segment seg = path_segment([](double t) { return Vec2{3 * t, std::cos(t)}; }, 17, 40, kClock);
  seg.samples[5].status = SampleStatus::interpolated;
  for (auto m : {SmoothingMethod::none, SmoothingMethod::kalman, SmoothingMethod::savgol}) {
    const auto out = smooth_segment(seg, method(m), kClock);
    ASSERT_EQ(out.size(), seg.size());
    for (std::size_t i = 0; i < seg.size(); ++i) {
      EXPECT_EQ(out.samples[i].frame, seg.samples[i].frame);
      EXPECT_EQ(out.samples[i].status, seg.samples[i].status);
    }
  }
}

TEST(Kalman, ConvergesOnNoiselessConstantVelocity) {
  auto truth = [](double t) { return Vec2{-20.0 + 3.0 * t, 5.0 - 1.5 * t}; };
  const auto seg = path_segment(truth, 1, 250, kClock);
  const auto out = kalman_forward(seg, KalmanConfig{}, kClock);
  double worst = 0.0;
  for (std::size_t i = 125; i < 250; ++i) {
    worst = std::max(worst, (out.samples[i].position - seg.samples[i].position).norm());
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(Kalman, ReducesNoiseOnConstantVelocity) {
  int better = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    SynthRng rng(seed);
    auto truth = [](double t) { return Vec2{-10.0 + 4.0 * t, 2.0 * t}; };
    Segment seg = path_segment(truth, 1, 250, kClock);
    for (auto& s : seg.samples) s.position = s.position + Vec2{0.3 * rng.normal(), 0.3 * rng.normal()};
    const auto out = kalman_forward(seg, KalmanConfig{}, kClock);
    double before = 0.0, after = 0.0;
    for (std::size_t i = 0; i < seg.size(); ++i) {
      const Vec2 p = truth(kClock.timestamp(seg.samples[i].frame));
      before += std::pow((seg.samples[i].position - p).norm(), 2);
      after += std::pow((out.samples[i].position - p).norm(), 2);
    }
    better += after < before;
  }
  EXPECT_GE(better, 190);
}

TEST(Kalman, SingleSampleUnchanged) {
  const auto seg = path_segment([](double) { return Vec2{1, 2}; }, 3, 1, kClock);
  EXPECT_EQ(kalman_forward(seg, KalmanConfig{}, kClock), seg);
}

TEST(Kalman, InnovationsZeroMeanOnMatchedModel) {
  // Simulate the filter's own model: white acceleration (integrated exactly
  // per step) plus white measurement noise.
  const KalmanConfig cfg;
  const double dt = kClock.frame_period_s();
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    SynthRng rng(1000 + seed);
    Segment seg{"1", {}};
    Vec2 p{0, 0}, v{1.0, -0.5};
    const double q = cfg.process_accel_sigma * cfg.process_accel_sigma;
    for (FrameIndex k = 1; k <= 400; ++k) {
      // Exact discretisation of continuous white acceleration: correlated
      // (position, velocity) increment per axis.
      for (int axis = 0; axis < 2; ++axis) {
        const double z1 = rng.normal(), z2 = rng.normal();
        const double var_v = q * dt, cov = q * dt * dt / 2.0, var_p = q * dt * dt * dt / 3.0;
        const double dv = std::sqrt(var_v) * z1;
        const double dp = cov / var_v * dv + std::sqrt(var_p - cov * cov / var_v) * z2;
        double& pc = axis == 0 ? p.x : p.y;
        double& vc = axis == 0 ? v.x : v.y;
        pc += vc * dt + dp;
        vc += dv;
      }
      seg.samples.push_back({k, p + Vec2{cfg.measurement_sigma_m * rng.normal(), cfg.measurement_sigma_m * rng.normal()},
                             SampleStatus::observed});
    }
    const auto trace = kalman_trace(seg, cfg, kClock);
    for (std::size_t i = 20; i < trace.innovations.size(); ++i) {
      const double e = trace.innovations[i].x / trace.innovation_sigma[i].x;
      sum += e;
      sum_sq += e * e;
      ++n;
    }
  }
  const double mean = sum / static_cast<double>(n);
  const double sd = std::sqrt(sum_sq / static_cast<double>(n) - mean * mean);
  EXPECT_LT(std::abs(mean), 3.0 * sd / std::sqrt(static_cast<double>(n)));
  // Normalised innovations of a consistent filter have unit variance.
  EXPECT_NEAR(sd, 1.0, 0.05);
}

}  // namespace
}  // namespace kinprof
