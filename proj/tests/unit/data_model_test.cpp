#include <gtest/gtest.h>

#include <random>

#include "kinprof/data_model.hpp"
#include "test_support.hpp"

namespace kinprof {
namespace {

using test::make_trajectory;

TEST(FrameClock, TimestampsFromFrameIndex) {
  const FrameClock clock(25.0, 100);
  EXPECT_DOUBLE_EQ(clock.timestamp(1), 0.04);
  EXPECT_DOUBLE_EQ(clock.timestamp(25), 1.0);
  EXPECT_THROW(FrameClock(0.0, 10), ConfigError);
  EXPECT_THROW(FrameClock(25.0, 0), ConfigError);
}

TEST(Segment, ShortGapIsInterpolated) {
  const auto traj = make_trajectory({{1, {0, 0}}, {4, {3, 0}}});
  const auto segs = segment(traj, 3);
  ASSERT_EQ(segs.size(), 1u);
  ASSERT_EQ(segs[0].size(), 4u);
  EXPECT_EQ(segs[0].samples[1].status, SampleStatus::interpolated);
  EXPECT_EQ(segs[0].samples[2].status, SampleStatus::interpolated);
  EXPECT_NEAR(segs[0].samples[1].position.x, 1.0, 1e-12);
  EXPECT_NEAR(segs[0].samples[2].position.x, 2.0, 1e-12);
  EXPECT_EQ(segs[0].samples[3].status, SampleStatus::observed);
}

TEST(Segment, LongGapSplits) {
  const auto traj = make_trajectory({{1, {0, 0}}, {2, {1, 0}}, {7, {6, 0}}, {8, {7, 0}}});
  const auto segs = segment(traj, 3);
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[0].first_frame(), 1);
  EXPECT_EQ(segs[0].last_frame(), 2);
  EXPECT_EQ(segs[1].first_frame(), 7);
  for (const auto& s : segs) {
    for (const auto& p : s.samples) EXPECT_EQ(p.status, SampleStatus::observed);
  }
}

TEST(Segment, FullyObservedIsIdentity) {
  const auto traj = make_trajectory({{3, {0, 1}}, {4, {1, 1}}, {5, {2, 3}}});
  const auto segs = segment(traj, 3);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].samples, traj.samples);
}

TEST(Segment, EmptyTrajectoryGivesNoSegments) {
  Trajectory t;
  EXPECT_TRUE(segment(t, 3).empty());
  EXPECT_THROW(segment(t, -1), ConfigError);
}

TEST(Segment, ZeroMaxGapSplitsAtEveryMissingFrame) {
  const auto traj = make_trajectory({{1, {0, 0}}, {3, {2, 0}}});
  EXPECT_EQ(segment(traj, 0).size(), 2u);
}

// Random sparse trajectories: collinearity of fills, idempotence, and
// observed-count preservation.
TEST(SegmentProperty, RandomTrajectories) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> step(1, 7);
  std::uniform_real_distribution<double> coord(-40.0, 40.0);
  std::uniform_int_distribution<int> gmax(0, 5);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::pair<FrameIndex, Vec2>> obs;
    FrameIndex k = 1 + step(rng);
    const int n = 1 + static_cast<int>(rng() % 30);
    for (int i = 0; i < n; ++i) {
      obs.push_back({k, {coord(rng), coord(rng)}});
      k += step(rng);
    }
    const auto traj = make_trajectory(obs);
    const int g = gmax(rng);
    const auto segs = segment(traj, g);

    std::size_t observed = 0;
    for (const auto& s : segs) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& p = s.samples[i];
        if (i > 0) {
          EXPECT_EQ(p.frame, s.samples[i - 1].frame + 1);
        }
        if (p.status == SampleStatus::observed) {
          ++observed;
          continue;
        }
        ASSERT_EQ(p.status, SampleStatus::interpolated);
        std::size_t lo = i, hi = i;
        while (s.samples[lo].status != SampleStatus::observed) --lo;
        while (s.samples[hi].status != SampleStatus::observed) ++hi;
        const Vec2 a = s.samples[lo].position, b = s.samples[hi].position;
        const Vec2 d = b - a, e = p.position - a;
        EXPECT_NEAR(d.x * e.y - d.y * e.x, 0.0, 1e-9 * (1.0 + d.norm()));
        EXPECT_LE(hi - lo - 1, static_cast<std::size_t>(g));
      }
    }
    EXPECT_EQ(observed, traj.observed_count());

    const auto again = segment(flatten(traj, segs), g);
    EXPECT_EQ(again, segs);
  }
}

TEST(Validate, RejectsNonFiniteAndOffPitch) {
  auto t = make_trajectory({{1, {0, 0}}, {2, {1, 0}}});
  EXPECT_NO_THROW(validate(t));
  t.samples[1].position.x = std::nan("");
  EXPECT_THROW(validate(t), ValidationError);
  t.samples[1].position = {90.0, 0.0};
  EXPECT_THROW(validate(t), ValidationError);
  t.samples[1].position = {1.0, 0.0};
  t.samples[0].status = SampleStatus::missing;
  t.samples[1].status = SampleStatus::interpolated;
  EXPECT_THROW(validate(t), ValidationError);  // no observed sample
}

TEST(PitchConvention, CornerOriginShift) {
  PitchConvention corner{PitchOrigin::corner, 105.0, 68.0, false};
  const Vec2 c = corner.to_canonical({52.5, 34.0});
  EXPECT_DOUBLE_EQ(c.x, 0.0);
  EXPECT_DOUBLE_EQ(c.y, 0.0);
  const Vec2 back = corner.from_canonical({-10.0, 3.0});
  EXPECT_DOUBLE_EQ(back.x, 42.5);
  EXPECT_DOUBLE_EQ(back.y, 37.0);
}

}  // namespace
}  // namespace kinprof
