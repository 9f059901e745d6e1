// Copyright 2026 The annofix Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "annofix/correction.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "annofix/errors.hpp"
#include "annofix/rng.hpp"
#include "synthetic.hpp"

namespace annofix {
namespace {

const BoundingBox kTarget(64, 48, 32, 32);

synthetic::StaticScene scene(int frames = 100, std::uint64_t seed = 1) {
  return synthetic::static_scene(frames, 192, 144, kTarget, seed);
}

AnnotationTrack with_shift(const AnnotationTrack& track, std::size_t t, double dx, double dy) {
  std::vector<FrameLabel> labels = track.labels();
  labels[t - 1] = FrameLabel::visible(labels[t - 1].rect()->translated(dx, dy));
  return track.with_labels(std::move(labels));
}

// closed-form simple linear regression, independent of the QR path
AxisSeries ols_residuals(const AxisSeries& c, double first) {
  const double n = static_cast<double>(c.rows());
  AxisSeries r(c.rows(), 2);
  for (int axis = 0; axis < 2; ++axis) {
    double sk = 0, sc = 0, skk = 0, skc = 0;
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      const double k = first + static_cast<double>(i);
      sk += k;
      sc += c(i, axis);
      skk += k * k;
      skc += k * c(i, axis);
    }
    const double slope = (n * skc - sk * sc) / (n * skk - sk * sk);
    const double icept = (sc - slope * sk) / n;
    for (Eigen::Index i = 0; i < c.rows(); ++i) r(i, axis) = c(i, axis) - (slope * (first + static_cast<double>(i)) + icept);
  }
  return r;
}

TEST(CorrectionConfig, Validation) {
  EXPECT_NO_THROW(CorrectionConfig{}.validate());
  EXPECT_THROW((CorrectionConfig{0, 2, 3}.validate()), std::invalid_argument);
  EXPECT_THROW((CorrectionConfig{20, 0, 3}.validate()), std::invalid_argument);
  EXPECT_THROW((CorrectionConfig{20, 2, 2}.validate()), std::invalid_argument);
}

TEST(MeasureDisplacements, PerfectAnnotationsGiveZero) {
  const auto s = scene(20);
  const AnnotationTrack t = synthetic::constant_track(20, kTarget);
  const DisplacementChain c = measure_displacements(s.frames, t, 1, 20, 20);
  EXPECT_TRUE(c.u.isZero(0));
  EXPECT_TRUE(c.cumulative.isZero(0));
  for (double sc : c.score) EXPECT_NEAR(sc, 1.0, 1e-12);
}

TEST(MeasureDisplacements, SingleSpikeSignConvention) {
  const auto s = scene(10);
  const AnnotationTrack t = with_shift(synthetic::constant_track(10, kTarget), 5, 6, 0);
  const DisplacementChain c = measure_displacements(s.frames, t, 1, 10, 20);
  for (Eigen::Index i = 0; i < 10; ++i) {
    const double ex = i == 4 ? -6.0 : i == 5 ? 6.0 : 0.0;
    EXPECT_EQ(c.u(i, 0), ex) << "frame " << i + 1;
    EXPECT_EQ(c.u(i, 1), 0.0) << "frame " << i + 1;
  }
}

TEST(MeasureDisplacements, FractionalSpikeIsMeasuredExactly) {
  const auto s = scene(10);
  const AnnotationTrack t = with_shift(synthetic::constant_track(10, kTarget), 5, 3.4, -2.7);
  const DisplacementChain c = measure_displacements(s.frames, t, 1, 10, 20);
  EXPECT_NEAR(c.u(4, 0), -3.4, 1e-12);
  EXPECT_NEAR(c.u(4, 1), 2.7, 1e-12);
  EXPECT_NEAR(c.u(5, 0), 3.4, 1e-12);
  EXPECT_NEAR(c.u(5, 1), -2.7, 1e-12);
  EXPECT_NEAR(c.cumulative.row(9).norm(), 0.0, 1e-12);
}

TEST(MeasureDisplacements, TemplateClippedByFrameEdge) {
  const BoundingBox edge(-10, 40, 32, 32);
  const auto s = synthetic::static_scene(12, 192, 144, edge, 6);
  const AnnotationTrack perfect = synthetic::constant_track(12, edge);
  EXPECT_TRUE(measure_displacements(s.frames, perfect, 1, 12, 20).u.isZero(1e-12));
  const AnnotationTrack spiked = with_shift(perfect, 6, 5, 3);
  const DisplacementChain c = measure_displacements(s.frames, spiked, 1, 12, 20);
  EXPECT_NEAR(c.u(5, 0), -5.0, 1e-12);
  EXPECT_NEAR(c.u(5, 1), -3.0, 1e-12);
  EXPECT_NEAR(c.u(6, 0), 5.0, 1e-12);
  EXPECT_NEAR(c.u(6, 1), 3.0, 1e-12);
}

TEST(MeasureDisplacements, BeyondRadiusSaturates) {
  const auto s = scene(10);
  const AnnotationTrack t = with_shift(synthetic::constant_track(10, kTarget), 5, 25, 0);
  const DisplacementChain c = measure_displacements(s.frames, t, 1, 10, 20);
  EXPECT_EQ(c.u(4, 0), -20.0);
  EXPECT_EQ(c.status[4], TransitionStatus::Saturated);
  EXPECT_LE(c.u.cwiseAbs().maxCoeff(), 20.0);
}

TEST(MeasureDisplacements, DegenerateTransitionIsFlaggedNotFatal) {
  const auto s = scene(6);
  std::vector<FrameLabel> labels(6, FrameLabel::visible(kTarget));
  labels[2] = FrameLabel::visible(BoundingBox(-30, 10, 32, 32));  // only 2 px wide inside the frame
  const DisplacementChain c = measure_displacements(s.frames, AnnotationTrack("d", labels), 1, 6, 20);
  EXPECT_EQ(c.status[3], TransitionStatus::Degenerate);
  EXPECT_EQ(c.u(3, 0), 0.0);
}

TEST(Detrend, ExactLineLeavesNoResidual) {
  AxisSeries c(30, 2);
  for (Eigen::Index k = 0; k < 30; ++k) c.row(k) << 2.0 * k + 3.0, -0.5 * k + 1.0;
  const LineFit f = detrend(c, 0.0);
  EXPECT_LT(f.residuals.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(f.slope.x(), 2.0, 1e-12);
  EXPECT_NEAR(f.intercept.x(), 3.0, 1e-12);
  EXPECT_NEAR(f.slope.y(), -0.5, 1e-12);
}

TEST(Detrend, ZeroSeries) {
  const LineFit f = detrend(AxisSeries::Zero(12, 2), 5.0);
  EXPECT_TRUE(f.slope.isZero(0));
  EXPECT_TRUE(f.intercept.isZero(0));
  EXPECT_TRUE(f.residuals.isZero(0));
}

TEST(Detrend, SingleSpikeMatchesClosedForm) {
  AxisSeries c = AxisSeries::Zero(50, 2);
  c(4, 0) = -6.0;
  const LineFit f = detrend(c, 1.0);
  EXPECT_LT((f.residuals - ols_residuals(c, 1.0)).cwiseAbs().maxCoeff(), 1e-9);
  // a lone outlier keeps the fraction (1 - leverage) of itself as residual
  const double kbar = 25.5, sxx = 50.0 * (50.0 * 50.0 - 1.0) / 12.0;
  const double leverage = 1.0 / 50.0 + (5.0 - kbar) * (5.0 - kbar) / sxx;
  EXPECT_NEAR(f.residuals(4, 0), -6.0 * (1.0 - leverage), 1e-9);
}

TEST(Detrend, ShortSeriesIsUntouched) {
  AxisSeries c(2, 2);
  c << 1, 2, 3, 4;
  EXPECT_TRUE(detrend(c, 0.0).residuals.isZero(0));
}

TEST(Detrend, RandomSeriesProperties) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 3 + static_cast<Eigen::Index>(rng.below(300));
    AxisSeries c(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) c.row(i) << 20 * rng.normal(), 0.1 * i + rng.normal();
    const double first = static_cast<double>(rng.below(1000));
    const LineFit f = detrend(c, first);
    EXPECT_LT((f.residuals - ols_residuals(c, first)).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT(f.residuals.colwise().sum().cwiseAbs().maxCoeff(), 1e-6 * static_cast<double>(n));
  }
}

TEST(Correct, PerfectInputIsExactFixedPoint) {
  const auto s = scene(40);
  const AnnotationTrack t = synthetic::constant_track(40, kTarget);
  const CorrectionResult r = correct(s.frames, t);
  EXPECT_EQ(r.track, t);
  ASSERT_EQ(r.passes.size(), 2u);
}

TEST(Correct, SingleSpikeIsRemoved) {
  const auto s = scene(50);
  const AnnotationTrack clean = synthetic::constant_track(50, kTarget);
  const CorrectionResult r = correct(s.frames, with_shift(clean, 5, 6, 0));
  for (std::size_t t = 1; t <= 50; ++t) {
    EXPECT_LE(std::abs(r.track[t - 1].rect()->x() - kTarget.x()), 1.0) << t;
    EXPECT_LE(std::abs(r.track[t - 1].rect()->y() - kTarget.y()), 1.0) << t;
  }
}

TEST(Correct, SparseShiftsAreRecovered) {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
    const auto s = scene(100, seed);
    const AnnotationTrack clean = synthetic::constant_track(100, kTarget);
    Rng rng(seed);
    AnnotationTrack noisy = clean;
    const auto picked = rng.sample(100, 10);
    for (std::size_t i : picked)
      noisy = with_shift(noisy, i + 1, std::round(20 * rng.uniform() - 10), std::round(20 * rng.uniform() - 10));
    const CorrectionResult r = correct(s.frames, noisy);
    std::size_t recovered = 0;
    for (std::size_t i = 0; i < 100; ++i) {
      const double err = (r.track[i].rect()->center() - kTarget.center()).cwiseAbs().maxCoeff();
      const bool corrupted = std::find(picked.begin(), picked.end(), i) != picked.end();
      if (corrupted)
        recovered += err <= 1.0;
      else
        EXPECT_LE(err, 1.0) << "seed " << seed << " frame " << i + 1;
    }
    EXPECT_GE(recovered, 9u) << "seed " << seed;
  }
}

TEST(Correct, BeyondRadiusNeedsTwoPasses) {
  const auto s = scene(40);
  const AnnotationTrack noisy = with_shift(synthetic::constant_track(40, kTarget), 20, 30, 0);
  const auto err = [&](const AnnotationTrack& t) { return (t[19].rect()->center() - kTarget.center()).norm(); };
  const CorrectionResult one = correct(s.frames, noisy, CorrectionConfig{20, 1, 3});
  const CorrectionResult two = correct(s.frames, noisy, CorrectionConfig{20, 2, 3});
  EXPECT_GT(err(one.track), 2.0);
  EXPECT_LE(err(two.track), 2.0);
  EXPECT_GE(one.passes[0].chains[0].saturated_count(), 1u);
}

TEST(Correct, LinearDriftIsAbsorbedByTrend) {
  const auto s = scene(60);
  std::vector<FrameLabel> labels;
  for (int k = 0; k < 60; ++k) labels.push_back(FrameLabel::visible(kTarget.translated(std::floor(0.2 * k), 0)));
  const AnnotationTrack drifting("drift", labels);
  const CorrectionResult r = correct(s.frames, drifting);
  // the matcher sees the drift, but removing the fitted line leaves only the rounding wiggle
  double moved = 0;
  for (int k = 0; k < 60; ++k) moved = std::max(moved, std::abs(r.track[k].rect()->x() - drifting[k].rect()->x()));
  EXPECT_LE(moved, 1.0);
  EXPECT_GT(std::abs(r.track[59].rect()->x() - kTarget.x()), 10.0);
}

TEST(Correct, SizesVisibilityAndGapsPreserved) {
  const auto s = scene(30);
  std::vector<FrameLabel> labels(30, FrameLabel::visible(kTarget));
  labels[7] = FrameLabel::invisible();
  labels[10] = FrameLabel::invisible();  // frames 9-10 form a 2-frame segment, left alone
  labels[8] = FrameLabel::visible(kTarget.translated(4, 0));
  labels[20] = FrameLabel::visible(kTarget.translated(-5, 3));
  const AnnotationTrack t("gaps", labels);
  const CorrectionResult r = correct(s.frames, t);
  for (std::size_t i = 0; i < 30; ++i) {
    ASSERT_EQ(r.track[i].exist(), t[i].exist());
    if (!t[i].exist()) continue;
    EXPECT_EQ(r.track[i].rect()->w(), t[i].rect()->w());
    EXPECT_EQ(r.track[i].rect()->h(), t[i].rect()->h());
  }
  EXPECT_EQ(r.track[8], t[8]);
  EXPECT_EQ(r.track[9], t[9]);
  EXPECT_LE((r.track[20].rect()->center() - kTarget.center()).norm(), 1.0);
  for (const auto& pass : r.passes) {
    ASSERT_EQ(pass.chains.size(), 3u);
    EXPECT_FALSE(pass.chains[1].applied);
    for (const auto& c : pass.chains) {
      EXPECT_TRUE(c.u.row(0).isZero(0));
      EXPECT_TRUE(c.cumulative.row(0).isZero(0));
      EXPECT_LT(c.trend.residuals.colwise().sum().cwiseAbs().maxCoeff(), 1e-6 * static_cast<double>(c.length()));
    }
  }
}

TEST(Correct, ClampKeepsBoxesInFrame) {
  const auto s = synthetic::static_scene(20, 192, 144, BoundingBox(2, 50, 32, 32), 4);
  const AnnotationTrack t = with_shift(synthetic::constant_track(20, s.target), 10, -8, 0);
  const CorrectionResult r = correct(s.frames, t);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_GE(r.track[i].rect()->x(), std::min(0.0, t[i].rect()->x()));
}

TEST(Correct, LengthMismatch) {
  const auto s = scene(10);
  EXPECT_THROW(correct(s.frames, synthetic::constant_track(11, kTarget)), ValidationError);
}

TEST(Correct, DiagnosticsJson) {
  const auto s = scene(12);
  const CorrectionResult r = correct(s.frames, with_shift(synthetic::constant_track(12, kTarget), 5, 3, 0));
  const std::string j = diagnostics_json(r, CorrectionConfig{});
  EXPECT_NE(j.find("\"passes\""), std::string::npos);
  EXPECT_NE(j.find("\"residuals\""), std::string::npos);
  EXPECT_EQ(j, diagnostics_json(correct(s.frames, with_shift(synthetic::constant_track(12, kTarget), 5, 3, 0)),
                                CorrectionConfig{}));
}

}  // namespace
}  // namespace annofix
