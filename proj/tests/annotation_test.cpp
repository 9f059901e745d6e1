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

#include "annofix/annotation.hpp"

#include <random>

#include <gtest/gtest.h>

#include "annofix/errors.hpp"

namespace annofix {
namespace {

AnnotationTrack random_track(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(1, 60);
  std::uniform_real_distribution<double> pos(-50.0, 700.0);
  std::uniform_real_distribution<double> size(0.01, 200.0);
  std::bernoulli_distribution vis(0.7);
  std::vector<FrameLabel> labels;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) {
    if (vis(rng)) {
      labels.push_back(FrameLabel::visible(BoundingBox(pos(rng), pos(rng), size(rng), size(rng))));
    } else {
      labels.push_back(FrameLabel::invisible());
    }
  }
  const double fps = std::uniform_int_distribution<int>(0, 1)(rng) ? 30.0 : 24.000001;
  return AnnotationTrack("video_" + std::to_string(rng() % 1000) + "\"quoted\"", std::move(labels), fps);
}

TEST(BoundingBox, RejectsNonPositiveSize) {
  EXPECT_THROW(BoundingBox(0, 0, 0, 10), ValidationError);
  EXPECT_THROW(BoundingBox(0, 0, 10, -1), ValidationError);
  EXPECT_THROW(BoundingBox(0, 0, std::nan(""), 1), ValidationError);
}

TEST(BoundingBox, Center) {
  const BoundingBox b(10, 20, 30, 40);
  EXPECT_DOUBLE_EQ(b.center().x(), 25.0);
  EXPECT_DOUBLE_EQ(b.center().y(), 40.0);
}

TEST(AnnotationTrack, RejectsEmptyAndBadFps) {
  EXPECT_THROW(AnnotationTrack("v", {}), ValidationError);
  EXPECT_THROW(AnnotationTrack("v", {FrameLabel::invisible()}, 0.0), ValidationError);
}

TEST(ParseAnnotations, TwoFrames) {
  const AnnotationTrack t = parse_annotations(R"({"exist":[1,0],"gt_rect":[[10,20,30,40],null]})");
  ASSERT_EQ(t.size(), 2u);
  ASSERT_TRUE(t[0].exist());
  EXPECT_EQ(*t[0].rect(), BoundingBox(10, 20, 30, 40));
  EXPECT_FALSE(t[1].exist());
  EXPECT_EQ(t.fps(), 30.0);
}

TEST(ParseAnnotations, ZeroWidthNamesFrame) {
  try {
    parse_annotations(R"({"exist":[1],"gt_rect":[[5,5,0,10]]})");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.frame(), 1u);
  }
}

TEST(ParseAnnotations, VisibleWithoutRect) {
  try {
    parse_annotations(R"({"exist":[0,1],"gt_rect":[null,null]})");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.frame(), 2u);
  }
}

TEST(ParseAnnotations, PlaceholderRectOnInvisibleFrameIsDropped) {
  const AnnotationTrack t = parse_annotations(R"({"exist":[0],"gt_rect":[[0,0,0,0]]})");
  EXPECT_FALSE(t[0].exist());
  EXPECT_EQ(write_annotations(t), "{\"video_id\":\"\",\"fps\":30,\"exist\":[0],\"gt_rect\":[null]}\n");
}

TEST(ParseAnnotations, SyntaxErrorCarriesPosition) {
  try {
    parse_annotations("{\"exist\":[1,\n  0,,]}");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_GT(e.column(), 1u);
  }
}

TEST(ParseAnnotations, LengthMismatch) {
  EXPECT_THROW(parse_annotations(R"({"exist":[1,0],"gt_rect":[[1,1,1,1]]})"), ValidationError);
}

TEST(WriteAnnotations, CanonicalBytes) {
  const AnnotationTrack t("a", {FrameLabel::visible(BoundingBox(1.5, 2, 30, 40.25))});
  const std::string bytes = write_annotations(t);
  EXPECT_EQ(bytes, "{\"video_id\":\"a\",\"fps\":30,\"exist\":[1],\"gt_rect\":[[1.5,2,30,40.25]]}\n");
  EXPECT_EQ(write_annotations(parse_annotations(bytes)), bytes);
}

TEST(WriteAnnotations, RoundTripAndDeterminismProperty) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) {
    const AnnotationTrack t = random_track(rng);
    const std::string a = write_annotations(t);
    EXPECT_EQ(a, write_annotations(t));
    const AnnotationTrack back = parse_annotations(a);
    ASSERT_EQ(back, t) << a;
  }
}

TEST(ParseDetections, OrderPreserved) {
  const DetectionSet d = parse_detections(
      R"({"video_id":"v","frames":[[{"rect":[0,0,5,5],"score":0.9},{"rect":[1,1,5,5],"score":0.3}],[]]})");
  ASSERT_EQ(d.frames.size(), 2u);
  ASSERT_EQ(d.frames[0].size(), 2u);
  EXPECT_EQ(d.frames[0][0].score(), 0.9);
  EXPECT_EQ(d.frames[0][1].score(), 0.3);
  EXPECT_TRUE(d.frames[1].empty());
  EXPECT_EQ(parse_detections(write_detections(d)), d);
}

TEST(ParseDetections, ScoreOutOfRange) {
  try {
    parse_detections(R"({"frames":[[],[{"rect":[0,0,5,5],"score":1.5}]]})");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.frame(), 2u);
  }
}

TEST(ParseDetections, AllFramesEmpty) {
  const DetectionSet d = parse_detections(R"({"frames":[[],[],[]]})");
  EXPECT_EQ(d.frames.size(), 3u);
}

TEST(VisibleSegments, MaximalRuns) {
  const auto v = FrameLabel::visible(BoundingBox(0, 0, 1, 1));
  const auto n = FrameLabel::invisible();
  const AnnotationTrack t("s", {v, v, n, v, n, n, v, v, v});
  const auto seg = visible_segments(t);
  ASSERT_EQ(seg.size(), 3u);
  EXPECT_EQ(seg[0], std::make_pair(std::size_t{0}, std::size_t{1}));
  EXPECT_EQ(seg[1], std::make_pair(std::size_t{3}, std::size_t{3}));
  EXPECT_EQ(seg[2], std::make_pair(std::size_t{6}, std::size_t{8}));
}

}  // namespace
}  // namespace annofix
