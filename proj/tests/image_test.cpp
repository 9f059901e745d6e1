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

#include "annofix/image.hpp"

#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "annofix/fileio.hpp"
#include "annofix/frames.hpp"

namespace annofix {
namespace {

namespace fs = std::filesystem;

GrayFrame noise_frame(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> px(0, 255);
  GrayFrame f(h, w);
  for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = static_cast<std::uint8_t>(px(rng));
  return f;
}

// two-pass variance written out with plain loops
double brute_variance(const Patch& p) {
  double sum = 0.0;
  for (int r = 0; r < p.rows(); ++r)
    for (int c = 0; c < p.cols(); ++c) sum += p(r, c);
  const double mean = sum / static_cast<double>(p.size());
  double ss = 0.0;
  for (int r = 0; r < p.rows(); ++r)
    for (int c = 0; c < p.cols(); ++c) ss += (p(r, c) - mean) * (p(r, c) - mean);
  return ss / static_cast<double>(p.size());
}

fs::path temp_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("annofix_image_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

TEST(Pgm, DecodesExactValues) {
  const std::string bytes = std::string("P5\n# comment\n2 2\n255\n") + std::string("\x00\x40\x80\xff", 4);
  const GrayFrame f = decode_pgm(bytes);
  ASSERT_EQ(f.rows(), 2);
  ASSERT_EQ(f.cols(), 2);
  EXPECT_EQ(f(0, 0), 0);
  EXPECT_EQ(f(0, 1), 64);
  EXPECT_EQ(f(1, 0), 128);
  EXPECT_EQ(f(1, 1), 255);
  EXPECT_EQ(decode_pgm(encode_pgm(f)), f);
}

TEST(Pgm, RejectsOtherFormats) {
  EXPECT_THROW(decode_pgm("P2\n1 1\n255\n0"), ImageError);
  EXPECT_THROW(decode_pgm("P5\n1 1\n65535\n\0\0"), ImageError);
  EXPECT_THROW(decode_pgm("P5\n4 4\n255\nabc"), ImageError);
}

TEST(Png, WhiteRgbIsWhite) {
  RgbImage white = RgbImage::from_gray(GrayFrame::Constant(3, 5, 255));
  const GrayFrame f = decode_image(encode_png(white));
  EXPECT_EQ(f.rows(), 3);
  EXPECT_EQ(f.cols(), 5);
  EXPECT_TRUE((f.array() == 255).all());
}

TEST(Png, LumaRoundsHalfUp) {
  RgbImage img{GrayFrame::Constant(1, 1, 10), GrayFrame::Constant(1, 1, 20), GrayFrame::Constant(1, 1, 30)};
  // 0.299*10 + 0.587*20 + 0.114*30 = 18.15
  EXPECT_EQ(decode_png(encode_png(img))(0, 0), 18);
  RgbImage half{GrayFrame::Constant(1, 1, 0), GrayFrame::Constant(1, 1, 0), GrayFrame::Constant(1, 1, 0)};
  half.r(0, 0) = 5;  // 1.495 -> 1
  half.b(0, 0) = 5;  // + 0.570 = 2.065 -> 2
  EXPECT_EQ(luma(half)(0, 0), 2);
}

TEST(Png, GrayRoundTrip) {
  const GrayFrame f = noise_frame(17, 9, 3);
  EXPECT_EQ(decode_png(encode_png(f)), f);
}

TEST(FrameSequence, OrderingAndRange) {
  const fs::path dir = temp_dir("seq");
  std::vector<GrayFrame> frames;
  for (int i = 0; i < 3; ++i) frames.push_back(GrayFrame::Constant(4, 6, static_cast<std::uint8_t>(i * 10)));
  write_frame_directory(dir, FrameBuffer(frames));
  const FrameSequence seq(dir);
  ASSERT_EQ(seq.size(), 3u);
  EXPECT_EQ(seq.width(), 6);
  EXPECT_EQ(seq.height(), 4);
  EXPECT_EQ(load_frame(seq, 2)(0, 0), 10);
  EXPECT_THROW(load_frame(seq, 4), std::out_of_range);
  EXPECT_THROW(load_frame(seq, 0), std::out_of_range);
}

TEST(FrameSequence, DimensionMismatchAndMissingDir) {
  const fs::path dir = temp_dir("mismatch");
  write_file(dir / "000001.pgm", encode_pgm(GrayFrame::Zero(4, 4)));
  write_file(dir / "000002.pgm", encode_pgm(GrayFrame::Zero(5, 4)));
  const FrameSequence seq(dir);
  EXPECT_THROW(seq.frame(2), ImageError);
  EXPECT_THROW(FrameSequence(dir / "nope"), ImageError);
}

TEST(ExtractPatch, TopLeft) {
  const GrayFrame f = noise_frame(8, 8, 1);
  const Patch p = extract_patch(f, BoundingBox(0, 0, 4, 4));
  EXPECT_EQ(p, f.block(0, 0, 4, 4));
}

TEST(ExtractPatch, ClampedTooSmall) {
  const GrayFrame f = noise_frame(8, 8, 1);
  EXPECT_THROW(extract_patch(f, BoundingBox(-3, -3, 5, 5)), DegeneratePatchError);
}

TEST(ExtractPatch, RoundingRule) {
  EXPECT_EQ(patch_region(BoundingBox(1.4, 2.6, 6.2, 5.7), 20, 20), (PixelRegion{1, 2, 6, 6}));
  EXPECT_EQ(patch_region(BoundingBox(-2, 5, 10, 10), 20, 12), (PixelRegion{0, 5, 8, 7}));
}

TEST(PatchVariance, Examples) {
  EXPECT_EQ(patch_variance(Patch::Constant(4, 4, 77)), 0.0);
  Patch p(2, 2);
  p << 0, 0, 255, 255;
  EXPECT_DOUBLE_EQ(patch_variance(p), 16256.25);
}

TEST(PatchVariance, MatchesTwoPassOracle) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const int w = 4 + static_cast<int>(rng() % 30), h = 4 + static_cast<int>(rng() % 30);
    const Patch p = noise_frame(w, h, rng());
    const double v = patch_variance(p);
    EXPECT_GE(v, 0.0);
    EXPECT_NEAR(v, brute_variance(p), 1e-9 * (1.0 + v));
  }
}

TEST(Zncc, SelfMatch) {
  const GrayFrame f = noise_frame(64, 48, 5);
  const BoundingBox box(20, 15, 12, 10);
  const MatchResult m = zncc_match(extract_patch(f, box), f, box.center(), 5);
  EXPECT_EQ(m.displacement, (Displacement{0, 0}));
  EXPECT_NEAR(m.score, 1.0, 1e-12);
}

TEST(Zncc, SelfMatchPropertyOnRandomInteriorBoxes) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 60; ++i) {
    const GrayFrame f = noise_frame(80, 60, rng());
    const int w = 4 + static_cast<int>(rng() % 20), h = 4 + static_cast<int>(rng() % 20);
    const int x = static_cast<int>(rng() % (80 - w)), y = static_cast<int>(rng() % (60 - h));
    const BoundingBox box(x, y, w, h);
    const int radius = 1 + static_cast<int>(rng() % 8);
    const MatchResult m = zncc_match(extract_patch(f, box), f, box.center(), radius);
    EXPECT_EQ(m.displacement, (Displacement{0, 0}));
    EXPECT_NEAR(m.score, 1.0, 1e-12);
  }
}

TEST(Zncc, TranslatedCopy) {
  const GrayFrame a = noise_frame(64, 64, 9);
  GrayFrame b = GrayFrame::Zero(64, 64);
  // b(x, y) = a(x - 3, y + 2): content moves right 3 and up 2
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      const int sx = x - 3, sy = y + 2;
      if (sx >= 0 && sx < 64 && sy >= 0 && sy < 64) b(y, x) = a(sy, sx);
    }
  const BoundingBox box(26, 26, 12, 12);
  const MatchResult m = zncc_match(extract_patch(a, box), b, box.center(), 5);
  EXPECT_EQ(m.displacement, (Displacement{3, -2}));
  EXPECT_NEAR(m.score, 1.0, 1e-12);
}

TEST(Zncc, UniformFrameScoresZeroAndTieBreaksToOrigin) {
  const GrayFrame tmpl = noise_frame(6, 6, 2);
  const GrayFrame flat = GrayFrame::Constant(40, 40, 90);
  const MatchResult m = zncc_match(tmpl, flat, Eigen::Vector2d(20, 20), 4);
  EXPECT_EQ(m.displacement, (Displacement{0, 0}));
  EXPECT_EQ(m.score, 0.0);
  EXPECT_EQ(zncc_score(Patch::Constant(5, 5, 3), tmpl.block(0, 0, 5, 5)), 0.0);
}

TEST(Zncc, AffineIntensityInvariance) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> val(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Image<double> frame(50, 50);
    for (Eigen::Index i = 0; i < frame.size(); ++i) frame.data()[i] = val(rng);
    const BoundingBox box(18, 20, 9, 7);
    const Image<double> tmpl = extract_patch(frame, box);
    Image<double> probe = frame;
    probe.block(10, 10, 30, 30).array() += 0.3 * Image<double>::Random(30, 30).array();
    const MatchResult base = zncc_match(tmpl, probe, box.center() + Eigen::Vector2d(1, -2), 6);

    const double a = 0.1 + 5.0 * val(rng), b = -100.0 + 200.0 * val(rng);
    const Image<double> tmpl2 = (a * tmpl.array() + b).matrix();
    const Image<double> probe2 = ((a * 0.5) * probe.array() + 2.0 * b).matrix();
    const MatchResult scaled = zncc_match(tmpl2, probe2, box.center() + Eigen::Vector2d(1, -2), 6);
    EXPECT_EQ(scaled.displacement, base.displacement);
    EXPECT_NEAR(scaled.score, base.score, 1e-9);
  }
}

TEST(Zncc, IntegerSearchMatchesBruteForce) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const GrayFrame f = noise_frame(48, 40, rng());
    const GrayFrame tmpl = noise_frame(4 + static_cast<int>(rng() % 10), 4 + static_cast<int>(rng() % 10), rng());
    const Eigen::Vector2d c(5.0 + static_cast<double>(rng() % 38), 5.0 + static_cast<double>(rng() % 30));
    const int radius = 1 + static_cast<int>(rng() % 6);
    const Eigen::Vector2i o = centered_origin(c, tmpl.cols(), tmpl.rows());
    bool found = false;
    MatchResult want;
    for (const Displacement& d : search_offsets(radius)) {
      const int l = o.x() + d.dx, t = o.y() + d.dy;
      if (l < 0 || t < 0 || l + tmpl.cols() > f.cols() || t + tmpl.rows() > f.rows()) continue;
      const double s = zncc_score(tmpl, f.block(t, l, tmpl.rows(), tmpl.cols()));
      if (!found || s > want.score + 1e-12) want = {d, s};
      found = true;
    }
    if (!found) {
      EXPECT_THROW(zncc_match(tmpl, f, c, radius), MatchInfeasibleError);
      continue;
    }
    const MatchResult got = zncc_match(tmpl, f, c, radius);
    EXPECT_EQ(got.displacement, want.displacement);
    EXPECT_NEAR(got.score, want.score, 1e-9);
  }
}

TEST(Zncc, SkipsPlacementsOutsideFrame) {
  const GrayFrame f = noise_frame(20, 20, 4);
  const BoundingBox box(0, 0, 6, 6);
  const MatchResult m = zncc_match(extract_patch(f, box), f, box.center(), 3);
  EXPECT_EQ(m.displacement, (Displacement{0, 0}));
  EXPECT_THROW(zncc_match(GrayFrame::Zero(30, 30), f, Eigen::Vector2d(10, 10), 3), MatchInfeasibleError);
}

TEST(Zncc, TieBreakOrder) {
  const auto offs = search_offsets(1);
  ASSERT_EQ(offs.size(), 9u);
  EXPECT_EQ(offs[0], (Displacement{0, 0}));
  EXPECT_EQ(offs[1], (Displacement{0, -1}));
  EXPECT_EQ(offs[2], (Displacement{-1, 0}));
  EXPECT_EQ(offs[3], (Displacement{1, 0}));
  EXPECT_EQ(offs[4], (Displacement{0, 1}));
  EXPECT_EQ(offs[5], (Displacement{-1, -1}));
}

}  // namespace
}  // namespace annofix
