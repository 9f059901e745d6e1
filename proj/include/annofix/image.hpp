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

// Dense grayscale images, patch extraction and zero-mean normalized
// cross-correlation search. Images are row-major Eigen matrices: rows are
// image rows (y), columns are image columns (x).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "annofix/annotation.hpp"
#include "annofix/errors.hpp"

namespace annofix {

template <typename Scalar>
using Image = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using GrayFrame = Image<std::uint8_t>;

/// Template cut from a frame; at least 4x4 when produced by extract_patch.
template <typename Scalar>
using PatchT = Image<Scalar>;
using Patch = PatchT<std::uint8_t>;

inline constexpr int kMinPatchSide = 4;

struct Displacement {
  int dx = 0;
  int dy = 0;
  friend bool operator==(const Displacement&, const Displacement&) = default;
};

struct MatchResult {
  Displacement displacement;
  double score = 0.0;
};

/// Integer pixel rectangle, half-open: columns [x, x+width), rows [y, y+height).
struct PixelRegion {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
  friend bool operator==(const PixelRegion&, const PixelRegion&) = default;
};

/// floor(x), floor(y), round(w), round(h), intersected with a width x height frame.
/// Throws DegeneratePatchError when the result is smaller than 4x4.
PixelRegion patch_region(const BoundingBox& box, int width, int height);

template <typename Derived>
PatchT<typename Derived::Scalar> extract_patch(const Eigen::MatrixBase<Derived>& frame, const BoundingBox& box) {
  const PixelRegion r = patch_region(box, static_cast<int>(frame.cols()), static_cast<int>(frame.rows()));
  return frame.block(r.y, r.x, r.height, r.width);
}

/// Population variance (divide by N) of the patch intensities.
template <typename Derived>
double patch_variance(const Eigen::MatrixBase<Derived>& patch) {
  const auto values = patch.template cast<double>().array();
  const double mean = values.mean();
  return (values - mean).square().mean();
}

/// Top-left corner of a tw x th template centered on `center`.
inline Eigen::Vector2i centered_origin(const Eigen::Vector2d& center, Eigen::Index tw, Eigen::Index th) {
  // epsilon absorbs representation error for integer-aligned boxes
  constexpr double kEps = 1e-9;
  return {static_cast<int>(std::floor(center.x() - static_cast<double>(tw) / 2.0 + kEps)),
          static_cast<int>(std::floor(center.y() - static_cast<double>(th) / 2.0 + kEps))};
}

/// Search offsets in [-radius, radius]^2 ordered by the tie-break rule:
/// smallest dx^2 + dy^2, then smallest dy, then smallest dx.
std::vector<Displacement> search_offsets(int radius);

/// ZNCC of two equally sized arrays; 0 when either side has zero variance.
template <typename DerivedA, typename DerivedB>
double zncc_score(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  const auto av = a.template cast<double>().array();
  const auto bv = b.template cast<double>().array();
  const double n = static_cast<double>(av.size());
  const double am = av.mean();
  const double bm = bv.mean();
  const double saa = (av - am).square().sum();
  const double sbb = (bv - bm).square().sum();
  // relative floor so constant float inputs whose mean is inexact still count as flat
  if (saa <= 1e-12 * n * (am * am + 1.0) || sbb <= 1e-12 * n * (bm * bm + 1.0)) return 0.0;
  const double sab = ((av - am) * (bv - bm)).sum();
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Places `tmpl` centered at center + d for every integer d in [-radius, radius]^2,
/// skipping placements that leave the frame, and returns the best-scoring d.
/// A later candidate (in tie-break order) must beat the incumbent by more than
/// 1e-12 to replace it. Throws MatchInfeasibleError when no placement fits.
template <typename DerivedT, typename DerivedF>
MatchResult zncc_match(const Eigen::MatrixBase<DerivedT>& tmpl, const Eigen::MatrixBase<DerivedF>& frame,
                       const Eigen::Vector2d& center, int radius) {
  if (radius < 1) throw std::invalid_argument("zncc_match: radius must be >= 1");
  const Eigen::Index tw = tmpl.cols(), th = tmpl.rows();
  const Eigen::Index fw = frame.cols(), fh = frame.rows();
  if (tw < 1 || th < 1) throw MatchInfeasibleError("zncc_match: empty template");

  const Image<double> t = tmpl.template cast<double>();
  const Eigen::Vector2i origin = centered_origin(center, tw, th);

  // integer frames: window sums are exact, so variance by sum of squares loses nothing
  constexpr bool kExactSums = std::is_integral_v<typename DerivedF::Scalar>;
  const double n = static_cast<double>(tw * th);
  const double tmean = t.mean();
  const Image<double> tc = (t.array() - tmean).matrix();
  const double saa = tc.squaredNorm();
  const bool flat_template = saa <= 1e-12 * n * (tmean * tmean + 1.0);
  Image<double> f;
  if constexpr (kExactSums) f = frame.template cast<double>();

  bool found = false;
  MatchResult best;
  for (const Displacement& d : search_offsets(radius)) {
    const long left = static_cast<long>(origin.x()) + d.dx;
    const long top = static_cast<long>(origin.y()) + d.dy;
    if (left < 0 || top < 0 || left + tw > fw || top + th > fh) continue;
    double s = 0.0;
    if constexpr (kExactSums) {
      const auto w = f.block(top, left, th, tw);
      const double sb = w.sum();
      const double sbb = w.squaredNorm() - sb * sb / n;
      const double bm = sb / n;
      if (!flat_template && sbb > 1e-12 * n * (bm * bm + 1.0))
        s = std::clamp(tc.cwiseProduct(w).sum() / std::sqrt(saa * sbb), -1.0, 1.0);
    } else {
      s = zncc_score(t, frame.block(top, left, th, tw));
    }
    if (!found || s > best.score + 1e-12) {
      best = {d, s};
      found = true;
    }
  }
  if (!found)
    throw MatchInfeasibleError("zncc_match: no feasible placement for a " + std::to_string(tw) + "x" +
                               std::to_string(th) + " template in a " + std::to_string(fw) + "x" +
                               std::to_string(fh) + " frame");
  return best;
}

}  // namespace annofix
