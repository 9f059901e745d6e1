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

#include <tuple>

namespace annofix {

PixelRegion patch_region(const BoundingBox& box, int width, int height) {
  const double x0 = std::floor(box.x());
  const double y0 = std::floor(box.y());
  const double x1 = x0 + std::round(box.w());
  const double y1 = y0 + std::round(box.h());
  const double cx0 = std::max(x0, 0.0), cy0 = std::max(y0, 0.0);
  const double cx1 = std::min(x1, static_cast<double>(width));
  const double cy1 = std::min(y1, static_cast<double>(height));
  if (cx1 - cx0 < kMinPatchSide || cy1 - cy0 < kMinPatchSide)
    throw DegeneratePatchError("patch for box (" + format_number(box.x()) + ", " + format_number(box.y()) + ", " +
                               format_number(box.w()) + ", " + format_number(box.h()) +
                               ") is smaller than 4x4 inside a " + std::to_string(width) + "x" +
                               std::to_string(height) + " frame");
  return {static_cast<int>(cx0), static_cast<int>(cy0), static_cast<int>(cx1 - cx0), static_cast<int>(cy1 - cy0)};
}

std::vector<Displacement> search_offsets(int radius) {
  std::vector<Displacement> out;
  out.reserve(static_cast<std::size_t>((2 * radius + 1) * (2 * radius + 1)));
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) out.push_back({dx, dy});
  std::sort(out.begin(), out.end(), [](const Displacement& a, const Displacement& b) {
    return std::make_tuple(a.dx * a.dx + a.dy * a.dy, a.dy, a.dx) <
           std::make_tuple(b.dx * b.dx + b.dy * b.dy, b.dy, b.dx);
  });
  return out;
}

}  // namespace annofix
