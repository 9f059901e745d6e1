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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "annofix/annotation.hpp"
#include "annofix/frames.hpp"

namespace annofix {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kGreen{0, 255, 0};
inline constexpr Rgb kRed{255, 0, 0};

/// Named color (green, red, blue, yellow, cyan, magenta, white, black) or #rrggbb.
/// Throws std::invalid_argument otherwise.
Rgb parse_color(std::string_view text);

/// 1-px outline through the rounded corners, clipped to the image.
void draw_box(RgbImage& image, const BoundingBox& box, Rgb color);

struct Overlay {
  const AnnotationTrack* track = nullptr;
  Rgb color;
};

/// Frame t (1-based) with every overlay's box drawn in order.
RgbImage render_frame(const GrayFrame& frame, std::span<const Overlay> overlays, std::size_t t);

struct RenderSummary {
  std::size_t written = 0;
  std::vector<std::string> failures;  // one message per frame that could not be rendered
};

/// Writes 000001.png, ... into `out_dir`. Throws ValidationError when an
/// overlay's length differs from the frame count.
RenderSummary render_video(const FrameSource& frames, std::span<const Overlay> overlays,
                           const std::filesystem::path& out_dir);

}  // namespace annofix
