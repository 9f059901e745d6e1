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

#include "annofix/render.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "annofix/errors.hpp"
#include "annofix/fileio.hpp"

namespace annofix {

Rgb parse_color(std::string_view text) {
  static const std::pair<std::string_view, Rgb> kNamed[] = {
      {"green", kGreen},          {"red", kRed},           {"blue", {0, 0, 255}},      {"yellow", {255, 255, 0}},
      {"cyan", {0, 255, 255}},    {"magenta", {255, 0, 255}}, {"white", {255, 255, 255}}, {"black", {0, 0, 0}}};
  for (const auto& [name, rgb] : kNamed)
    if (text == name) return rgb;
  if (text.size() == 7 && text[0] == '#') {
    unsigned v = 0;
    for (char c : text.substr(1)) {
      int d = c >= '0' && c <= '9' ? c - '0' : c >= 'a' && c <= 'f' ? c - 'a' + 10 : c >= 'A' && c <= 'F' ? c - 'A' + 10 : -1;
      if (d < 0) throw std::invalid_argument("bad color: " + std::string(text));
      v = v * 16 + static_cast<unsigned>(d);
    }
    return {static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
  }
  throw std::invalid_argument("bad color: " + std::string(text));
}

void draw_box(RgbImage& image, const BoundingBox& box, Rgb color) {
  const long x0 = std::lround(box.x()), y0 = std::lround(box.y());
  const long x1 = std::lround(box.x() + box.w()) - 1, y1 = std::lround(box.y() + box.h()) - 1;
  const long w = image.width(), h = image.height();
  const auto put = [&](long x, long y) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    image.r(y, x) = color.r;
    image.g(y, x) = color.g;
    image.b(y, x) = color.b;
  };
  for (long x = x0; x <= x1; ++x) {
    put(x, y0);
    put(x, y1);
  }
  for (long y = y0; y <= y1; ++y) {
    put(x0, y);
    put(x1, y);
  }
}

RgbImage render_frame(const GrayFrame& frame, std::span<const Overlay> overlays, std::size_t t) {
  RgbImage out = RgbImage::from_gray(frame);
  for (const Overlay& o : overlays) {
    const auto& rect = (*o.track)[t - 1].rect();
    if (rect) draw_box(out, *rect, o.color);
  }
  return out;
}

RenderSummary render_video(const FrameSource& frames, std::span<const Overlay> overlays,
                           const std::filesystem::path& out_dir) {
  for (const Overlay& o : overlays)
    if (o.track->size() != frames.size())
      throw ValidationError("render: " + o.track->video_id() + " has " + std::to_string(o.track->size()) +
                            " labels for " + std::to_string(frames.size()) + " frames");
  RenderSummary summary;
  for (std::size_t t = 1; t <= frames.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "%06zu.png", t);
    try {
      write_file(out_dir / name, encode_png(render_frame(frames.frame(t), overlays, t)));
      ++summary.written;
    } catch (const std::exception& e) {
      summary.failures.push_back("frame " + std::to_string(t) + ": " + e.what());
    }
  }
  return summary;
}

}  // namespace annofix
