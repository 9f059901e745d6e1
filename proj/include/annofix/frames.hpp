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

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "annofix/image.hpp"

namespace annofix {

/// Three 8-bit planes of equal size.
struct RgbImage {
  GrayFrame r, g, b;

  static RgbImage from_gray(const GrayFrame& gray) { return {gray, gray, gray}; }
  int width() const { return static_cast<int>(r.cols()); }
  int height() const { return static_cast<int>(r.rows()); }
};

/// Integer luma 0.299R + 0.587G + 0.114B, rounded half-up.
GrayFrame luma(const RgbImage& rgb);

/// Binary PGM (P5), maxval 255.
GrayFrame decode_pgm(std::string_view bytes);
std::string encode_pgm(const GrayFrame& frame);

/// 8-bit PNG (gray, gray+alpha, RGB or RGBA); color is reduced by luma, alpha ignored.
GrayFrame decode_png(std::string_view bytes);
std::string encode_png(const GrayFrame& frame);
std::string encode_png(const RgbImage& image);

/// Dispatches on the file signature (P5 or PNG).
GrayFrame decode_image(std::string_view bytes);
GrayFrame load_image(const std::filesystem::path& path);

/// Random-access source of equally sized frames, t = 1..size().
/// Implementations must tolerate concurrent frame() calls.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::size_t size() const = 0;
  virtual int width() const = 0;
  virtual int height() const = 0;
  /// Throws std::out_of_range outside 1..size().
  virtual GrayFrame frame(std::size_t t) const = 0;
};

/// Frames stored as *.pgm / *.png files in one directory, ordered by file name.
class FrameSequence final : public FrameSource {
 public:
  /// Lists the directory and reads the first frame for its dimensions.
  explicit FrameSequence(std::filesystem::path directory);

  std::size_t size() const override { return files_.size(); }
  int width() const override { return width_; }
  int height() const override { return height_; }
  GrayFrame frame(std::size_t t) const override;

  const std::filesystem::path& directory() const noexcept { return directory_; }
  const std::vector<std::string>& file_names() const noexcept { return files_; }

 private:
  std::filesystem::path directory_;
  std::vector<std::string> files_;
  int width_ = 0;
  int height_ = 0;
};

/// In-memory frames, mainly for synthetic scenes.
class FrameBuffer final : public FrameSource {
 public:
  explicit FrameBuffer(std::vector<GrayFrame> frames);

  std::size_t size() const override { return frames_.size(); }
  int width() const override { return frames_.empty() ? 0 : static_cast<int>(frames_.front().cols()); }
  int height() const override { return frames_.empty() ? 0 : static_cast<int>(frames_.front().rows()); }
  GrayFrame frame(std::size_t t) const override;
  const GrayFrame& at(std::size_t t) const;

 private:
  std::vector<GrayFrame> frames_;
};

inline GrayFrame load_frame(const FrameSource& seq, std::size_t t) { return seq.frame(t); }

/// Writes frames as 000001.pgm, 000002.pgm, ... into `directory`.
void write_frame_directory(const std::filesystem::path& directory, const FrameSource& frames);

}  // namespace annofix
