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

#include "annofix/frames.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <stdexcept>

#include <png.h>

#include "annofix/fileio.hpp"

namespace annofix {

namespace fs = std::filesystem;

GrayFrame luma(const RgbImage& rgb) {
  GrayFrame out(rgb.r.rows(), rgb.r.cols());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const unsigned v = 299u * rgb.r.data()[i] + 587u * rgb.g.data()[i] + 114u * rgb.b.data()[i];
    out.data()[i] = static_cast<std::uint8_t>((v + 500u) / 1000u);
  }
  return out;
}

namespace {

// Header tokens of a netpbm file, skipping whitespace and '#' comments.
class PnmHeader {
 public:
  explicit PnmHeader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view token() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_])) && bytes_[pos_] != '#')
      ++pos_;
    if (start == pos_) throw ImageError("PGM: truncated header");
    return bytes_.substr(start, pos_ - start);
  }

  long number() {
    const std::string_view tok = token();
    long value = 0;
    for (char c : tok) {
      if (!std::isdigit(static_cast<unsigned char>(c))) throw ImageError("PGM: bad header field '" + std::string(tok) + "'");
      value = value * 10 + (c - '0');
      if (value > (1L << 24)) throw ImageError("PGM: header value too large");
    }
    return value;
  }

  // exactly one whitespace byte separates maxval from the raster
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_])))
      throw ImageError("PGM: missing separator before raster");
    return pos_ + 1;
  }

 private:
  void skip() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

bool is_png(std::string_view bytes) {
  static constexpr unsigned char kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::memcmp(bytes.data(), kSig, 8) == 0;
}

std::string write_png(const std::uint8_t* pixels, int width, int height, png_uint_32 format) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels, 0, nullptr))
    throw ImageError(std::string("PNG encode failed: ") + image.message);
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, nullptr))
    throw ImageError(std::string("PNG encode failed: ") + image.message);
  out.resize(size);
  return out;
}

}  // namespace

GrayFrame decode_pgm(std::string_view bytes) {
  PnmHeader header(bytes);
  if (header.token() != "P5") throw ImageError("PGM: only binary P5 is supported");
  const long width = header.number();
  const long height = header.number();
  const long maxval = header.number();
  if (width < 1 || height < 1) throw ImageError("PGM: zero dimension");
  if (maxval != 255) throw ImageError("PGM: maxval must be 255 (got " + std::to_string(maxval) + ")");
  const std::size_t start = header.raster_start();
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() < start + n) throw ImageError("PGM: truncated raster");
  GrayFrame out(height, width);
  std::memcpy(out.data(), bytes.data() + start, n);
  return out;
}

std::string encode_pgm(const GrayFrame& frame) {
  std::string out = "P5\n" + std::to_string(frame.cols()) + " " + std::to_string(frame.rows()) + "\n255\n";
  out.append(reinterpret_cast<const char*>(frame.data()), static_cast<std::size_t>(frame.size()));
  return out;
}

GrayFrame decode_png(std::string_view bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw ImageError(std::string("PNG decode failed: ") + image.message);

  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  const bool alpha = (image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  const int channels = (color ? 3 : 1) + (alpha ? 1 : 0);
  image.format = color ? (alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB) : (alpha ? PNG_FORMAT_GA : PNG_FORMAT_GRAY);

  const int width = static_cast<int>(image.width), height = static_cast<int>(image.height);
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw ImageError(std::string("PNG decode failed: ") + image.message);
  }

  if (!color) {
    GrayFrame out(height, width);
    for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = buf[static_cast<std::size_t>(i) * channels];
    return out;
  }
  RgbImage rgb{GrayFrame(height, width), GrayFrame(height, width), GrayFrame(height, width)};
  for (Eigen::Index i = 0; i < rgb.r.size(); ++i) {
    const std::size_t o = static_cast<std::size_t>(i) * channels;
    rgb.r.data()[i] = buf[o];
    rgb.g.data()[i] = buf[o + 1];
    rgb.b.data()[i] = buf[o + 2];
  }
  return luma(rgb);
}

std::string encode_png(const GrayFrame& frame) {
  return write_png(frame.data(), static_cast<int>(frame.cols()), static_cast<int>(frame.rows()), PNG_FORMAT_GRAY);
}

std::string encode_png(const RgbImage& image) {
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(image.r.size()) * 3);
  for (Eigen::Index i = 0; i < image.r.size(); ++i) {
    buf[3 * i] = image.r.data()[i];
    buf[3 * i + 1] = image.g.data()[i];
    buf[3 * i + 2] = image.b.data()[i];
  }
  return write_png(buf.data(), image.width(), image.height(), PNG_FORMAT_RGB);
}

GrayFrame decode_image(std::string_view bytes) {
  if (is_png(bytes)) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pgm(bytes);
  throw ImageError("unrecognized image format");
}

GrayFrame load_image(const fs::path& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const std::runtime_error& e) {
    throw ImageError(e.what());
  }
  try {
    return decode_image(bytes);
  } catch (const ImageError& e) {
    throw ImageError(path.string() + ": " + e.what());
  }
}

FrameSequence::FrameSequence(fs::path directory) : directory_(std::move(directory)) {
  std::error_code ec;
  if (!fs::is_directory(directory_, ec)) throw ImageError("frame directory not found: " + directory_.string());
  for (const auto& entry : fs::directory_iterator(directory_)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".pgm" || ext == ".png") files_.push_back(entry.path().filename().string());
  }
  std::sort(files_.begin(), files_.end());
  if (files_.empty()) throw ImageError("no .pgm or .png frames in " + directory_.string());
  const GrayFrame first = load_image(directory_ / files_.front());
  width_ = static_cast<int>(first.cols());
  height_ = static_cast<int>(first.rows());
}

GrayFrame FrameSequence::frame(std::size_t t) const {
  if (t < 1 || t > files_.size())
    throw std::out_of_range("frame " + std::to_string(t) + " outside 1.." + std::to_string(files_.size()) + " in " +
                            directory_.string());
  GrayFrame f = load_image(directory_ / files_[t - 1]);
  if (f.cols() != width_ || f.rows() != height_)
    throw ImageError(files_[t - 1] + ": dimensions " + std::to_string(f.cols()) + "x" + std::to_string(f.rows()) +
                     " differ from sequence " + std::to_string(width_) + "x" + std::to_string(height_));
  return f;
}

FrameBuffer::FrameBuffer(std::vector<GrayFrame> frames) : frames_(std::move(frames)) {
  for (const GrayFrame& f : frames_)
    if (f.rows() != frames_.front().rows() || f.cols() != frames_.front().cols())
      throw ImageError("FrameBuffer: frames differ in size");
}

const GrayFrame& FrameBuffer::at(std::size_t t) const {
  if (t < 1 || t > frames_.size())
    throw std::out_of_range("frame " + std::to_string(t) + " outside 1.." + std::to_string(frames_.size()));
  return frames_[t - 1];
}

GrayFrame FrameBuffer::frame(std::size_t t) const { return at(t); }

void write_frame_directory(const fs::path& directory, const FrameSource& frames) {
  fs::create_directories(directory);
  for (std::size_t t = 1; t <= frames.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.pgm", t);
    write_file(directory / name, encode_pgm(frames.frame(t)));
  }
}

}  // namespace annofix
