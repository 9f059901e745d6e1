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
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace annofix {

/// Axis-aligned box in pixel units, origin at the top-left image corner.
/// Coordinates are real-valued; width and height are strictly positive.
class BoundingBox {
 public:
  /// Throws ValidationError unless all fields are finite and w, h > 0.
  BoundingBox(double x, double y, double w, double h);

  static BoundingBox from_center(double cx, double cy, double w, double h) {
    return BoundingBox(cx - w / 2.0, cy - h / 2.0, w, h);
  }

  double x() const noexcept { return x_; }
  double y() const noexcept { return y_; }
  double w() const noexcept { return w_; }
  double h() const noexcept { return h_; }
  double area() const noexcept { return w_ * h_; }
  Eigen::Vector2d center() const noexcept { return {x_ + w_ / 2.0, y_ + h_ / 2.0}; }

  /// Same size, top-left moved by (dx, dy).
  BoundingBox translated(double dx, double dy) const { return BoundingBox(x_ + dx, y_ + dy, w_, h_); }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;

 private:
  double x_, y_, w_, h_;
};

/// One frame of ground truth. The rect is present exactly when the object is visible.
class FrameLabel {
 public:
  static FrameLabel visible(const BoundingBox& rect) { return FrameLabel(rect); }
  static FrameLabel invisible() { return FrameLabel(std::nullopt); }

  bool exist() const noexcept { return rect_.has_value(); }
  const std::optional<BoundingBox>& rect() const noexcept { return rect_; }

  friend bool operator==(const FrameLabel&, const FrameLabel&) = default;

 private:
  explicit FrameLabel(std::optional<BoundingBox> rect) : rect_(std::move(rect)) {}
  std::optional<BoundingBox> rect_;
};

inline constexpr double kDefaultFps = 30.0;

/// Per-video ground-truth sequence, frame t = 1..T stored at index t-1.
class AnnotationTrack {
 public:
  /// Throws ValidationError if labels is empty or fps is not positive.
  AnnotationTrack(std::string video_id, std::vector<FrameLabel> labels, double fps = kDefaultFps);

  const std::string& video_id() const noexcept { return video_id_; }
  double fps() const noexcept { return fps_; }
  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<FrameLabel>& labels() const noexcept { return labels_; }
  const FrameLabel& operator[](std::size_t i) const { return labels_[i]; }

  std::size_t visible_count() const noexcept;

  /// Copy of this track with the labels replaced (id and fps kept).
  AnnotationTrack with_labels(std::vector<FrameLabel> labels) const {
    return AnnotationTrack(video_id_, std::move(labels), fps_);
  }

  friend bool operator==(const AnnotationTrack&, const AnnotationTrack&) = default;

 private:
  std::string video_id_;
  std::vector<FrameLabel> labels_;
  double fps_;
};

/// Scored detector output. Throws ValidationError unless 0 <= score <= 1.
class Detection {
 public:
  Detection(const BoundingBox& rect, double score);

  const BoundingBox& rect() const noexcept { return rect_; }
  double score() const noexcept { return score_; }

  friend bool operator==(const Detection&, const Detection&) = default;

 private:
  BoundingBox rect_;
  double score_;
};

struct DetectionSet {
  std::string video_id;
  std::vector<std::vector<Detection>> frames;

  friend bool operator==(const DetectionSet&, const DetectionSet&) = default;
};

/// Annotation file: {"video_id","fps","exist":[0|1...],"gt_rect":[[x,y,w,h]|null...]}.
/// Rects attached to exist=0 frames are dropped.
AnnotationTrack parse_annotations(std::string_view bytes);

/// Canonical, deterministic serialization; parse_annotations inverts it exactly.
std::string write_annotations(const AnnotationTrack& track);

/// Detection file: {"video_id","frames":[[{"rect":[x,y,w,h],"score":s}...]...]}.
DetectionSet parse_detections(std::string_view bytes);
std::string write_detections(const DetectionSet& dets);

/// Shortest decimal that round-trips to the same double ("10" rather than "10.0").
std::string format_number(double value);

/// Maximal runs of visible frames as 0-based inclusive [first, last] index pairs.
std::vector<std::pair<std::size_t, std::size_t>> visible_segments(const AnnotationTrack& track);

}  // namespace annofix
