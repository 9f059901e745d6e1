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

// Detection and tracking metrics for single-object video annotation.
//
// Per frame, a detection is a hit when it is on a visible frame with
// IoU >= 0.5, a false alarm when its IoU with the ground truth is exactly 0
// (every detection on an invisible frame), and neither when 0 < IoU < 0.5.
// Tracking accuracy averages IoU_t*v_t*p_t + (1-p_t)(1-v_t) over frames, where
// IoU_t belongs to the highest-scoring surviving detection. The modified
// variant divides the same numerator by sum(max(v_t, n_t) + (1-p_t)(1-v_t)),
// so every extra detection on a frame enlarges the denominator.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "annofix/annotation.hpp"

namespace annofix {

inline constexpr double kHitIou = 0.5;

/// Score cutoff. Inclusive keeps score >= value; exclusive keeps score > value.
struct Threshold {
  double value = 0.0;
  bool exclusive = false;

  bool admits(double score) const noexcept { return exclusive ? score > value : score >= value; }
};

struct FrameOutcome {
  std::size_t t = 0;         // 1-based frame index
  bool visible = false;      // v_t
  std::size_t n = 0;         // detections surviving the threshold
  double best_iou = 0.0;     // max IoU over surviving detections
  double top_iou = 0.0;      // IoU of the highest-scoring surviving detection
  int hits = 0;              // 0 or 1
  std::size_t false_alarms = 0;
};

struct DiffStats {
  double mu_x = 0, sigma_x = 0, mu_y = 0, sigma_y = 0;
  double mu_nx = 0, sigma_nx = 0, mu_ny = 0, sigma_ny = 0;  // normalized by the first set's w and h
  std::size_t count = 0;                                    // co-visible frames
};

/// A ground-truth track with the detector output for the same video.
struct EvalPair {
  const AnnotationTrack* track = nullptr;
  const DetectionSet* detections = nullptr;
};

double iou(const BoundingBox& a, const BoundingBox& b);

/// Detections admitted by `threshold`, original order kept.
std::vector<Detection> surviving(std::span<const Detection> dets, const Threshold& threshold);

/// `dets` must already be thresholded.
FrameOutcome classify_frame(const FrameLabel& label, std::span<const Detection> dets, std::size_t t = 0);

/// Per-frame outcomes; throws ValidationError when the frame counts differ.
std::vector<FrameOutcome> classify_track(const AnnotationTrack& track, const DetectionSet& dets,
                                         const Threshold& threshold);

/// 100 * hits / visible frames. Throws MetricError without visible frames.
double hit_rate(std::span<const FrameOutcome> outcomes);

/// false alarms * 60 * fps / frames. Throws MetricError on empty input or fps <= 0.
double fa_per_min(std::span<const FrameOutcome> outcomes, double fps);

double tracking_accuracy(std::span<const FrameOutcome> outcomes);
double modified_tracking_accuracy(std::span<const FrameOutcome> outcomes);
double tracking_accuracy(const AnnotationTrack& track, const DetectionSet& dets, const Threshold& threshold);
double modified_tracking_accuracy(const AnnotationTrack& track, const DetectionSet& dets, const Threshold& threshold);

struct Calibration {
  Threshold threshold;
  double fa_per_min = 0.0;  // achieved at `threshold`
  bool no_detections = false;
};

/// Smallest threshold (over 0 and the distinct detection scores) whose pooled
/// FA/min is at most `target`. If even the highest score is too permissive the
/// result is that score, exclusive, which admits nothing.
Calibration calibrate_threshold(std::span<const EvalPair> videos, double target_fa_per_min);
Calibration calibrate_threshold(const AnnotationTrack& track, const DetectionSet& dets, double target_fa_per_min);

/// Pooled FA/min over several videos: total false alarms per total minutes.
double pooled_fa_per_min(std::span<const EvalPair> videos, const Threshold& threshold);

/// Center differences b - a over frames visible in both tracks.
DiffStats diff_stats(const AnnotationTrack& a, const AnnotationTrack& b);
DiffStats diff_stats(std::span<const std::pair<const AnnotationTrack*, const AnnotationTrack*>> pairs);

/// Tracking accuracy of `b` scored as a detector against `a`.
double compare_tracks(const AnnotationTrack& a, const AnnotationTrack& b);
double compare_tracks(std::span<const std::pair<const AnnotationTrack*, const AnnotationTrack*>> pairs);

struct VideoReport {
  std::string video_id;
  std::optional<double> hit_rate;
  double fa_per_min = 0.0;
  double ta = 0.0;
  double mta = 0.0;
  std::vector<FrameOutcome> outcomes;
};

struct EvalReport {
  Threshold threshold;
  bool calibrated = false;
  std::optional<double> target_fa_per_min;
  std::optional<double> hit_rate;  // empty when no frame is visible
  double fa_per_min = 0.0;
  double ta = 0.0;
  double mta = 0.0;
  std::size_t frames = 0;
  std::vector<VideoReport> videos;
};

/// Pooled metrics over all frames of all videos at a fixed threshold.
EvalReport evaluate(std::span<const EvalPair> videos, const Threshold& threshold);

/// Calibrates to `target_fa_per_min` first, then evaluates.
EvalReport evaluate_at_fa(std::span<const EvalPair> videos, double target_fa_per_min);

std::string report_json(const EvalReport& report, bool include_frames = true);

/// Aligned text table; FA, HR, TA, MTA columns, or Th, HR, TA, MTA when calibrated.
std::string report_table(const EvalReport& report);

}  // namespace annofix
