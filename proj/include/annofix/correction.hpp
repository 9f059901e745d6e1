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

// Semi-automatic annotation correction. Within each run of visible frames the
// box of frame k is matched into frame k+1 around the annotated center there;
// the displacements are accumulated, a least-squares line is removed from the
// accumulation per axis, and the residual is added to the annotated position.
//
// Sign convention: u = matched center - annotated center on the later frame,
// corrected center = annotated center + residual.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "annofix/annotation.hpp"
#include "annofix/frames.hpp"

namespace annofix {

struct CorrectionConfig {
  int radius = 20;
  int passes = 2;
  int min_segment = 3;

  /// Throws std::invalid_argument unless radius >= 1, passes >= 1, min_segment >= 3.
  void validate() const;
};

enum class TransitionStatus { Ok, Saturated, Degenerate, Infeasible };

/// Per-axis series, one row per frame of a segment; column 0 is x, column 1 is y.
using AxisSeries = Eigen::Matrix<double, Eigen::Dynamic, 2>;

struct LineFit {
  Eigen::Vector2d slope = Eigen::Vector2d::Zero();
  Eigen::Vector2d intercept = Eigen::Vector2d::Zero();
  AxisSeries residuals;
};

struct DisplacementChain {
  std::size_t t0 = 0, t1 = 0;  // 1-based, inclusive
  AxisSeries u;                // u.row(0) == 0
  AxisSeries cumulative;
  LineFit trend;
  std::vector<TransitionStatus> status;  // status[0] describes frame t0 and is always Ok
  std::vector<double> score;
  std::vector<bool> clamped;
  bool applied = false;  // false for segments shorter than min_segment

  std::size_t length() const { return t1 - t0 + 1; }
  std::size_t saturated_count() const;
};

/// Displacements for the visible segment [t0, t1] (1-based). Failed transitions
/// get u = 0 and a Degenerate or Infeasible status.
DisplacementChain measure_displacements(const FrameSource& frames, const AnnotationTrack& track, std::size_t t0,
                                        std::size_t t1, int radius);

/// Per-axis OLS of `cumulative` against k = first_frame, first_frame+1, ...
/// Fewer than `min_points` rows gives a zero trend and zero residuals.
LineFit detrend(const AxisSeries& cumulative, double first_frame = 0.0, int min_points = 3);

/// Running sum down the rows.
AxisSeries cumulate(const AxisSeries& u);

struct PassDiagnostics {
  std::vector<DisplacementChain> chains;
};

struct CorrectionResult {
  AnnotationTrack track;
  std::vector<PassDiagnostics> passes;
};

/// One measurement/detrend/shift round. Throws ValidationError when the frame
/// count differs from the track length; per-transition failures are recorded.
AnnotationTrack correct_pass(const FrameSource& frames, const AnnotationTrack& track, const CorrectionConfig& config,
                             PassDiagnostics* diagnostics = nullptr);

/// correct_pass applied config.passes times, each pass consuming the previous output.
CorrectionResult correct(const FrameSource& frames, const AnnotationTrack& track, const CorrectionConfig& config = {});

/// {"video_id", "config", "passes": [{"segments": [{t0, t1, u, cumulative, trend, residuals, status, ...}]}]}
std::string diagnostics_json(const CorrectionResult& result, const CorrectionConfig& config);

const char* status_name(TransitionStatus status);

}  // namespace annofix
