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

#include "annofix/correction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include <Eigen/QR>
#include <json.hpp>

#include "annofix/errors.hpp"
#include "annofix/image.hpp"

namespace annofix {

void CorrectionConfig::validate() const {
  if (radius < 1) throw std::invalid_argument("correction radius must be >= 1");
  if (passes < 1) throw std::invalid_argument("correction passes must be >= 1");
  if (min_segment < 3) throw std::invalid_argument("correction min_segment must be >= 3");
}

std::size_t DisplacementChain::saturated_count() const {
  return static_cast<std::size_t>(std::count(status.begin(), status.end(), TransitionStatus::Saturated));
}

const char* status_name(TransitionStatus status) {
  switch (status) {
    case TransitionStatus::Ok:
      return "ok";
    case TransitionStatus::Saturated:
      return "saturated";
    case TransitionStatus::Degenerate:
      return "degenerate";
    case TransitionStatus::Infeasible:
      return "infeasible";
  }
  return "?";
}

DisplacementChain measure_displacements(const FrameSource& frames, const AnnotationTrack& track, std::size_t t0,
                                        std::size_t t1, int radius) {
  if (t0 < 1 || t1 < t0 || t1 > track.size() || t1 > frames.size())
    throw std::out_of_range("measure_displacements: segment outside the video");
  const std::size_t n = t1 - t0 + 1;
  DisplacementChain chain;
  chain.t0 = t0;
  chain.t1 = t1;
  chain.u = AxisSeries::Zero(static_cast<Eigen::Index>(n), 2);
  chain.status.assign(n, TransitionStatus::Ok);
  chain.score.assign(n, 1.0);
  chain.clamped.assign(n, false);

  GrayFrame current = frames.frame(t0);
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t k = t0 + i - 1;
    GrayFrame next = frames.frame(k + 1);
    const auto& box_k = track[k - 1].rect();
    const auto& box_next = track[k].rect();
    if (!box_k || !box_next) throw ValidationError("measure_displacements: invisible frame inside segment", box_k ? k + 1 : k);
    try {
      const PixelRegion r = patch_region(*box_k, static_cast<int>(current.cols()), static_cast<int>(current.rows()));
      const Patch tmpl = current.block(r.y, r.x, r.height, r.width);
      // the template starts at r on frame k; d = 0 is the integer placement
      // nearest to the annotated position on frame k+1, and u is measured from
      // the annotated (possibly fractional) position itself
      const Eigen::Vector2d step = box_next->center() - box_k->center();
      const Eigen::Vector2d rounded = step.array().round();
      const Eigen::Vector2d center(r.x + rounded.x() + r.width / 2.0, r.y + rounded.y() + r.height / 2.0);
      const MatchResult m = zncc_match(tmpl, next, center, radius);
      chain.u(static_cast<Eigen::Index>(i), 0) = m.displacement.dx - (step.x() - rounded.x());
      chain.u(static_cast<Eigen::Index>(i), 1) = m.displacement.dy - (step.y() - rounded.y());
      chain.score[i] = m.score;
      if (std::abs(m.displacement.dx) == radius || std::abs(m.displacement.dy) == radius)
        chain.status[i] = TransitionStatus::Saturated;
    } catch (const DegeneratePatchError&) {
      chain.status[i] = TransitionStatus::Degenerate;
      chain.score[i] = 0.0;
    } catch (const MatchInfeasibleError&) {
      chain.status[i] = TransitionStatus::Infeasible;
      chain.score[i] = 0.0;
    }
    current = std::move(next);
  }
  chain.cumulative = cumulate(chain.u);
  return chain;
}

AxisSeries cumulate(const AxisSeries& u) {
  AxisSeries c(u.rows(), 2);
  Eigen::RowVector2d sum = Eigen::RowVector2d::Zero();
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    sum += u.row(i);
    c.row(i) = sum;
  }
  return c;
}

LineFit detrend(const AxisSeries& cumulative, double first_frame, int min_points) {
  LineFit fit;
  const Eigen::Index n = cumulative.rows();
  fit.residuals = AxisSeries::Zero(n, 2);
  if (n < std::max(min_points, 2)) return fit;
  Eigen::MatrixXd design(n, 2);
  design.col(0) = Eigen::VectorXd::LinSpaced(n, first_frame, first_frame + static_cast<double>(n - 1));
  design.col(1).setOnes();
  const Eigen::Matrix<double, 2, 2> coef = design.colPivHouseholderQr().solve(cumulative);
  fit.slope = coef.row(0).transpose();
  fit.intercept = coef.row(1).transpose();
  fit.residuals = cumulative - design * coef;
  return fit;
}

AnnotationTrack correct_pass(const FrameSource& frames, const AnnotationTrack& track, const CorrectionConfig& config,
                             PassDiagnostics* diagnostics) {
  config.validate();
  if (frames.size() != track.size())
    throw ValidationError("correct_pass: " + std::to_string(frames.size()) + " frames but " +
                          std::to_string(track.size()) + " labels");
  const double width = frames.width(), height = frames.height();
  std::vector<FrameLabel> labels = track.labels();

  for (const auto& [first, last] : visible_segments(track)) {
    DisplacementChain chain;
    if (last - first + 1 >= static_cast<std::size_t>(config.min_segment)) {
      chain = measure_displacements(frames, track, first + 1, last + 1, config.radius);
      chain.trend = detrend(chain.cumulative, static_cast<double>(first + 1), config.min_segment);
      chain.applied = true;
      for (std::size_t i = 0; i < chain.length(); ++i) {
        const BoundingBox& b = *labels[first + i].rect();
        const auto r = chain.trend.residuals.row(static_cast<Eigen::Index>(i));
        // never push a box further outside the image than it already was
        const double lo_x = std::min(0.0, b.x()), hi_x = std::max(width - b.w(), b.x());
        const double lo_y = std::min(0.0, b.y()), hi_y = std::max(height - b.h(), b.y());
        const double x = b.x() + r(0), y = b.y() + r(1);
        const double cx = std::clamp(x, lo_x, hi_x), cy = std::clamp(y, lo_y, hi_y);
        chain.clamped[i] = cx != x || cy != y;
        if (r(0) != 0.0 || r(1) != 0.0) labels[first + i] = FrameLabel::visible(BoundingBox(cx, cy, b.w(), b.h()));
      }
    } else {
      const std::size_t n = last - first + 1;
      chain.t0 = first + 1;
      chain.t1 = last + 1;
      chain.u = AxisSeries::Zero(static_cast<Eigen::Index>(n), 2);
      chain.cumulative = chain.u;
      chain.trend.residuals = chain.u;
      chain.status.assign(n, TransitionStatus::Ok);
      chain.score.assign(n, 1.0);
      chain.clamped.assign(n, false);
    }
    if (diagnostics) diagnostics->chains.push_back(std::move(chain));
  }
  return track.with_labels(std::move(labels));
}

CorrectionResult correct(const FrameSource& frames, const AnnotationTrack& track, const CorrectionConfig& config) {
  config.validate();
  CorrectionResult result{track, {}};
  for (int p = 0; p < config.passes; ++p) {
    PassDiagnostics diag;
    result.track = correct_pass(frames, result.track, config, &diag);
    result.passes.push_back(std::move(diag));
  }
  return result;
}

namespace {

nlohmann::ordered_json series_json(const AxisSeries& s) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < s.rows(); ++i) out.push_back({s(i, 0), s(i, 1)});
  return out;
}

}  // namespace

std::string diagnostics_json(const CorrectionResult& result, const CorrectionConfig& config) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["video_id"] = result.track.video_id();
  doc["config"] = {{"radius", config.radius}, {"passes", config.passes}, {"min_segment", config.min_segment}};
  ordered_json passes = ordered_json::array();
  for (const PassDiagnostics& p : result.passes) {
    ordered_json segments = ordered_json::array();
    for (const DisplacementChain& c : p.chains) {
      ordered_json status = ordered_json::array();
      for (TransitionStatus s : c.status) status.push_back(status_name(s));
      ordered_json seg;
      seg["t0"] = c.t0;
      seg["t1"] = c.t1;
      seg["applied"] = c.applied;
      seg["saturated"] = c.saturated_count();
      seg["u"] = series_json(c.u);
      seg["cumulative"] = series_json(c.cumulative);
      seg["trend"] = {{"slope", {c.trend.slope.x(), c.trend.slope.y()}},
                      {"intercept", {c.trend.intercept.x(), c.trend.intercept.y()}}};
      seg["residuals"] = series_json(c.trend.residuals);
      seg["status"] = std::move(status);
      seg["score"] = c.score;
      seg["clamped"] = c.clamped;
      segments.push_back(std::move(seg));
    }
    passes.push_back({{"segments", std::move(segments)}});
  }
  doc["passes"] = std::move(passes);
  return doc.dump(2) + "\n";
}

}  // namespace annofix
