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

#include "annofix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "annofix/errors.hpp"

namespace annofix {

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::min(a.x() + a.w(), b.x() + b.w()) - std::max(a.x(), b.x());
  const double iy = std::min(a.y() + a.h(), b.y() + b.h()) - std::max(a.y(), b.y());
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  return std::clamp(inter / (a.area() + b.area() - inter), 0.0, 1.0);
}

std::vector<Detection> surviving(std::span<const Detection> dets, const Threshold& threshold) {
  std::vector<Detection> out;
  for (const Detection& d : dets)
    if (threshold.admits(d.score())) out.push_back(d);
  return out;
}

FrameOutcome classify_frame(const FrameLabel& label, std::span<const Detection> dets, std::size_t t) {
  FrameOutcome o;
  o.t = t;
  o.visible = label.exist();
  o.n = dets.size();
  if (!o.visible) {
    o.false_alarms = dets.size();
    return o;
  }
  const BoundingBox& gt = *label.rect();
  double top_score = -1.0;
  for (const Detection& d : dets) {
    const double v = iou(d.rect(), gt);
    o.best_iou = std::max(o.best_iou, v);
    if (v == 0.0) ++o.false_alarms;
    if (d.score() > top_score) {  // first of equal scores wins
      top_score = d.score();
      o.top_iou = v;
    }
  }
  o.hits = o.best_iou >= kHitIou ? 1 : 0;
  return o;
}

std::vector<FrameOutcome> classify_track(const AnnotationTrack& track, const DetectionSet& dets,
                                         const Threshold& threshold) {
  if (dets.frames.size() != track.size())
    throw ValidationError("video '" + track.video_id() + "': " + std::to_string(track.size()) +
                          " annotated frames but " + std::to_string(dets.frames.size()) + " detection frames");
  std::vector<FrameOutcome> out;
  out.reserve(track.size());
  for (std::size_t i = 0; i < track.size(); ++i)
    out.push_back(classify_frame(track[i], surviving(dets.frames[i], threshold), i + 1));
  return out;
}

double hit_rate(std::span<const FrameOutcome> outcomes) {
  std::size_t visible = 0, hits = 0;
  for (const FrameOutcome& o : outcomes) {
    if (!o.visible) continue;
    ++visible;
    hits += static_cast<std::size_t>(o.hits);
  }
  if (visible == 0) throw MetricError("hit rate is undefined without visible frames");
  return 100.0 * static_cast<double>(hits) / static_cast<double>(visible);
}

double fa_per_min(std::span<const FrameOutcome> outcomes, double fps) {
  if (outcomes.empty()) throw MetricError("false-alarm rate is undefined for an empty track");
  if (!(fps > 0.0)) throw MetricError("fps must be positive");
  std::size_t fa = 0;
  for (const FrameOutcome& o : outcomes) fa += o.false_alarms;
  return static_cast<double>(fa) * 60.0 * fps / static_cast<double>(outcomes.size());
}

namespace {

struct AccuracyTerms {
  double numerator = 0.0;
  double ta_denominator = 0.0;
  double mta_denominator = 0.0;
};

void accumulate(AccuracyTerms& acc, const FrameOutcome& o) {
  const double v = o.visible ? 1.0 : 0.0;
  const double p = o.n > 0 ? 1.0 : 0.0;
  const double rejection = (1.0 - p) * (1.0 - v);
  acc.numerator += o.top_iou * v * p + rejection;
  acc.ta_denominator += 1.0;
  acc.mta_denominator += std::max(v, static_cast<double>(o.n)) + rejection;
}

AccuracyTerms accuracy_terms(std::span<const FrameOutcome> outcomes) {
  AccuracyTerms acc;
  for (const FrameOutcome& o : outcomes) accumulate(acc, o);
  return acc;
}

std::size_t total_false_alarms(std::span<const FrameOutcome> outcomes) {
  std::size_t fa = 0;
  for (const FrameOutcome& o : outcomes) fa += o.false_alarms;
  return fa;
}

void require_pair(const EvalPair& p) {
  if (p.track == nullptr || p.detections == nullptr) throw std::invalid_argument("EvalPair with null member");
}

void check_lengths(const AnnotationTrack& a, const AnnotationTrack& b) {
  if (a.size() != b.size())
    throw ValidationError("tracks differ in length (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                          ")");
}

}  // namespace

double tracking_accuracy(std::span<const FrameOutcome> outcomes) {
  if (outcomes.empty()) throw MetricError("tracking accuracy is undefined for an empty track");
  const AccuracyTerms acc = accuracy_terms(outcomes);
  return 100.0 * acc.numerator / acc.ta_denominator;
}

double modified_tracking_accuracy(std::span<const FrameOutcome> outcomes) {
  if (outcomes.empty()) throw MetricError("tracking accuracy is undefined for an empty track");
  const AccuracyTerms acc = accuracy_terms(outcomes);
  return 100.0 * acc.numerator / acc.mta_denominator;
}

double tracking_accuracy(const AnnotationTrack& track, const DetectionSet& dets, const Threshold& threshold) {
  return tracking_accuracy(classify_track(track, dets, threshold));
}

double modified_tracking_accuracy(const AnnotationTrack& track, const DetectionSet& dets, const Threshold& threshold) {
  return modified_tracking_accuracy(classify_track(track, dets, threshold));
}

double pooled_fa_per_min(std::span<const EvalPair> videos, const Threshold& threshold) {
  std::size_t fa = 0;
  double minutes = 0.0;
  for (const EvalPair& p : videos) {
    require_pair(p);
    fa += total_false_alarms(classify_track(*p.track, *p.detections, threshold));
    minutes += static_cast<double>(p.track->size()) / p.track->fps() / 60.0;
  }
  if (minutes <= 0.0) throw MetricError("false-alarm rate is undefined without frames");
  return static_cast<double>(fa) / minutes;
}

Calibration calibrate_threshold(std::span<const EvalPair> videos, double target) {
  if (!(target >= 0.0)) throw std::invalid_argument("target false-alarm rate must be >= 0");
  std::vector<double> scores;
  for (const EvalPair& p : videos) {
    require_pair(p);
    for (const auto& frame : p.detections->frames)
      for (const Detection& d : frame) scores.push_back(d.score());
  }
  if (scores.empty()) return {Threshold{0.0, false}, 0.0, true};

  const double keep_all = pooled_fa_per_min(videos, Threshold{0.0, false});
  if (keep_all <= target) return {Threshold{0.0, false}, keep_all, false};

  std::sort(scores.begin(), scores.end());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());

  // fa(scores[lo]) > target; find the first index whose rate fits, or scores.size()
  std::size_t lo = 0, hi = scores.size();
  double fa_at_hi = 0.0;
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const double fa = pooled_fa_per_min(videos, Threshold{scores[mid], false});
    if (fa <= target) {
      hi = mid;
      fa_at_hi = fa;
    } else {
      lo = mid;
    }
  }
  if (hi == scores.size()) return {Threshold{scores.back(), true}, 0.0, false};
  return {Threshold{scores[hi], false}, fa_at_hi, false};
}

Calibration calibrate_threshold(const AnnotationTrack& track, const DetectionSet& dets, double target) {
  const EvalPair pair{&track, &dets};
  return calibrate_threshold(std::span<const EvalPair>(&pair, 1), target);
}

DiffStats diff_stats(std::span<const std::pair<const AnnotationTrack*, const AnnotationTrack*>> pairs) {
  std::vector<Eigen::Vector4d> diffs;  // dx, dy, dx/w, dy/h
  for (const auto& [a, b] : pairs) {
    check_lengths(*a, *b);
    for (std::size_t i = 0; i < a->size(); ++i) {
      if (!(*a)[i].exist() || !(*b)[i].exist()) continue;
      const BoundingBox& ra = *(*a)[i].rect();
      const Eigen::Vector2d d = (*b)[i].rect()->center() - ra.center();
      diffs.emplace_back(d.x(), d.y(), d.x() / ra.w(), d.y() / ra.h());
    }
  }
  if (diffs.empty()) throw MetricError("no frame is visible in both annotation sets");

  const double n = static_cast<double>(diffs.size());
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  for (const auto& d : diffs) mean += d;
  mean /= n;
  Eigen::Vector4d var = Eigen::Vector4d::Zero();
  for (const auto& d : diffs) var += (d - mean).cwiseAbs2();
  const Eigen::Vector4d sd = (var / n).cwiseSqrt();

  DiffStats s;
  s.mu_x = mean[0];
  s.mu_y = mean[1];
  s.mu_nx = mean[2];
  s.mu_ny = mean[3];
  s.sigma_x = sd[0];
  s.sigma_y = sd[1];
  s.sigma_nx = sd[2];
  s.sigma_ny = sd[3];
  s.count = diffs.size();
  return s;
}

DiffStats diff_stats(const AnnotationTrack& a, const AnnotationTrack& b) {
  const std::pair<const AnnotationTrack*, const AnnotationTrack*> p{&a, &b};
  return diff_stats(std::span(&p, 1));
}

double compare_tracks(std::span<const std::pair<const AnnotationTrack*, const AnnotationTrack*>> pairs) {
  double sum = 0.0;
  std::size_t frames = 0;
  for (const auto& [a, b] : pairs) {
    check_lengths(*a, *b);
    for (std::size_t i = 0; i < a->size(); ++i) {
      const bool v = (*a)[i].exist(), p = (*b)[i].exist();
      if (v && p) sum += iou(*(*a)[i].rect(), *(*b)[i].rect());
      else if (!v && !p) sum += 1.0;
    }
    frames += a->size();
  }
  if (frames == 0) throw MetricError("no frames to compare");
  return 100.0 * sum / static_cast<double>(frames);
}

double compare_tracks(const AnnotationTrack& a, const AnnotationTrack& b) {
  const std::pair<const AnnotationTrack*, const AnnotationTrack*> p{&a, &b};
  return compare_tracks(std::span(&p, 1));
}

EvalReport evaluate(std::span<const EvalPair> videos, const Threshold& threshold) {
  EvalReport report;
  report.threshold = threshold;
  AccuracyTerms total;
  std::size_t visible = 0, hits = 0, fa = 0;
  double minutes = 0.0;
  for (const EvalPair& p : videos) {
    require_pair(p);
    VideoReport vr;
    vr.video_id = p.track->video_id();
    vr.outcomes = classify_track(*p.track, *p.detections, threshold);
    try {
      vr.hit_rate = hit_rate(vr.outcomes);
    } catch (const MetricError&) {
    }
    vr.fa_per_min = fa_per_min(vr.outcomes, p.track->fps());
    vr.ta = tracking_accuracy(vr.outcomes);
    vr.mta = modified_tracking_accuracy(vr.outcomes);
    for (const FrameOutcome& o : vr.outcomes) {
      accumulate(total, o);
      visible += o.visible ? 1 : 0;
      hits += static_cast<std::size_t>(o.hits);
      fa += o.false_alarms;
    }
    minutes += static_cast<double>(p.track->size()) / p.track->fps() / 60.0;
    report.frames += p.track->size();
    report.videos.push_back(std::move(vr));
  }
  if (report.frames == 0) throw MetricError("nothing to evaluate");
  if (visible > 0) report.hit_rate = 100.0 * static_cast<double>(hits) / static_cast<double>(visible);
  report.fa_per_min = static_cast<double>(fa) / minutes;
  report.ta = 100.0 * total.numerator / total.ta_denominator;
  report.mta = 100.0 * total.numerator / total.mta_denominator;
  return report;
}

EvalReport evaluate_at_fa(std::span<const EvalPair> videos, double target_fa_per_min) {
  const Calibration cal = calibrate_threshold(videos, target_fa_per_min);
  EvalReport report = evaluate(videos, cal.threshold);
  report.calibrated = true;
  report.target_fa_per_min = target_fa_per_min;
  return report;
}

namespace {

nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::string fixed(const std::optional<double>& v, int precision) {
  if (!v) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, *v);
  return buf;
}

}  // namespace

std::string report_json(const EvalReport& report, bool include_frames) {
  using oj = nlohmann::ordered_json;
  oj doc;
  doc["threshold"] = report.threshold.value;
  doc["threshold_exclusive"] = report.threshold.exclusive;
  doc["calibrated"] = report.calibrated;
  doc["target_fa_per_min"] = optional_number(report.target_fa_per_min);
  doc["frames"] = report.frames;
  doc["fa_per_min"] = report.fa_per_min;
  doc["hit_rate"] = optional_number(report.hit_rate);
  doc["ta"] = report.ta;
  doc["mta"] = report.mta;
  oj videos = oj::array();
  for (const VideoReport& v : report.videos) {
    oj jv;
    jv["video_id"] = v.video_id;
    jv["fa_per_min"] = v.fa_per_min;
    jv["hit_rate"] = optional_number(v.hit_rate);
    jv["ta"] = v.ta;
    jv["mta"] = v.mta;
    if (include_frames) {
      oj frames = oj::array();
      for (const FrameOutcome& o : v.outcomes)
        frames.push_back({{"t", o.t},
                          {"v", o.visible ? 1 : 0},
                          {"n", o.n},
                          {"best_iou", o.best_iou},
                          {"top_iou", o.top_iou},
                          {"hits", o.hits},
                          {"false_alarms", o.false_alarms}});
      jv["outcomes"] = std::move(frames);
    }
    videos.push_back(std::move(jv));
  }
  doc["videos"] = std::move(videos);
  return doc.dump(2) + "\n";
}

std::string report_table(const EvalReport& report) {
  std::vector<std::vector<std::string>> rows;
  const std::string first = report.calibrated ? "Th" : "FA/min";
  rows.push_back({"Video", first, "HR(%)", "TA(%)", "MTA(%)"});
  auto lead = [&](double fa) {
    return report.calibrated ? fixed(report.threshold.value, 3) + (report.threshold.exclusive ? "+" : "")
                             : fixed(fa, 2);
  };
  for (const VideoReport& v : report.videos)
    rows.push_back({v.video_id, lead(v.fa_per_min), fixed(v.hit_rate, 1), fixed(v.ta, 1), fixed(v.mta, 1)});
  rows.push_back({"ALL", lead(report.fa_per_min), fixed(report.hit_rate, 1), fixed(report.ta, 1), fixed(report.mta, 1)});

  std::vector<std::size_t> widths(rows.front().size(), 0);
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) widths[c] = std::max(widths[c], r[c].size());

  std::string out;
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c == 0) {
        out += r[c] + std::string(widths[c] - r[c].size(), ' ');
      } else {
        out += "  " + std::string(widths[c] - r[c].size(), ' ') + r[c];
      }
    }
    out += '\n';
  }
  if (report.calibrated && report.target_fa_per_min)
    out += "threshold calibrated to " + fixed(report.target_fa_per_min, 2) + " FA/min (achieved " +
           fixed(report.fa_per_min, 2) + ")\n";
  return out;
}

}  // namespace annofix
