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

#include "annofix/annotation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <json.hpp>

#include "annofix/errors.hpp"

namespace annofix {

using nlohmann::json;

BoundingBox::BoundingBox(double x, double y, double w, double h) : x_(x), y_(y), w_(w), h_(h) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) || !std::isfinite(h))
    throw ValidationError("bounding box has non-finite coordinates");
  if (!(w > 0.0) || !(h > 0.0))
    throw ValidationError("bounding box width and height must be positive (got w=" + format_number(w) +
                          ", h=" + format_number(h) + ")");
}

AnnotationTrack::AnnotationTrack(std::string video_id, std::vector<FrameLabel> labels, double fps)
    : video_id_(std::move(video_id)), labels_(std::move(labels)), fps_(fps) {
  if (labels_.empty()) throw ValidationError("annotation track '" + video_id_ + "' has no frames");
  if (!std::isfinite(fps_) || !(fps_ > 0.0))
    throw ValidationError("annotation track '" + video_id_ + "' has non-positive fps");
}

std::size_t AnnotationTrack::visible_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(labels_.begin(), labels_.end(), [](const FrameLabel& l) { return l.exist(); }));
}

Detection::Detection(const BoundingBox& rect, double score) : rect_(rect), score_(score) {
  if (!(score >= 0.0 && score <= 1.0))
    throw ValidationError("detection score " + format_number(score) + " outside [0, 1]");
}

std::string format_number(double value) {
  if (value == 0.0) return "0";  // folds -0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::vector<std::pair<std::size_t, std::size_t>> visible_segments(const AnnotationTrack& track) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t i = 0;
  while (i < track.size()) {
    if (!track[i].exist()) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < track.size() && track[j + 1].exist()) ++j;
    out.emplace_back(i, j);
    i = j + 1;
  }
  return out;
}

namespace {

json parse_json(std::string_view bytes) {
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    // e.byte is 1-based and points one past the offending character
    std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    offset = std::min(offset, bytes.size());
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < offset; ++i) {
      if (bytes[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError("JSON syntax error at line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": " + e.what(),
                     line, column, offset);
  }
}

const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(std::string("missing required field '") + key + "'");
  return *it;
}

double as_number(const json& v, const std::string& where, std::size_t frame) {
  if (!v.is_number()) throw ValidationError(where + " must be a number", frame);
  return v.get<double>();
}

BoundingBox as_rect(const json& v, const std::string& where, std::size_t frame) {
  if (!v.is_array() || v.size() != 4) throw ValidationError(where + " must be [x, y, w, h]", frame);
  double c[4];
  for (std::size_t i = 0; i < 4; ++i) c[i] = as_number(v[i], where, frame);
  try {
    return BoundingBox(c[0], c[1], c[2], c[3]);
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what(), frame);
  }
}

std::string rect_text(const BoundingBox& b) {
  return "[" + format_number(b.x()) + "," + format_number(b.y()) + "," + format_number(b.w()) + "," +
         format_number(b.h()) + "]";
}

}  // namespace

AnnotationTrack parse_annotations(std::string_view bytes) {
  const json doc = parse_json(bytes);
  if (!doc.is_object()) throw ValidationError("annotation file must be a JSON object");

  std::string video_id;
  if (auto it = doc.find("video_id"); it != doc.end()) {
    if (!it->is_string()) throw ValidationError("'video_id' must be a string");
    video_id = it->get<std::string>();
  }
  double fps = kDefaultFps;
  if (auto it = doc.find("fps"); it != doc.end()) fps = as_number(*it, "'fps'", 0);

  const json& exist = require(doc, "exist");
  const json& rects = require(doc, "gt_rect");
  if (!exist.is_array() || !rects.is_array()) throw ValidationError("'exist' and 'gt_rect' must be arrays");
  if (exist.size() != rects.size())
    throw ValidationError("'exist' has " + std::to_string(exist.size()) + " entries but 'gt_rect' has " +
                          std::to_string(rects.size()));

  std::vector<FrameLabel> labels;
  labels.reserve(exist.size());
  for (std::size_t i = 0; i < exist.size(); ++i) {
    const std::size_t frame = i + 1;
    const json& e = exist[i];
    bool visible;
    if (e.is_boolean()) {
      visible = e.get<bool>();
    } else if (e.is_number_integer() || e.is_number_unsigned()) {
      const auto v = e.get<long long>();
      if (v != 0 && v != 1) throw ValidationError("exist flag must be 0 or 1 at frame " + std::to_string(frame), frame);
      visible = v == 1;
    } else {
      throw ValidationError("exist flag must be 0 or 1 at frame " + std::to_string(frame), frame);
    }

    if (!visible) {
      labels.push_back(FrameLabel::invisible());
      continue;
    }
    if (rects[i].is_null() || (rects[i].is_array() && rects[i].empty()))
      throw ValidationError("frame " + std::to_string(frame) + " is visible but has no rect", frame);
    labels.push_back(FrameLabel::visible(as_rect(rects[i], "gt_rect at frame " + std::to_string(frame), frame)));
  }
  return AnnotationTrack(std::move(video_id), std::move(labels), fps);
}

std::string write_annotations(const AnnotationTrack& track) {
  std::string out;
  out.reserve(32 + track.size() * 28);
  out += "{\"video_id\":";
  out += json(track.video_id()).dump();
  out += ",\"fps\":";
  out += format_number(track.fps());
  out += ",\"exist\":[";
  for (std::size_t i = 0; i < track.size(); ++i) {
    if (i) out += ',';
    out += track[i].exist() ? '1' : '0';
  }
  out += "],\"gt_rect\":[";
  for (std::size_t i = 0; i < track.size(); ++i) {
    if (i) out += ',';
    out += track[i].exist() ? rect_text(*track[i].rect()) : "null";
  }
  out += "]}\n";
  return out;
}

DetectionSet parse_detections(std::string_view bytes) {
  const json doc = parse_json(bytes);
  if (!doc.is_object()) throw ValidationError("detection file must be a JSON object");

  DetectionSet out;
  if (auto it = doc.find("video_id"); it != doc.end()) {
    if (!it->is_string()) throw ValidationError("'video_id' must be a string");
    out.video_id = it->get<std::string>();
  }
  const json& frames = require(doc, "frames");
  if (!frames.is_array()) throw ValidationError("'frames' must be an array");
  out.frames.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::size_t frame = i + 1;
    const json& f = frames[i];
    if (!f.is_array()) throw ValidationError("frame " + std::to_string(frame) + " must be an array", frame);
    std::vector<Detection> dets;
    dets.reserve(f.size());
    for (const json& d : f) {
      if (!d.is_object()) throw ValidationError("detection at frame " + std::to_string(frame) + " must be an object", frame);
      const std::string where = "detection at frame " + std::to_string(frame);
      BoundingBox rect = as_rect(require(d, "rect"), where, frame);
      const double score = as_number(require(d, "score"), where + " score", frame);
      try {
        dets.emplace_back(rect, score);
      } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what(), frame);
      }
    }
    out.frames.push_back(std::move(dets));
  }
  return out;
}

std::string write_detections(const DetectionSet& dets) {
  std::string out = "{\"video_id\":" + json(dets.video_id).dump() + ",\"frames\":[";
  for (std::size_t i = 0; i < dets.frames.size(); ++i) {
    if (i) out += ',';
    out += '[';
    for (std::size_t j = 0; j < dets.frames[i].size(); ++j) {
      if (j) out += ',';
      const Detection& d = dets.frames[i][j];
      out += "{\"rect\":" + rect_text(d.rect()) + ",\"score\":" + format_number(d.score()) + "}";
    }
    out += ']';
  }
  out += "]}\n";
  return out;
}

}  // namespace annofix
