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

#include "annofix/noise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "annofix/errors.hpp"
#include "annofix/image.hpp"
#include "annofix/metrics.hpp"
#include "annofix/rng.hpp"

namespace annofix {

using nlohmann::json;

namespace {

constexpr int kMaxAttempts = 100;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_percent(double p, const char* what) {
  if (!(p >= 0.0 && p <= 100.0))
    throw std::invalid_argument(std::string(what) + ": percentage must be in [0, 100]");
}

void check_block(int block) {
  if (block < 1) throw std::invalid_argument("block length must be >= 1");
}

InjectionRecord record(const char* source, InjectionKind kind, std::size_t index) {
  InjectionRecord r;
  r.source = source;
  r.kind = kind;
  r.t = index + 1;
  return r;
}

void set_label(CorruptedTrack& c, std::size_t i, const FrameLabel& label) {
  std::vector<FrameLabel> labels = c.track.labels();
  labels[i] = label;
  c.track = c.track.with_labels(std::move(labels));
}

// Gaussian size, redrawn until it lands in [lo, hi]; clamped if that never happens.
double sample_side(Rng& rng, double mean, double sd, double lo, double hi) {
  for (int i = 0; i < kMaxAttempts; ++i) {
    const double v = mean + sd * rng.normal();
    if (v >= lo && v <= hi) return v;
  }
  return std::clamp(mean, lo, hi);
}

// Random box fully inside the image with zero IoU against `gt`, or nothing.
std::optional<BoundingBox> sample_false_box(Rng& rng, const SizeStats& stats, ImageSize image,
                                            const std::optional<BoundingBox>& gt) {
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const double w = sample_side(rng, stats.mean_w, stats.sd_w, kMinPatchSide, image.width);
    const double h = sample_side(rng, stats.mean_h, stats.sd_h, kMinPatchSide, image.height);
    const double x = rng.uniform(0.0, image.width - w);
    const double y = rng.uniform(0.0, image.height - h);
    const BoundingBox box(x, y, w, h);
    if (!gt || iou(box, *gt) == 0.0) return box;
  }
  return std::nullopt;
}

void check_image(ImageSize image) {
  if (image.width < kMinPatchSide || image.height < kMinPatchSide)
    throw std::invalid_argument("image is smaller than the minimum box size");
}

// Frame range [first, first + count) holding the last round(p% * len) frames of each block.
template <typename Fn>
void for_each_block_tail(std::size_t total, int block, double p, Fn&& fn) {
  for (std::size_t start = 0; start < total; start += static_cast<std::size_t>(block)) {
    const std::size_t len = std::min<std::size_t>(static_cast<std::size_t>(block), total - start);
    const std::size_t tail = percent_count(p, len);
    fn(start, len, tail);
  }
}

}  // namespace

std::size_t percent_count(double p, std::size_t n) {
  return static_cast<std::size_t>(std::floor(p * static_cast<double>(n) / 100.0 + 0.5));
}

const char* kind_name(InjectionKind kind) {
  switch (kind) {
    case InjectionKind::Added:
      return "added";
    case InjectionKind::Removed:
      return "removed";
    case InjectionKind::Shifted:
      return "shifted";
    case InjectionKind::Skipped:
      return "skipped";
  }
  return "?";
}

SizeStats size_stats(std::span<const AnnotationTrack> tracks) {
  std::vector<Eigen::Vector2d> sizes;
  for (const AnnotationTrack& t : tracks)
    for (const FrameLabel& l : t.labels())
      if (l.exist()) sizes.emplace_back(l.rect()->w(), l.rect()->h());
  if (sizes.empty()) throw ValidationError("no visible boxes to take size statistics from");
  const double n = static_cast<double>(sizes.size());
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& s : sizes) mean += s;
  mean /= n;
  Eigen::Vector2d var = Eigen::Vector2d::Zero();
  for (const auto& s : sizes) var += (s - mean).cwiseAbs2();
  var /= n;
  return {mean.x(), std::sqrt(var.x()), mean.y(), std::sqrt(var.y())};
}

void validate(const NoiseSpec& spec) {
  std::visit(overloaded{
                 [](const AdditionalRandom& s) { check_percent(s.p, "additional_random"); },
                 [](const AdditionalConsistent& s) {
                   check_percent(s.p, "additional_consistent");
                   check_block(s.block);
                   if (s.candidates_per_frame < 1) throw std::invalid_argument("candidates_per_frame must be >= 1");
                   if (s.radius < 1) throw std::invalid_argument("tracking radius must be >= 1");
                 },
                 [](const MissingRandom& s) { check_percent(s.p, "missing_random"); },
                 [](const MissingConsistent& s) {
                   check_percent(s.p, "missing_consistent");
                   check_block(s.block);
                 },
                 [](const Shifted& s) {
                   if (!(s.sigma >= 0.0) || !std::isfinite(s.sigma))
                     throw std::invalid_argument("shift sigma must be finite and >= 0");
                 },
                 [](const Combined& s) {
                   if (s.parts.empty()) throw std::invalid_argument("combined spec must not be empty");
                   for (const NoiseSpec& part : s.parts) validate(part);
                 },
             },
             spec.kind);
}

InjectionResult inject_additional_random(const CorruptedTrack& in, const SizeStats& stats, double p, ImageSize image,
                                         std::uint64_t seed) {
  check_percent(p, "additional_random");
  InjectionResult res{in, {in.track.video_id(), seed, {}}};
  const std::size_t k = percent_count(p, in.track.size());
  if (k == 0) return res;
  check_image(image);

  Rng rng(seed);
  for (std::size_t i : rng.sample(in.track.size(), k)) {
    const auto box = sample_false_box(rng, stats, image, in.track[i].rect());
    if (!box) {
      InjectionRecord r = record("additional_random", InjectionKind::Skipped, i);
      r.note = "no zero-overlap position within 100 attempts";
      res.log.records.push_back(std::move(r));
      continue;
    }
    res.corrupted.extra[i].push_back(*box);
    InjectionRecord r = record("additional_random", InjectionKind::Added, i);
    r.injected = box;
    res.log.records.push_back(std::move(r));
  }
  return res;
}

InjectionResult inject_additional_consistent(const CorruptedTrack& in, const FrameSource& frames,
                                             const SizeStats& stats, const AdditionalConsistent& spec,
                                             std::uint64_t seed) {
  validate(NoiseSpec{spec});
  InjectionResult res{in, {in.track.video_id(), seed, {}}};
  if (spec.p == 0.0) return res;
  if (frames.size() < in.track.size())
    throw ValidationError("video '" + in.track.video_id() + "' has " + std::to_string(in.track.size()) +
                          " labels but only " + std::to_string(frames.size()) + " frames");
  const ImageSize image{frames.width(), frames.height()};
  check_image(image);

  Rng rng(seed);
  for_each_block_tail(in.track.size(), spec.block, spec.p, [&](std::size_t start, std::size_t len, std::size_t tail) {
    if (tail == 0) return;
    // candidates come from the leading frames; a block made only of tail falls back to its first frame
    const std::size_t lead = std::max<std::size_t>(len - tail, 1);

    std::optional<BoundingBox> seed_box;
    std::size_t seed_frame = 0;
    double seed_variance = -1.0;
    for (std::size_t i = start; i < start + lead; ++i) {
      const GrayFrame frame = frames.frame(i + 1);
      for (int c = 0; c < spec.candidates_per_frame; ++c) {
        const auto box = sample_false_box(rng, stats, image, in.track[i].rect());
        if (!box) continue;
        const double v = patch_variance(extract_patch(frame, *box));
        if (v > seed_variance) {
          seed_variance = v;
          seed_box = box;
          seed_frame = i;
        }
      }
    }
    if (!seed_box) {
      InjectionRecord r = record("additional_consistent", InjectionKind::Skipped, start);
      r.note = "no candidate box found in block";
      res.log.records.push_back(std::move(r));
      return;
    }

    Patch tmpl = extract_patch(frames.frame(seed_frame + 1), *seed_box);
    BoundingBox current = *seed_box;
    for (std::size_t i = start + len - tail; i < start + len; ++i) {
      const GrayFrame frame = frames.frame(i + 1);
      InjectionRecord r = record("additional_consistent", InjectionKind::Added, i);
      try {
        const MatchResult m = zncc_match(tmpl, frame, current.center(), spec.radius);
        current = current.translated(m.displacement.dx, m.displacement.dy);
        if (spec.update_template) tmpl = extract_patch(frame, current);
      } catch (const MatchInfeasibleError&) {
        r.note = "match infeasible; position held";
      } catch (const DegeneratePatchError&) {
        r.note = "template degenerate; previous template kept";
      }
      r.note += (r.note.empty() ? "" : "; ") + std::string("seed frame ") + std::to_string(seed_frame + 1);
      r.injected = current;
      res.corrupted.extra[i].push_back(current);
      res.log.records.push_back(std::move(r));
    }
  });
  return res;
}

InjectionResult inject_missing_consistent(const CorruptedTrack& in, double p, int block) {
  check_percent(p, "missing_consistent");
  check_block(block);
  InjectionResult res{in, {in.track.video_id(), 0, {}}};
  std::vector<FrameLabel> labels = in.track.labels();
  for_each_block_tail(in.track.size(), block, p, [&](std::size_t start, std::size_t len, std::size_t tail) {
    for (std::size_t i = start + len - tail; i < start + len; ++i) {
      if (!labels[i].exist()) continue;
      InjectionRecord r = record("missing_consistent", InjectionKind::Removed, i);
      r.original = labels[i].rect();
      labels[i] = FrameLabel::invisible();
      res.log.records.push_back(std::move(r));
    }
  });
  res.corrupted.track = in.track.with_labels(std::move(labels));
  return res;
}

InjectionResult inject_missing_random(const CorruptedTrack& in, double p, std::uint64_t seed) {
  check_percent(p, "missing_random");
  InjectionResult res{in, {in.track.video_id(), seed, {}}};
  std::vector<std::size_t> visible;
  for (std::size_t i = 0; i < in.track.size(); ++i)
    if (in.track[i].exist()) visible.push_back(i);
  const std::size_t k = percent_count(p, visible.size());
  if (k == 0) return res;

  Rng rng(seed);
  std::vector<FrameLabel> labels = in.track.labels();
  for (std::size_t j : rng.sample(visible.size(), k)) {
    const std::size_t i = visible[j];
    InjectionRecord r = record("missing_random", InjectionKind::Removed, i);
    r.original = labels[i].rect();
    labels[i] = FrameLabel::invisible();
    res.log.records.push_back(std::move(r));
  }
  res.corrupted.track = in.track.with_labels(std::move(labels));
  return res;
}

InjectionResult inject_shifted(const CorruptedTrack& in, const Shifted& spec, std::optional<ImageSize> image,
                               std::uint64_t seed) {
  validate(NoiseSpec{spec});
  InjectionResult res{in, {in.track.video_id(), seed, {}}};
  Rng rng(seed);
  std::vector<FrameLabel> labels = in.track.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i].exist()) continue;
    const BoundingBox& box = *labels[i].rect();
    const double sx = spec.fractional ? spec.sigma * box.w() : spec.sigma;
    const double sy = spec.fractional ? spec.sigma * box.h() : spec.sigma;
    const double ex = sx * rng.normal();
    const double ey = sy * rng.normal();
    if (ex == 0.0 && ey == 0.0) continue;

    double x = box.x() + ex, y = box.y() + ey;
    bool clamped = false;
    if (image) {
      // keep at least half of the width and half of the height inside the image
      const double cx = std::clamp(x, -box.w() / 2.0, image->width - box.w() / 2.0);
      const double cy = std::clamp(y, -box.h() / 2.0, image->height - box.h() / 2.0);
      clamped = cx != x || cy != y;
      x = cx;
      y = cy;
    }
    const BoundingBox moved(x, y, box.w(), box.h());
    InjectionRecord r = record("shifted", InjectionKind::Shifted, i);
    r.original = box;
    r.injected = moved;
    r.clamped = clamped;
    labels[i] = FrameLabel::visible(moved);
    res.log.records.push_back(std::move(r));
  }
  res.corrupted.track = in.track.with_labels(std::move(labels));
  return res;
}

InjectionResult inject(const CorruptedTrack& in, const NoiseSpec& spec, const InjectionContext& ctx,
                       std::uint64_t seed) {
  validate(spec);
  auto image = [&]() -> std::optional<ImageSize> {
    if (ctx.image_size) return ctx.image_size;
    if (ctx.frames) return ImageSize{ctx.frames->width(), ctx.frames->height()};
    return std::nullopt;
  };
  auto stats = [&]() {
    if (ctx.size_stats) return *ctx.size_stats;
    return size_stats(std::span<const AnnotationTrack>(&in.track, 1));
  };

  return std::visit(
      overloaded{
          [&](const AdditionalRandom& s) {
            if (percent_count(s.p, in.track.size()) == 0) return InjectionResult{in, {in.track.video_id(), seed, {}}};
            const auto img = image();
            if (!img) throw ValidationError("additional_random needs frames or an image size");
            return inject_additional_random(in, stats(), s.p, *img, seed);
          },
          [&](const AdditionalConsistent& s) {
            if (s.p == 0.0) return InjectionResult{in, {in.track.video_id(), seed, {}}};
            if (!ctx.frames) throw ValidationError("additional_consistent needs the video frames");
            return inject_additional_consistent(in, *ctx.frames, stats(), s, seed);
          },
          [&](const MissingRandom& s) { return inject_missing_random(in, s.p, seed); },
          [&](const MissingConsistent& s) {
            InjectionResult r = inject_missing_consistent(in, s.p, s.block);
            r.log.seed = seed;
            return r;
          },
          [&](const Shifted& s) { return inject_shifted(in, s, image(), seed); },
          [&](const Combined& s) {
            InjectionResult acc{in, {in.track.video_id(), seed, {}}};
            for (std::size_t k = 0; k < s.parts.size(); ++k) {
              InjectionResult part = inject(acc.corrupted, s.parts[k], ctx, derive_seed(seed, k));
              for (InjectionRecord& r : part.log.records) {
                r.step = k;
                acc.log.records.push_back(std::move(r));
              }
              acc.corrupted = std::move(part.corrupted);
            }
            return acc;
          },
      },
      spec.kind);
}

CorruptedTrack replay(const AnnotationTrack& clean, const InjectionLog& log) {
  CorruptedTrack out(clean);
  for (const InjectionRecord& r : log.records) {
    if (r.t < 1 || r.t > clean.size())
      throw ValidationError("log record refers to frame " + std::to_string(r.t) + " outside the track", r.t);
    const std::size_t i = r.t - 1;
    const FrameLabel& current = out.track[i];
    switch (r.kind) {
      case InjectionKind::Added:
        if (!r.injected) throw ValidationError("added record without box", r.t);
        out.extra[i].push_back(*r.injected);
        break;
      case InjectionKind::Removed:
        if (!current.exist() || current.rect() != r.original)
          throw ValidationError("removed record does not match frame " + std::to_string(r.t), r.t);
        set_label(out, i, FrameLabel::invisible());
        break;
      case InjectionKind::Shifted:
        if (!current.exist() || current.rect() != r.original || !r.injected)
          throw ValidationError("shifted record does not match frame " + std::to_string(r.t), r.t);
        set_label(out, i, FrameLabel::visible(*r.injected));
        break;
      case InjectionKind::Skipped:
        break;
    }
  }
  return out;
}

namespace {

json box_json(const std::optional<BoundingBox>& b) {
  if (!b) return nullptr;
  return json::array({b->x(), b->y(), b->w(), b->h()});
}

std::optional<BoundingBox> box_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_array() || j.size() != 4) throw ValidationError("log box must be [x, y, w, h] or null");
  return BoundingBox(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

InjectionKind kind_from_name(const std::string& s) {
  for (InjectionKind k : {InjectionKind::Added, InjectionKind::Removed, InjectionKind::Shifted, InjectionKind::Skipped})
    if (s == kind_name(k)) return k;
  throw ValidationError("unknown log record kind '" + s + "'");
}

double number_field(const json& j, const char* key, double fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw std::invalid_argument(std::string("'") + key + "' must be a number");
  return it->get<double>();
}

NoiseSpec spec_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw std::invalid_argument("each noise spec needs a string 'kind'");
  const std::string kind = j["kind"].get<std::string>();
  NoiseSpec spec;
  if (kind == "additional_random") {
    spec.kind = AdditionalRandom{number_field(j, "p", 0.0)};
  } else if (kind == "additional_consistent") {
    AdditionalConsistent s;
    s.p = number_field(j, "p", 0.0);
    s.block = static_cast<int>(number_field(j, "block", 100));
    s.candidates_per_frame = static_cast<int>(number_field(j, "candidates_per_frame", 1));
    s.radius = static_cast<int>(number_field(j, "radius", 20));
    if (auto it = j.find("update_template"); it != j.end()) s.update_template = it->get<bool>();
    spec.kind = s;
  } else if (kind == "missing_random") {
    spec.kind = MissingRandom{number_field(j, "p", 0.0)};
  } else if (kind == "missing_consistent") {
    spec.kind = MissingConsistent{number_field(j, "p", 0.0), static_cast<int>(number_field(j, "block", 100))};
  } else if (kind == "shifted") {
    const bool px = j.contains("sigma_px"), frac = j.contains("sigma_frac");
    if (px == frac) throw std::invalid_argument("shifted spec needs exactly one of 'sigma_px' or 'sigma_frac'");
    spec.kind = px ? Shifted{number_field(j, "sigma_px", 0.0), false} : Shifted{number_field(j, "sigma_frac", 0.0), true};
  } else if (kind == "combined") {
    Combined c;
    if (!j.contains("specs") || !j["specs"].is_array()) throw std::invalid_argument("combined spec needs 'specs'");
    for (const json& part : j["specs"]) c.parts.push_back(spec_from_json(part));
    spec.kind = std::move(c);
  } else {
    throw std::invalid_argument("unknown noise kind '" + kind + "'");
  }
  return spec;
}

}  // namespace

NoiseConfig parse_noise_config(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("noise config: ") + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("noise config must be a JSON object");
  NoiseConfig cfg;
  if (auto it = doc.find("seed"); it != doc.end()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0))
      throw std::invalid_argument("'seed' must be a non-negative integer");
    cfg.seed = it->get<std::uint64_t>();
  }
  if (!doc.contains("specs") || !doc["specs"].is_array() || doc["specs"].empty())
    throw std::invalid_argument("noise config needs a non-empty 'specs' array");
  Combined all;
  for (const json& s : doc["specs"]) all.parts.push_back(spec_from_json(s));
  if (all.parts.size() == 1) {
    cfg.spec = std::move(all.parts.front());
  } else {
    cfg.spec.kind = std::move(all);
  }
  if (auto it = doc.find("image_size"); it != doc.end()) {
    if (!it->is_array() || it->size() != 2) throw std::invalid_argument("'image_size' must be [width, height]");
    cfg.image_size = ImageSize{(*it)[0].get<int>(), (*it)[1].get<int>()};
  }
  validate(cfg.spec);
  return cfg;
}

std::string write_injection_log(const InjectionLog& log) {
  nlohmann::ordered_json doc;
  doc["video_id"] = log.video_id;
  doc["seed"] = log.seed;
  auto records = nlohmann::ordered_json::array();
  for (const InjectionRecord& r : log.records) {
    nlohmann::ordered_json jr;
    jr["step"] = r.step;
    jr["source"] = r.source;
    jr["kind"] = kind_name(r.kind);
    jr["t"] = r.t;
    jr["original"] = box_json(r.original);
    jr["injected"] = box_json(r.injected);
    jr["clamped"] = r.clamped;
    if (!r.note.empty()) jr["note"] = r.note;
    records.push_back(std::move(jr));
  }
  doc["records"] = std::move(records);
  return doc.dump(1) + "\n";
}

InjectionLog parse_injection_log(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("injection log: ") + e.what(), 0, 0, e.byte);
  }
  InjectionLog log;
  log.video_id = doc.value("video_id", "");
  log.seed = doc.value("seed", std::uint64_t{0});
  for (const json& jr : doc.at("records")) {
    InjectionRecord r;
    r.step = jr.value("step", std::size_t{0});
    r.source = jr.value("source", "");
    r.kind = kind_from_name(jr.at("kind").get<std::string>());
    r.t = jr.at("t").get<std::size_t>();
    r.original = box_from_json(jr.value("original", json(nullptr)));
    r.injected = box_from_json(jr.value("injected", json(nullptr)));
    r.clamped = jr.value("clamped", false);
    r.note = jr.value("note", "");
    log.records.push_back(std::move(r));
  }
  return log;
}

std::string write_training_export(const CorruptedTrack& c) {
  std::string out = "{\"video_id\":" + json(c.track.video_id()).dump() + ",\"frames\":[";
  auto rect = [](const BoundingBox& b) {
    return "[" + format_number(b.x()) + "," + format_number(b.y()) + "," + format_number(b.w()) + "," +
           format_number(b.h()) + "]";
  };
  for (std::size_t i = 0; i < c.track.size(); ++i) {
    if (i) out += ',';
    out += '[';
    bool first = true;
    if (c.track[i].exist()) {
      out += rect(*c.track[i].rect());
      first = false;
    }
    for (const BoundingBox& b : c.extra[i]) {
      if (!first) out += ',';
      out += rect(b);
      first = false;
    }
    out += ']';
  }
  out += "]}\n";
  return out;
}

}  // namespace annofix
