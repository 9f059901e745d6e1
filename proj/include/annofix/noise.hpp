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

// Seeded injection of annotation errors: additional boxes (random or tracked
// through a block of frames), missing boxes (random or as a contiguous tail of
// each block) and Gaussian center shifts. Every injector returns the corrupted
// labels together with a log that replays onto the clean track exactly.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "annofix/annotation.hpp"
#include "annofix/frames.hpp"

namespace annofix {

struct SizeStats {
  double mean_w = 0.0, sd_w = 0.0;
  double mean_h = 0.0, sd_h = 0.0;
};

struct ImageSize {
  int width = 0;
  int height = 0;
};

// --- error processes -------------------------------------------------------

struct AdditionalRandom {
  double p = 0.0;  // percent of frames
};

struct AdditionalConsistent {
  double p = 0.0;  // percent of each block
  int block = 100;
  int candidates_per_frame = 1;
  bool update_template = true;
  int radius = 20;
};

struct MissingRandom {
  double p = 0.0;  // percent of visible frames
};

struct MissingConsistent {
  double p = 0.0;
  int block = 100;
};

/// sigma in pixels, or as a fraction of each box's width/height when fractional.
struct Shifted {
  double sigma = 0.0;
  bool fractional = false;
};

struct NoiseSpec;

struct Combined {
  std::vector<NoiseSpec> parts;
};

struct NoiseSpec {
  std::variant<AdditionalRandom, AdditionalConsistent, MissingRandom, MissingConsistent, Shifted, Combined> kind;
};

/// Throws std::invalid_argument on out-of-range parameters or an empty Combined.
void validate(const NoiseSpec& spec);

struct NoiseConfig {
  std::uint64_t seed = 0;
  NoiseSpec spec;
  std::optional<ImageSize> image_size;
};

/// {"seed": u64, "specs": [{"kind": "...", ...}, ...], "image_size": [w, h]?}.
/// Several top-level specs form a Combined in list order.
NoiseConfig parse_noise_config(std::string_view bytes);

// --- results ---------------------------------------------------------------

enum class InjectionKind { Added, Removed, Shifted, Skipped };

struct InjectionRecord {
  std::size_t step = 0;  // position within a combined recipe
  std::string source;    // injector name, e.g. "missing_consistent"
  InjectionKind kind = InjectionKind::Skipped;
  std::size_t t = 0;  // 1-based frame
  std::optional<BoundingBox> original;
  std::optional<BoundingBox> injected;
  bool clamped = false;
  std::string note;

  friend bool operator==(const InjectionRecord&, const InjectionRecord&) = default;
};

struct InjectionLog {
  std::string video_id;
  std::uint64_t seed = 0;
  std::vector<InjectionRecord> records;

  friend bool operator==(const InjectionLog&, const InjectionLog&) = default;
};

/// Ground truth after corruption plus any additional (false) boxes per frame.
struct CorruptedTrack {
  AnnotationTrack track;
  std::vector<std::vector<BoundingBox>> extra;

  explicit CorruptedTrack(AnnotationTrack t) : track(std::move(t)), extra(track.size()) {}

  friend bool operator==(const CorruptedTrack&, const CorruptedTrack&) = default;
};

struct InjectionResult {
  CorruptedTrack corrupted;
  InjectionLog log;
};

/// What an injector may consult beyond the labels.
struct InjectionContext {
  const FrameSource* frames = nullptr;
  std::optional<ImageSize> image_size;  // defaults to the frame dimensions
  std::optional<SizeStats> size_stats;  // defaults to the track's own boxes
};

/// Per-axis mean and population standard deviation of visible box sizes.
/// Throws ValidationError without visible boxes.
SizeStats size_stats(std::span<const AnnotationTrack> tracks);

/// floor(p * n / 100 + 0.5).
std::size_t percent_count(double p, std::size_t n);

InjectionResult inject_additional_random(const CorruptedTrack& in, const SizeStats& stats, double p, ImageSize image,
                                         std::uint64_t seed);
InjectionResult inject_additional_consistent(const CorruptedTrack& in, const FrameSource& frames,
                                             const SizeStats& stats, const AdditionalConsistent& spec,
                                             std::uint64_t seed);
InjectionResult inject_missing_consistent(const CorruptedTrack& in, double p, int block = 100);
InjectionResult inject_missing_random(const CorruptedTrack& in, double p, std::uint64_t seed);
InjectionResult inject_shifted(const CorruptedTrack& in, const Shifted& spec, std::optional<ImageSize> image,
                               std::uint64_t seed);

/// Dispatches on the spec; Combined applies its parts in order, part i with
/// derive_seed(seed, i), and concatenates the logs.
InjectionResult inject(const CorruptedTrack& in, const NoiseSpec& spec, const InjectionContext& ctx,
                       std::uint64_t seed);
inline InjectionResult inject(const AnnotationTrack& in, const NoiseSpec& spec, const InjectionContext& ctx,
                              std::uint64_t seed) {
  return inject(CorruptedTrack(in), spec, ctx, seed);
}

/// Re-applies a log to the clean track. Throws ValidationError if a record
/// does not fit the track it is applied to.
CorruptedTrack replay(const AnnotationTrack& clean, const InjectionLog& log);

std::string write_injection_log(const InjectionLog& log);
InjectionLog parse_injection_log(std::string_view bytes);

/// Multi-box training labels, {"video_id": ..., "frames": [[[x,y,w,h], ...], ...]};
/// the (corrupted) ground-truth box comes first on each frame.
std::string write_training_export(const CorruptedTrack& corrupted);

const char* kind_name(InjectionKind kind);

}  // namespace annofix
