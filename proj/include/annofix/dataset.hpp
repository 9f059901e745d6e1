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

// On-disk dataset layout: <root>/<video_id>/frames/*.pgm|*.png and
// <root>/<video_id>/label.json. Derived annotation sets mirror the tree.

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "annofix/annotation.hpp"

namespace annofix {

struct VideoPaths {
  std::string id;
  std::filesystem::path dir;
  std::filesystem::path frames;
  std::filesystem::path label;
};

inline constexpr const char* kLabelFile = "label.json";

VideoPaths video_paths(const std::filesystem::path& root, const std::string& id);

/// Sorted ids of the subdirectories holding a label file or a frames directory.
/// Throws std::runtime_error when `root` is not a directory.
std::vector<std::string> list_videos(const std::filesystem::path& root);

AnnotationTrack load_track(const std::filesystem::path& label_file);

/// Runs fn(0..n-1) on up to `threads` workers (0: hardware concurrency).
/// fn must not throw.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads = 0);

}  // namespace annofix
