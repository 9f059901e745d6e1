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

#include "annofix/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <thread>

#include "annofix/fileio.hpp"

namespace annofix {

namespace fs = std::filesystem;

VideoPaths video_paths(const fs::path& root, const std::string& id) {
  const fs::path dir = root / id;
  return {id, dir, dir / "frames", dir / kLabelFile};
}

std::vector<std::string> list_videos(const fs::path& root) {
  if (!fs::is_directory(root)) throw std::runtime_error("not a directory: " + root.string());
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    if (fs::exists(entry.path() / kLabelFile) || fs::is_directory(entry.path() / "frames"))
      ids.push_back(entry.path().filename().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

AnnotationTrack load_track(const fs::path& label_file) { return parse_annotations(read_file(label_file)); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace annofix
