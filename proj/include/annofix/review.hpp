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

// Human review of corrected annotations: a persistent per-video decision
// store, an HTTP service for the review UI, and export of the chosen sets.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace annofix {

enum class Choice { Original, Corrected };

const char* choice_name(Choice c);
/// "original" or "corrected"; anything else throws std::invalid_argument.
Choice parse_choice(std::string_view text);

struct DecisionRecord {
  std::string video_id;
  Choice choice = Choice::Original;
  std::string operator_name;
  std::int64_t timestamp = 0;  // UTC seconds

  friend bool operator==(const DecisionRecord&, const DecisionRecord&) = default;
};

/// {"decisions": [...]} file, rewritten atomically after every change.
class DecisionStore {
 public:
  /// Loads `path` if it exists. A file that does not parse, or holds an
  /// invalid record, throws (ParseError / ValidationError) instead of being
  /// silently replaced.
  explicit DecisionStore(std::filesystem::path path);

  /// Inserts or overwrites the record for its video and persists the file.
  DecisionRecord record(DecisionRecord rec);
  std::optional<DecisionRecord> get(const std::string& video_id) const;
  std::vector<DecisionRecord> all() const;
  std::string to_json() const;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::string to_json_locked() const;

  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::map<std::string, DecisionRecord> records_;
};

std::string decisions_json(const std::vector<DecisionRecord>& records);
std::vector<DecisionRecord> parse_decisions(std::string_view bytes);

struct ReviewOptions {
  std::filesystem::path dataset;
  std::filesystem::path corrected;
  std::filesystem::path decisions;
  std::filesystem::path ui_dir;  // optional static bundle served at /
};

/// HTTP API:
///   GET  /api/videos
///   GET  /api/videos/{id}/frames/{t}                       PNG
///   GET  /api/videos/{id}/annotations?set=original|corrected
///   POST /api/videos/{id}/decision {"choice", "operator"}
///   GET  /api/decisions
class ReviewService {
 public:
  /// Scans the dataset and opens the decision store (which may throw).
  explicit ReviewService(ReviewOptions options);
  ~ReviewService();
  ReviewService(const ReviewService&) = delete;
  ReviewService& operator=(const ReviewService&) = delete;

  /// Returns the bound port; port 0 picks a free one. Throws std::runtime_error on failure.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();
  void wait_until_ready() const;

  std::string manifest_json() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct ExportEntry {
  std::string video_id;
  Choice choice = Choice::Original;
  bool defaulted = false;
  std::filesystem::path source;
};

struct ExportSummary {
  std::size_t original = 0;
  std::size_t corrected = 0;
  std::vector<ExportEntry> videos;
};

/// Copies each video's chosen label file to <out>/<id>/label.json and writes
/// <out>/summary.json. Videos without a decision take `fallback`, or throw
/// ValidationError when there is none.
ExportSummary review_export(const std::filesystem::path& decisions, const std::filesystem::path& dataset,
                            const std::filesystem::path& corrected, const std::filesystem::path& out,
                            std::optional<Choice> fallback = std::nullopt);

std::string export_summary_json(const ExportSummary& summary);

}  // namespace annofix
