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

#include "annofix/review.hpp"

#include <chrono>
#include <stdexcept>

#include <json.hpp>

#include "annofix/annotation.hpp"
#include "annofix/dataset.hpp"
#include "annofix/errors.hpp"
#include "annofix/fileio.hpp"
#include "annofix/frames.hpp"

// after Eigen: <resolv.h> defines a _res macro that collides with Eigen internals
#include <httplib.h>

namespace annofix {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

const char* choice_name(Choice c) { return c == Choice::Corrected ? "corrected" : "original"; }

Choice parse_choice(std::string_view text) {
  if (text == "original") return Choice::Original;
  if (text == "corrected") return Choice::Corrected;
  throw std::invalid_argument("choice must be \"original\" or \"corrected\", got \"" + std::string(text) + "\"");
}

namespace {

ordered_json record_json(const DecisionRecord& r) {
  return {{"video_id", r.video_id},
          {"choice", choice_name(r.choice)},
          {"operator", r.operator_name},
          {"timestamp", r.timestamp}};
}

std::int64_t now_utc() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

}  // namespace

std::string decisions_json(const std::vector<DecisionRecord>& records) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : records) arr.push_back(record_json(r));
  return ordered_json{{"decisions", std::move(arr)}}.dump(2) + "\n";
}

std::vector<DecisionRecord> parse_decisions(std::string_view bytes) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("decisions file: ") + e.what(), 0, 0, e.byte);
  }
  if (!doc.is_object() || !doc.contains("decisions") || !doc["decisions"].is_array())
    throw ValidationError("decisions file: expected {\"decisions\": [...]}");
  std::vector<DecisionRecord> out;
  for (const auto& d : doc["decisions"]) {
    try {
      DecisionRecord r;
      r.video_id = d.at("video_id").get<std::string>();
      r.choice = parse_choice(d.at("choice").get<std::string>());
      r.operator_name = d.value("operator", std::string());
      r.timestamp = d.value("timestamp", std::int64_t{0});
      if (r.video_id.empty()) throw std::invalid_argument("empty video_id");
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw ValidationError(std::string("decisions file: bad record: ") + e.what());
    }
  }
  return out;
}

DecisionStore::DecisionStore(fs::path path) : path_(std::move(path)) {
  if (!fs::exists(path_)) return;
  for (auto& r : parse_decisions(read_file(path_))) records_[r.video_id] = std::move(r);
}

DecisionRecord DecisionStore::record(DecisionRecord rec) {
  std::lock_guard lock(mutex_);
  records_[rec.video_id] = rec;
  write_file_atomic(path_, to_json_locked());
  return rec;
}

std::optional<DecisionRecord> DecisionStore::get(const std::string& video_id) const {
  std::lock_guard lock(mutex_);
  const auto it = records_.find(video_id);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

std::vector<DecisionRecord> DecisionStore::all() const {
  std::lock_guard lock(mutex_);
  std::vector<DecisionRecord> out;
  for (const auto& [id, r] : records_) out.push_back(r);
  return out;
}

std::string DecisionStore::to_json() const {
  std::lock_guard lock(mutex_);
  return to_json_locked();
}

std::string DecisionStore::to_json_locked() const {
  std::vector<DecisionRecord> v;
  for (const auto& [id, r] : records_) v.push_back(r);
  return decisions_json(v);
}

// --- service ---------------------------------------------------------------

struct ReviewService::Impl {
  ReviewOptions options;
  DecisionStore store;
  std::vector<std::string> ids;
  std::map<std::string, std::unique_ptr<FrameSequence>> frames;  // null when the directory is unusable
  httplib::Server server;

  explicit Impl(ReviewOptions o) : options(std::move(o)), store(options.decisions) {}

  bool known(const std::string& id) const { return frames.count(id) != 0; }

  fs::path label_path(const std::string& id, Choice set) const {
    return video_paths(set == Choice::Corrected ? options.corrected : options.dataset, id).label;
  }

  ordered_json manifest() const {
    ordered_json videos = ordered_json::array();
    for (const auto& id : ids) {
      const VideoPaths p = video_paths(options.dataset, id);
      const fs::path corrected = label_path(id, Choice::Corrected);
      const auto& seq = frames.at(id);
      ordered_json v;
      v["id"] = id;
      v["frames"] = seq ? seq->size() : 0;
      v["paths"] = {{"frames", p.frames.string()}, {"original", p.label.string()}, {"corrected", corrected.string()}};
      v["original"] = fs::exists(p.label);
      v["corrected"] = !options.corrected.empty() && fs::exists(corrected);
      const auto d = store.get(id);
      v["decision"] = d ? choice_name(d->choice) : "none";
      v["operator"] = d ? ordered_json(d->operator_name) : ordered_json(nullptr);
      v["timestamp"] = d ? ordered_json(d->timestamp) : ordered_json(nullptr);
      videos.push_back(std::move(v));
    }
    return {{"videos", std::move(videos)}};
  }

  static void error(httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(ordered_json{{"error", message}}.dump(), "application/json");
  }

  void routes() {
    server.Get("/api/videos", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(manifest().dump(), "application/json");
    });

    server.Get(R"(/api/videos/([^/]+)/frames/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      if (!known(id)) return error(res, 404, "unknown video " + id);
      const auto& seq = frames.at(id);
      if (!seq) return error(res, 404, "no frames for " + id);
      std::size_t t = 0;
      try {
        t = std::stoul(req.matches[2]);
        res.set_content(encode_png(seq->frame(t)), "image/png");
      } catch (const std::out_of_range&) {
        error(res, 404, "frame out of range");
      } catch (const std::exception& e) {
        error(res, 500, e.what());
      }
    });

    server.Get(R"(/api/videos/([^/]+)/annotations)", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      if (!known(id)) return error(res, 404, "unknown video " + id);
      Choice set = Choice::Original;
      try {
        if (req.has_param("set")) set = parse_choice(req.get_param_value("set"));
      } catch (const std::invalid_argument& e) {
        return error(res, 400, e.what());
      }
      const fs::path p = label_path(id, set);
      if ((set == Choice::Corrected && options.corrected.empty()) || !fs::exists(p))
        return error(res, 404, std::string("no ") + choice_name(set) + " annotations for " + id);
      try {
        res.set_content(write_annotations(load_track(p)), "application/json");
      } catch (const std::exception& e) {
        error(res, 500, e.what());
      }
    });

    server.Post(R"(/api/videos/([^/]+)/decision)", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      if (!known(id)) return error(res, 404, "unknown video " + id);
      DecisionRecord rec;
      try {
        const auto body = nlohmann::json::parse(req.body);
        rec.video_id = id;
        rec.choice = parse_choice(body.at("choice").get<std::string>());
        rec.operator_name = body.value("operator", std::string());
        rec.timestamp = now_utc();
      } catch (const std::exception& e) {
        return error(res, 400, std::string("bad decision: ") + e.what());
      }
      try {
        res.set_content(record_json(store.record(rec)).dump(), "application/json");
      } catch (const std::exception& e) {
        error(res, 500, e.what());
      }
    });

    server.Get("/api/decisions", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(store.to_json(), "application/json");
    });

    if (!options.ui_dir.empty() && !server.set_mount_point("/", options.ui_dir.string()))
      throw std::runtime_error("cannot serve UI from " + options.ui_dir.string());
  }
};

ReviewService::ReviewService(ReviewOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {
  impl_->ids = list_videos(impl_->options.dataset);
  for (const auto& id : impl_->ids) {
    std::unique_ptr<FrameSequence> seq;
    try {
      seq = std::make_unique<FrameSequence>(video_paths(impl_->options.dataset, id).frames);
    } catch (const std::exception&) {
    }
    impl_->frames.emplace(id, std::move(seq));
  }
  impl_->routes();
}

ReviewService::~ReviewService() = default;

int ReviewService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->server.bind_to_any_port(host);
    if (p < 0) throw std::runtime_error("cannot bind " + host);
    return p;
  }
  if (!impl_->server.bind_to_port(host, port))
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void ReviewService::listen() { impl_->server.listen_after_bind(); }
void ReviewService::stop() { impl_->server.stop(); }
void ReviewService::wait_until_ready() const { impl_->server.wait_until_ready(); }
std::string ReviewService::manifest_json() const { return impl_->manifest().dump(2) + "\n"; }

// --- export ----------------------------------------------------------------

ExportSummary review_export(const fs::path& decisions, const fs::path& dataset, const fs::path& corrected,
                            const fs::path& out, std::optional<Choice> fallback) {
  const DecisionStore store(decisions);
  if (!fs::exists(decisions) && !fallback) throw ValidationError("no decisions file at " + decisions.string());
  ExportSummary summary;
  for (const auto& id : list_videos(dataset)) {
    ExportEntry e{id, Choice::Original, false, {}};
    if (const auto d = store.get(id)) {
      e.choice = d->choice;
    } else if (fallback) {
      e.choice = *fallback;
      e.defaulted = true;
    } else {
      throw ValidationError("video " + id + " has no decision and no default was given");
    }
    e.source = video_paths(e.choice == Choice::Corrected ? corrected : dataset, id).label;
    summary.videos.push_back(std::move(e));
  }
  for (const auto& e : summary.videos) {
    write_file(video_paths(out, e.video_id).label, read_file(e.source));
    ++(e.choice == Choice::Corrected ? summary.corrected : summary.original);
  }
  write_file(out / "summary.json", export_summary_json(summary));
  return summary;
}

std::string export_summary_json(const ExportSummary& summary) {
  ordered_json videos = ordered_json::array();
  for (const auto& e : summary.videos)
    videos.push_back({{"video_id", e.video_id},
                      {"choice", choice_name(e.choice)},
                      {"defaulted", e.defaulted},
                      {"source", e.source.string()}});
  return ordered_json{{"counts", {{"original", summary.original}, {"corrected", summary.corrected}}},
                      {"videos", std::move(videos)}}
             .dump(2) +
         "\n";
}

}  // namespace annofix
