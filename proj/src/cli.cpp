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

#include "annofix/cli.hpp"

#include <atomic>
#include <csignal>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "annofix/correction.hpp"
#include "annofix/dataset.hpp"
#include "annofix/errors.hpp"
#include "annofix/fileio.hpp"
#include "annofix/frames.hpp"
#include "annofix/metrics.hpp"
#include "annofix/noise.hpp"
#include "annofix/render.hpp"
#include "annofix/review.hpp"
#include "annofix/rng.hpp"

namespace annofix {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(precision) << v;
  return ss.str();
}

/// One line per failed video, in id order.
int report_failures(const std::vector<std::string>& ids, const std::vector<std::string>& errors, std::ostream& err) {
  int failed = 0;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (!errors[i].empty()) {
      err << ids[i] << ": " << errors[i] << "\n";
      ++failed;
    }
  return failed;
}

std::vector<std::string> videos_or_throw(const fs::path& root) {
  try {
    return list_videos(root);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

// --- stats -----------------------------------------------------------------

struct StatsArgs {
  fs::path dataset;
  fs::path against;
  fs::path json;
};

int cmd_stats(const StatsArgs& a, unsigned threads, std::ostream& out, std::ostream& err) {
  const auto ids = videos_or_throw(a.dataset);
  std::vector<std::optional<AnnotationTrack>> base(ids.size()), other(ids.size());
  std::vector<std::string> errors(ids.size());
  parallel_for(ids.size(), [&](std::size_t i) {
    try {
      base[i] = load_track(video_paths(a.dataset, ids[i]).label);
      if (!a.against.empty()) {
        other[i] = load_track(video_paths(a.against, ids[i]).label);
        if (other[i]->size() != base[i]->size())
          throw ValidationError("frame counts differ (" + std::to_string(base[i]->size()) + " vs " +
                                std::to_string(other[i]->size()) + ")");
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
      base[i].reset();
      other[i].reset();
    }
  }, threads);
  const int failed = report_failures(ids, errors, err);

  std::vector<AnnotationTrack> tracks;
  std::vector<std::pair<const AnnotationTrack*, const AnnotationTrack*>> pairs;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!base[i]) continue;
    tracks.push_back(*base[i]);
    if (other[i]) pairs.emplace_back(&*base[i], &*other[i]);
  }

  ordered_json doc;
  doc["videos"] = ids.size();
  doc["failed"] = failed;
  out << "videos: " << ids.size() << " (" << failed << " failed)\n";
  try {
    const SizeStats s = size_stats(tracks);
    doc["size"] = {{"mean_w", s.mean_w}, {"sd_w", s.sd_w}, {"mean_h", s.mean_h}, {"sd_h", s.sd_h}};
    out << "size:  w " << fmt(s.mean_w, 3) << " +- " << fmt(s.sd_w, 3) << "   h " << fmt(s.mean_h, 3) << " +- "
        << fmt(s.sd_h, 3) << "\n";
  } catch (const ValidationError& e) {
    err << "size statistics: " << e.what() << "\n";
  }
  if (!a.against.empty() && !pairs.empty()) {
    const DiffStats d = diff_stats(pairs);
    const double ta = compare_tracks(pairs);
    doc["diff"] = {{"mu_x", d.mu_x},     {"sigma_x", d.sigma_x},   {"mu_y", d.mu_y},     {"sigma_y", d.sigma_y},
                   {"mu_nx", d.mu_nx},   {"sigma_nx", d.sigma_nx}, {"mu_ny", d.mu_ny},   {"sigma_ny", d.sigma_ny},
                   {"count", d.count}};
    doc["ta"] = ta;
    out << "diff:  x " << fmt(d.mu_x) << " +- " << fmt(d.sigma_x) << "   y " << fmt(d.mu_y) << " +- "
        << fmt(d.sigma_y) << "   (" << d.count << " frames)\n";
    out << "norm:  x " << fmt(d.mu_nx) << " +- " << fmt(d.sigma_nx) << "   y " << fmt(d.mu_ny) << " +- "
        << fmt(d.sigma_ny) << "\n";
    out << "TA:    " << fmt(ta, 2) << "%\n";
  }
  if (!a.json.empty()) write_file(a.json, doc.dump(2) + "\n");
  return failed ? kExitPartial : kExitOk;
}

// --- inject ----------------------------------------------------------------

struct InjectArgs {
  fs::path dataset;
  fs::path config;
  fs::path out;
  std::optional<std::uint64_t> seed;
};

int cmd_inject(const InjectArgs& a, unsigned threads, std::ostream& out, std::ostream& err) {
  NoiseConfig cfg;
  try {
    cfg = parse_noise_config(read_file(a.config));
  } catch (const std::exception& e) {
    throw UsageError(std::string("noise config: ") + e.what());
  }
  if (a.seed) cfg.seed = *a.seed;
  const auto ids = videos_or_throw(a.dataset);

  std::vector<std::optional<AnnotationTrack>> clean(ids.size());
  std::vector<std::string> raw(ids.size()), errors(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    try {
      raw[i] = read_file(video_paths(a.dataset, ids[i]).label);
      clean[i] = parse_annotations(raw[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  // false boxes are drawn from the size distribution of the whole dataset
  std::vector<AnnotationTrack> loaded;
  for (const auto& t : clean)
    if (t) loaded.push_back(*t);
  std::optional<SizeStats> stats;
  try {
    stats = size_stats(loaded);
  } catch (const ValidationError&) {
  }

  std::vector<std::size_t> records(ids.size(), 0);
  parallel_for(ids.size(), [&](std::size_t i) {
    if (!clean[i]) return;
    try {
      const VideoPaths p = video_paths(a.dataset, ids[i]);
      std::unique_ptr<FrameSequence> frames;
      if (fs::is_directory(p.frames)) frames = std::make_unique<FrameSequence>(p.frames);
      if (frames && frames->size() != clean[i]->size())
        throw ValidationError(std::to_string(frames->size()) + " frames but " + std::to_string(clean[i]->size()) +
                              " labels");
      const InjectionContext ctx{frames.get(), cfg.image_size, stats};
      const InjectionResult r = inject(*clean[i], cfg.spec, ctx, derive_seed(cfg.seed, ids[i]));
      const VideoPaths o = video_paths(a.out, ids[i]);
      write_file(o.label, r.log.records.empty() ? raw[i] : write_annotations(r.corrupted.track));
      write_file(o.dir / "train_labels.json", write_training_export(r.corrupted));
      write_file(o.dir / "injection_log.json", write_injection_log(r.log));
      records[i] = r.log.records.size();
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }, threads);
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (errors[i].empty()) out << ids[i] << ": " << records[i] << " injection records\n";
  return report_failures(ids, errors, err) ? kExitPartial : kExitOk;
}

// --- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  fs::path annotations;
  fs::path detections;
  std::optional<double> threshold;
  std::optional<double> target_fa;
  std::optional<double> fps;
  fs::path json;
  bool frames = false;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  if (a.threshold.has_value() == a.target_fa.has_value())
    throw UsageError("exactly one of --threshold and --target-fa is required");
  if (a.fps && !(*a.fps > 0.0)) throw UsageError("--fps must be positive");
  const auto ids = videos_or_throw(a.annotations);
  if (!fs::is_directory(a.detections)) throw UsageError("not a directory: " + a.detections.string());

  std::vector<std::optional<AnnotationTrack>> tracks(ids.size());
  std::vector<std::optional<DetectionSet>> dets(ids.size());
  std::vector<std::string> errors(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    try {
      AnnotationTrack t = load_track(video_paths(a.annotations, ids[i]).label);
      if (a.fps) t = AnnotationTrack(t.video_id(), t.labels(), *a.fps);
      const fs::path dp = a.detections / (ids[i] + ".json");
      if (!fs::exists(dp)) throw ValidationError("no detection file " + dp.string());
      DetectionSet d = parse_detections(read_file(dp));
      if (d.frames.size() != t.size())
        throw ValidationError("detections cover " + std::to_string(d.frames.size()) + " frames, annotations " +
                              std::to_string(t.size()));
      tracks[i] = std::move(t);
      dets[i] = std::move(d);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  int failed = report_failures(ids, errors, err);
  const std::set<std::string> known(ids.begin(), ids.end());
  for (const auto& entry : fs::directory_iterator(a.detections)) {
    if (entry.path().extension() != ".json") continue;
    if (!known.count(entry.path().stem().string())) {
      err << entry.path().filename().string() << ": detections for unknown video " << entry.path().stem().string()
          << "\n";
      ++failed;
    }
  }
  // pooled metrics are only meaningful over the complete set
  if (failed) return kExitPartial;

  std::vector<EvalPair> pairs;
  for (std::size_t i = 0; i < ids.size(); ++i) pairs.push_back({&*tracks[i], &*dets[i]});
  const EvalReport report =
      a.threshold ? evaluate(pairs, Threshold{*a.threshold, false}) : evaluate_at_fa(pairs, *a.target_fa);
  out << report_table(report);
  if (!a.json.empty()) write_file(a.json, report_json(report, a.frames));
  return kExitOk;
}

// --- correct ---------------------------------------------------------------

struct CorrectArgs {
  fs::path dataset;
  fs::path labels;
  fs::path out;
  CorrectionConfig config;
};

int cmd_correct(const CorrectArgs& a, unsigned threads, std::ostream& out, std::ostream& err) {
  try {
    a.config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto ids = videos_or_throw(a.dataset);
  const fs::path labels = a.labels.empty() ? a.dataset : a.labels;
  std::vector<std::string> errors(ids.size()), lines(ids.size());
  parallel_for(ids.size(), [&](std::size_t i) {
    try {
      const FrameSequence frames(video_paths(a.dataset, ids[i]).frames);
      const AnnotationTrack track = load_track(video_paths(labels, ids[i]).label);
      const CorrectionResult r = correct(frames, track, a.config);
      const VideoPaths o = video_paths(a.out, ids[i]);
      write_file(o.label, write_annotations(r.track));
      write_file(o.dir / "diagnostics.json", diagnostics_json(r, a.config));
      std::size_t saturated = 0, moved = 0;
      for (const auto& pass : r.passes)
        for (const auto& c : pass.chains) saturated += c.saturated_count();
      for (std::size_t t = 0; t < track.size(); ++t) moved += !(r.track[t] == track[t]);
      lines[i] = ids[i] + ": " + std::to_string(moved) + " of " + std::to_string(track.size()) + " frames moved, " +
                 std::to_string(saturated) + " saturated matches";
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }, threads);
  for (const auto& l : lines)
    if (!l.empty()) out << l << "\n";
  return report_failures(ids, errors, err) ? kExitPartial : kExitOk;
}

// --- render ----------------------------------------------------------------

struct RenderArgs {
  fs::path frames;
  std::vector<std::string> labels;
  std::vector<std::string> colors;
  fs::path out;
};

int cmd_render(const RenderArgs& a, std::ostream& out, std::ostream& err) {
  static const char* kDefaultColors[] = {"green", "red", "blue", "yellow", "cyan", "magenta"};
  if (a.labels.empty()) throw UsageError("at least one --labels file is required");
  std::vector<Rgb> colors;
  try {
    for (std::size_t i = 0; i < a.labels.size(); ++i)
      colors.push_back(parse_color(i < a.colors.size() ? a.colors[i] : kDefaultColors[i % 6]));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const FrameSequence frames(a.frames);
  std::vector<AnnotationTrack> tracks;
  for (const auto& l : a.labels) tracks.push_back(load_track(l));
  std::vector<Overlay> overlays;
  for (std::size_t i = 0; i < tracks.size(); ++i) overlays.push_back({&tracks[i], colors[i]});
  const RenderSummary s = render_video(frames, overlays, a.out);
  for (const auto& f : s.failures) err << f << "\n";
  out << s.written << " frames written to " << a.out.string() << "\n";
  return s.failures.empty() ? kExitOk : kExitPartial;
}

// --- review ----------------------------------------------------------------

std::atomic<ReviewService*> g_service{nullptr};

extern "C" void stop_service(int) {
  if (ReviewService* s = g_service.load()) s->stop();
}

struct ServeArgs {
  ReviewOptions options;
  std::string bind = "127.0.0.1:8080";
};

int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
  const auto colon = a.bind.rfind(':');
  if (colon == std::string::npos) throw UsageError("--bind expects host:port");
  int port = 0;
  try {
    port = std::stoi(a.bind.substr(colon + 1));
  } catch (const std::exception&) {
    throw UsageError("--bind expects host:port");
  }
  std::unique_ptr<ReviewService> service;
  try {
    service = std::make_unique<ReviewService>(a.options);
  } catch (const std::exception& e) {
    err << "refusing to start: " << e.what() << "\n";
    return kExitUsage;
  }
  const int bound = service->bind(a.bind.substr(0, colon), port);
  out << "review service on http://" << a.bind.substr(0, colon) << ":" << bound << "/\n" << std::flush;
  g_service = service.get();
  std::signal(SIGINT, stop_service);
  std::signal(SIGTERM, stop_service);
  service->listen();
  g_service = nullptr;
  return kExitOk;
}

struct ExportArgs {
  fs::path dataset, corrected, decisions, out;
  std::string fallback;
};

int cmd_export(const ExportArgs& a, std::ostream& out, std::ostream&) {
  std::optional<Choice> fallback;
  try {
    if (!a.fallback.empty()) fallback = parse_choice(a.fallback);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const ExportSummary s = review_export(a.decisions, a.dataset, a.corrected, a.out, fallback);
  out << "corrected=" << s.corrected << " original=" << s.original << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Annotation error simulation, evaluation and correction for single-object videos", "annofix"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads for per-video commands (0: all cores)");

  StatsArgs stats;
  auto* s = app.add_subcommand("stats", "Box size statistics, and differences against a second annotation set");
  s->add_option("dataset", stats.dataset, "Dataset root")->required();
  s->add_option("--against", stats.against, "Second annotation tree with the same layout");
  s->add_option("--json", stats.json, "Also write the statistics as JSON");

  InjectArgs inj;
  auto* in = app.add_subcommand("inject", "Corrupt annotations with seeded noise");
  in->add_option("dataset", inj.dataset, "Dataset root")->required();
  in->add_option("--config", inj.config, "Noise configuration (JSON)")->required();
  in->add_option("--out", inj.out, "Output tree")->required();
  in->add_option("--seed", inj.seed, "Overrides the configured seed");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Hit rate, FA/min, TA and MTA of detections against annotations");
  e->add_option("annotations", ev.annotations, "Annotation tree")->required();
  e->add_option("detections", ev.detections, "Directory of <video_id>.json detection files")->required();
  e->add_option("--threshold", ev.threshold, "Fixed score threshold");
  e->add_option("--target-fa", ev.target_fa, "Calibrate the threshold to this many false alarms per minute");
  e->add_option("--fps", ev.fps, "Frame rate (default: the annotation files' fps, normally 30)");
  e->add_option("--json", ev.json, "Also write the report as JSON");
  e->add_flag("--frames", ev.frames, "Include per-frame outcomes in the JSON report");

  CorrectArgs cor;
  auto* c = app.add_subcommand("correct", "Two-pass template-matching correction of box positions");
  c->add_option("dataset", cor.dataset, "Dataset root (frames)")->required();
  c->add_option("--labels", cor.labels, "Annotation tree to correct (default: the dataset's)");
  c->add_option("--out", cor.out, "Output tree")->required();
  c->add_option("--radius", cor.config.radius, "Search radius in pixels")->capture_default_str();
  c->add_option("--passes", cor.config.passes, "Correction passes")->capture_default_str();
  c->add_option("--min-segment", cor.config.min_segment, "Shortest visible run that is corrected")
      ->capture_default_str();

  RenderArgs ren;
  auto* r = app.add_subcommand("render", "Draw annotation boxes onto frames as PNG");
  r->add_option("frames", ren.frames, "Frame directory")->required();
  r->add_option("--labels", ren.labels, "Annotation file; repeat for several sets")->required();
  r->add_option("--color", ren.colors, "Color per --labels (name or #rrggbb; default green, red, ...)");
  r->add_option("--out", ren.out, "Output directory")->required();

  auto* review = app.add_subcommand("review", "Human selection between original and corrected annotations");
  review->require_subcommand(1);
  ServeArgs serve;
  auto* sv = review->add_subcommand("serve", "Run the review HTTP service");
  sv->add_option("dataset", serve.options.dataset, "Dataset root")->required();
  sv->add_option("--corrected", serve.options.corrected, "Corrected annotation tree")->required();
  sv->add_option("--decisions", serve.options.decisions, "Decisions file")->required();
  sv->add_option("--bind", serve.bind, "host:port")->capture_default_str();
  sv->add_option("--ui", serve.options.ui_dir, "Static UI bundle served at /");
  ExportArgs ex;
  auto* xp = review->add_subcommand("export", "Merge the chosen annotation sets into one tree");
  xp->add_option("dataset", ex.dataset, "Dataset root")->required();
  xp->add_option("--corrected", ex.corrected, "Corrected annotation tree")->required();
  xp->add_option("--decisions", ex.decisions, "Decisions file")->required();
  xp->add_option("--out", ex.out, "Output tree")->required();
  xp->add_option("--default", ex.fallback, "Choice for undecided videos (original or corrected)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  try {
    if (*s) return cmd_stats(stats, threads, out, err);
    if (*in) return cmd_inject(inj, threads, out, err);
    if (*e) return cmd_evaluate(ev, out, err);
    if (*c) return cmd_correct(cor, threads, out, err);
    if (*r) return cmd_render(ren, out, err);
    if (*sv) return cmd_serve(serve, out, err);
    if (*xp) return cmd_export(ex, out, err);
  } catch (const UsageError& ue) {
    err << "error: " << ue.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& ex2) {
    err << "error: " << ex2.what() << "\n";
    return kExitPartial;
  }
  return kExitUsage;
}

}  // namespace annofix
