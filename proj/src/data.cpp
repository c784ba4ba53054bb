// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "socialprobe/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "socialprobe/error.hpp"

namespace socialprobe {

bool is_scene_name(std::string_view name) {
  return std::find(kSceneNames.begin(), kSceneNames.end(), name) != kSceneNames.end();
}

Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

Vec2 rotate_about(Vec2 p, Vec2 center, double angle) {
  return center + rotate(p - center, angle);
}

std::size_t Scene::pedestrian_count() const {
  std::vector<std::int64_t> ids;
  ids.reserve(tracks.size());
  for (const Track& t : tracks) ids.push_back(t.ped);
  std::sort(ids.begin(), ids.end());
  return static_cast<std::size_t>(std::unique(ids.begin(), ids.end()) - ids.begin());
}

std::size_t Scene::record_count() const {
  std::size_t n = 0;
  for (const Track& t : tracks) n += t.positions.size();
  return n;
}

Scene build_scene(std::string name, std::vector<RawRecord> records) {
  std::sort(records.begin(), records.end(), [](const RawRecord& a, const RawRecord& b) {
    return a.ped != b.ped ? a.ped < b.ped : a.frame < b.frame;
  });

  // Scene stride: smallest positive frame step within any pedestrian.
  std::int64_t stride = std::numeric_limits<std::int64_t>::max();
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].ped != records[i - 1].ped) continue;
    const std::int64_t d = records[i].frame - records[i - 1].frame;
    if (d == 0) {
      throw ParseError("scene '" + name + "': duplicate record for frame " +
                       std::to_string(records[i].frame) + ", pedestrian " +
                       std::to_string(records[i].ped));
    }
    stride = std::min(stride, d);
  }
  if (stride == std::numeric_limits<std::int64_t>::max()) stride = 1;

  Scene scene;
  scene.name = std::move(name);
  scene.frame_stride = stride;
  std::size_t i = 0;
  while (i < records.size()) {
    Track track;
    track.ped = records[i].ped;
    track.first_frame = records[i].frame;
    track.positions.push_back(records[i].pos);
    std::size_t j = i + 1;
    while (j < records.size() && records[j].ped == track.ped &&
           records[j].frame - records[j - 1].frame == stride) {
      track.positions.push_back(records[j].pos);
      ++j;
    }
    if (track.positions.size() >= 2) scene.tracks.push_back(std::move(track));
    i = j;
  }
  return scene;
}

namespace {

double parse_number(std::string_view tok, std::size_t line, const std::string& file) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    throw ParseError(file + ":" + std::to_string(line) + ": malformed number '" +
                     std::string(tok) + "'");
  }
  return v;
}

std::int64_t parse_integral(std::string_view tok, std::size_t line, const std::string& file) {
  const double v = parse_number(tok, line, file);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) {
    throw ParseError(file + ":" + std::to_string(line) + ": expected integer id, got '" +
                     std::string(tok) + "'");
  }
  return static_cast<std::int64_t>(v);
}

}  // namespace

Scene load_scene(const std::filesystem::path& path, std::string name) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene file " + path.string());
  if (name.empty()) name = path.stem().string();
  const std::string file = path.string();

  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string_view> toks;
    std::string_view rest(line);
    while (!rest.empty()) {
      const auto start = rest.find_first_not_of(" \t\r");
      if (start == std::string_view::npos) break;
      rest.remove_prefix(start);
      const auto end = rest.find_first_of(" \t\r");
      toks.push_back(rest.substr(0, end));
      if (end == std::string_view::npos) break;
      rest.remove_prefix(end);
    }
    if (toks.empty()) continue;
    if (toks.size() != 4) {
      throw ParseError(file + ":" + std::to_string(line_no) + ": expected 4 fields, got " +
                       std::to_string(toks.size()));
    }
    records.push_back({parse_integral(toks[0], line_no, file),
                       parse_integral(toks[1], line_no, file),
                       {parse_number(toks[2], line_no, file), parse_number(toks[3], line_no, file)}});
  }
  if (records.empty()) throw ParseError(file + ": no records");
  return build_scene(std::move(name), std::move(records));
}

std::vector<Scene> load_scenes(const std::filesystem::path& dir,
                               std::span<const std::string> names) {
  std::vector<Scene> scenes;
  for (const std::string& n : names) scenes.push_back(load_scene(dir / (n + ".txt"), n));
  return scenes;
}

void fill_velocities(std::array<AgentState, kObsLen>& steps,
                     const std::array<bool, kObsLen>& valid) {
  for (std::size_t t = 0; t < kObsLen; ++t) {
    if (!valid[t]) {
      steps[t].vel = {};
    } else if (t > 0 && valid[t - 1]) {
      steps[t].vel = (1.0 / kFrameInterval) * (steps[t].pos - steps[t - 1].pos);
    } else if (t + 1 < kObsLen && valid[t + 1]) {
      steps[t].vel = (1.0 / kFrameInterval) * (steps[t + 1].pos - steps[t].pos);
    } else {
      steps[t].vel = {};
    }
  }
}

std::vector<TrajectoryWindow> extract_windows(const Scene& scene) {
  const std::int64_t stride = scene.frame_stride;
  // frame -> (track index, position index)
  std::unordered_map<std::int64_t, std::vector<std::pair<std::size_t, std::size_t>>> at_frame;
  for (std::size_t ti = 0; ti < scene.tracks.size(); ++ti) {
    const Track& t = scene.tracks[ti];
    for (std::size_t k = 0; k < t.positions.size(); ++k) {
      at_frame[t.first_frame + stride * static_cast<std::int64_t>(k)].emplace_back(ti, k);
    }
  }

  std::vector<TrajectoryWindow> windows;
  std::array<bool, kObsLen> all_valid;
  all_valid.fill(true);
  for (const Track& track : scene.tracks) {
    if (track.positions.size() < kWindowLen) continue;
    for (std::size_t s = 0; s + kWindowLen <= track.positions.size(); ++s) {
      TrajectoryWindow w;
      w.scene = scene.name;
      w.ped = track.ped;
      w.start_frame = track.first_frame + stride * static_cast<std::int64_t>(s);
      for (std::size_t t = 0; t < kObsLen; ++t) w.observed[t].pos = track.positions[s + t];
      fill_velocities(w.observed, all_valid);
      for (std::size_t t = 0; t < kPredLen; ++t) w.future[t] = track.positions[s + kObsLen + t];

      const std::int64_t last_obs = w.start_frame + stride * static_cast<std::int64_t>(kObsLen - 1);
      auto it = at_frame.find(last_obs);
      if (it != at_frame.end()) {
        for (const auto& [ti, k_last] : it->second) {
          const Track& other = scene.tracks[ti];
          if (other.ped == track.ped) continue;
          NeighbourTrack nb;
          nb.ped = other.ped;
          for (std::size_t t = 0; t < kObsLen; ++t) {
            const std::int64_t f = w.start_frame + stride * static_cast<std::int64_t>(t);
            const std::int64_t k = (f - other.first_frame) / stride;
            if (f >= other.first_frame && f <= other.last_frame(stride)) {
              nb.valid[t] = true;
              nb.steps[t].pos = other.positions[static_cast<std::size_t>(k)];
            }
          }
          fill_velocities(nb.steps, nb.valid);
          w.neighbours.push_back(nb);
        }
        std::sort(w.neighbours.begin(), w.neighbours.end(),
                  [](const NeighbourTrack& a, const NeighbourTrack& b) { return a.ped < b.ped; });
      }
      windows.push_back(std::move(w));
    }
  }
  return windows;
}

void check_window(const TrajectoryWindow& w) {
  auto fail = [&](const std::string& what) {
    throw Error("window " + w.scene + "/ped " + std::to_string(w.ped) + "/frame " +
                std::to_string(w.start_frame) + ": " + what);
  };
  auto finite = [](Vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); };
  for (const AgentState& s : w.observed) {
    if (!finite(s.pos) || !finite(s.vel)) fail("non-finite main state");
  }
  for (Vec2 p : w.future) {
    if (!finite(p)) fail("non-finite future");
  }
  for (const NeighbourTrack& nb : w.neighbours) {
    if (nb.ped == w.ped) fail("main pedestrian listed as its own neighbour");
    if (!nb.valid[kObsLen - 1]) fail("neighbour absent at the last observation step");
    for (std::size_t t = 0; t < kObsLen; ++t) {
      if (!nb.valid[t] && (nb.steps[t].pos != Vec2{} || nb.steps[t].vel != Vec2{})) {
        fail("padded neighbour step is not (0,0)");
      }
      if (!finite(nb.steps[t].pos) || !finite(nb.steps[t].vel)) fail("non-finite neighbour");
    }
  }
}

Normalizer::Normalizer(Vec2 min, Vec2 max) : min_(min), max_(max) {
  if (!(max.x > min.x) || !(max.y > min.y)) {
    throw Error("normalizer: degenerate axis (min == max)");
  }
}

Normalizer Normalizer::fit(std::span<const Vec2> positions) {
  if (positions.empty()) throw Error("normalizer: no positions to fit");
  Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 hi{-lo.x, -lo.y};
  for (Vec2 p : positions) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  return Normalizer(lo, hi);
}

Normalizer Normalizer::fit(std::span<const Scene> scenes) {
  std::vector<Vec2> all;
  for (const Scene& s : scenes)
    for (const Track& t : s.tracks) all.insert(all.end(), t.positions.begin(), t.positions.end());
  return fit(std::span<const Vec2>(all));
}

Vec2 Normalizer::apply(Vec2 p) const {
  return {(p.x - min_.x) / (max_.x - min_.x), (p.y - min_.y) / (max_.y - min_.y)};
}

Vec2 Normalizer::invert(Vec2 p) const {
  return {p.x * (max_.x - min_.x) + min_.x, p.y * (max_.y - min_.y) + min_.y};
}

Vec2 Normalizer::apply_velocity(Vec2 v) const {
  return {v.x / (max_.x - min_.x), v.y / (max_.y - min_.y)};
}

Vec2 Normalizer::invert_velocity(Vec2 v) const {
  return {v.x * (max_.x - min_.x), v.y * (max_.y - min_.y)};
}

TrajectoryWindow Normalizer::apply(const TrajectoryWindow& w) const {
  TrajectoryWindow out = w;
  for (AgentState& s : out.observed) {
    s.pos = apply(s.pos);
    s.vel = apply_velocity(s.vel);
  }
  for (Vec2& p : out.future) p = apply(p);
  for (NeighbourTrack& nb : out.neighbours) {
    for (std::size_t t = 0; t < kObsLen; ++t) {
      if (!nb.valid[t]) continue;
      nb.steps[t].pos = apply(nb.steps[t].pos);
      nb.steps[t].vel = apply_velocity(nb.steps[t].vel);
    }
  }
  return out;
}

TrajectoryWindow augment_rotate(const TrajectoryWindow& w, double angle) {
  if (!std::isfinite(angle)) throw Error("augment_rotate: non-finite angle");
  TrajectoryWindow out = w;
  if (angle == 0.0) return out;
  const Vec2 center = w.last_position();
  for (AgentState& s : out.observed) {
    s.pos = rotate_about(s.pos, center, angle);
    s.vel = rotate(s.vel, angle);
  }
  for (Vec2& p : out.future) p = rotate_about(p, center, angle);
  for (NeighbourTrack& nb : out.neighbours) {
    for (std::size_t t = 0; t < kObsLen; ++t) {
      if (!nb.valid[t]) continue;
      nb.steps[t].pos = rotate_about(nb.steps[t].pos, center, angle);
      nb.steps[t].vel = rotate(nb.steps[t].vel, angle);
    }
  }
  return out;
}

std::vector<NeighbourTrack> gen_random_neighbours(std::size_t max_agents, Rng& rng) {
  const std::size_t r = rng.uniform_int(max_agents);
  std::vector<NeighbourTrack> out(r);
  std::array<bool, kObsLen> all_valid;
  all_valid.fill(true);
  for (std::size_t j = 0; j < r; ++j) {
    NeighbourTrack& nb = out[j];
    nb.ped = -1 - static_cast<std::int64_t>(j);
    nb.valid = all_valid;
    for (AgentState& s : nb.steps) {
      const double x = rng.uniform();
      const double y = rng.uniform();
      s.pos = {x, y};
    }
    fill_velocities(nb.steps, nb.valid);
  }
  return out;
}

DataSplit make_splits(std::span<const Scene> scenes, const std::string& held_out,
                      double val_fraction, Rng& rng) {
  if (!is_scene_name(held_out)) throw ConfigError("unknown scene name '" + held_out + "'");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw ConfigError("validation fraction must lie in [0, 1)");
  }
  DataSplit split;
  split.plan.held_out = held_out;
  split.plan.val_fraction = val_fraction;

  std::vector<Scene> training;
  const Scene* test_scene = nullptr;
  for (const Scene& s : scenes) {
    if (s.name == held_out) {
      test_scene = &s;
    } else {
      training.push_back(s);
      split.plan.training_scenes.push_back(s.name);
    }
  }
  if (test_scene == nullptr) throw ConfigError("held-out scene '" + held_out + "' not loaded");
  if (training.empty()) throw ConfigError("no training scenes besides '" + held_out + "'");

  split.normalizer = Normalizer::fit(std::span<const Scene>(training));

  std::vector<TrajectoryWindow> pool;
  for (const Scene& s : training) {
    auto ws = extract_windows(s);
    pool.insert(pool.end(), std::make_move_iterator(ws.begin()),
                std::make_move_iterator(ws.end()));
  }
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_val =
      static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(pool.size())));
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dst = i < n_val ? split.val : split.train;
    dst.push_back(std::move(pool[order[i]]));
  }
  for (const auto* set : {&split.train, &split.val}) {
    for (const auto& w : *set) split.max_neighbours = std::max(split.max_neighbours, w.neighbours.size());
  }
  split.test = extract_windows(*test_scene);
  return split;
}

}  // namespace socialprobe
