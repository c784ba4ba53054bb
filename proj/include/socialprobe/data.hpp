// Copyright 2026 The socialprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "socialprobe/rng.hpp"

namespace socialprobe {

inline constexpr std::size_t kObsLen = 8;
inline constexpr std::size_t kPredLen = 12;
inline constexpr std::size_t kWindowLen = kObsLen + kPredLen;
inline constexpr double kFrameInterval = 0.4;  // seconds between samples

inline constexpr std::array<std::string_view, 5> kSceneNames = {"eth", "hotel", "univ", "zara1",
                                                                 "zara2"};
bool is_scene_name(std::string_view name);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
};

Vec2 rotate_about(Vec2 p, Vec2 center, double angle);
Vec2 rotate(Vec2 v, double angle);

struct RawRecord {
  std::int64_t frame = 0;
  std::int64_t ped = 0;
  Vec2 pos;
};

/// One pedestrian's contiguous run of frames at the scene stride.
struct Track {
  std::int64_t ped = 0;
  std::int64_t first_frame = 0;
  std::vector<Vec2> positions;

  std::int64_t last_frame(std::int64_t stride) const {
    return first_frame + stride * static_cast<std::int64_t>(positions.size() - 1);
  }
};

struct Scene {
  std::string name;
  std::int64_t frame_stride = 1;
  std::vector<Track> tracks;  // sorted by (ped, first_frame)

  std::size_t pedestrian_count() const;
  std::size_t record_count() const;
};

/// Builds a scene from raw rows in any order. Pedestrians with fewer than two
/// frames are dropped; a pedestrian whose frames skip the stride is split
/// into several tracks. Throws ParseError on duplicate (frame, ped).
Scene build_scene(std::string name, std::vector<RawRecord> records);

/// Parses whitespace-separated `frame ped x y` rows. The scene name defaults
/// to the file stem. Throws IoError / ParseError (with line number).
Scene load_scene(const std::filesystem::path& path, std::string name = {});

/// Position and velocity at one observation step.
struct AgentState {
  Vec2 pos;
  Vec2 vel;
};

struct NeighbourTrack {
  std::int64_t ped = 0;
  std::array<AgentState, kObsLen> steps{};
  std::array<bool, kObsLen> valid{};
};

struct TrajectoryWindow {
  std::string scene;
  std::int64_t ped = 0;
  std::int64_t start_frame = 0;
  std::array<AgentState, kObsLen> observed{};
  std::vector<NeighbourTrack> neighbours;
  std::array<Vec2, kPredLen> future{};

  Vec2 last_position() const { return observed[kObsLen - 1].pos; }
};

/// Velocities of a window-local sequence: (p_t - p_{t-1}) / 0.4, the first
/// valid step copying the next one. A step without valid neighbours in time
/// gets zero velocity; invalid steps are zero.
void fill_velocities(std::array<AgentState, kObsLen>& steps,
                     const std::array<bool, kObsLen>& valid);

/// Every (track, start) with 20 consecutive frames, stride 1 frame.
std::vector<TrajectoryWindow> extract_windows(const Scene& scene);

/// Throws Error describing the first violated window invariant.
void check_window(const TrajectoryWindow& w);

/// Per-axis min-max scaling of positions. Velocities are scaled by the same
/// per-axis factor (without the offset).
class Normalizer {
 public:
  Normalizer() = default;
  Normalizer(Vec2 min, Vec2 max);

  static Normalizer fit(std::span<const Scene> scenes);
  static Normalizer fit(std::span<const Vec2> positions);

  Vec2 apply(Vec2 p) const;
  Vec2 invert(Vec2 p) const;
  Vec2 apply_velocity(Vec2 v) const;
  Vec2 invert_velocity(Vec2 v) const;

  /// Copy of `w` with every position and velocity in normalized units.
  /// Padded entries stay exactly zero.
  TrajectoryWindow apply(const TrajectoryWindow& w) const;

  Vec2 min() const { return min_; }
  Vec2 max() const { return max_; }

 private:
  Vec2 min_{0.0, 0.0};
  Vec2 max_{1.0, 1.0};
};

/// Rotates every valid position and velocity (main, neighbours, future) by
/// `angle` about the main pedestrian's last observed position. Padded
/// entries remain (0,0).
TrajectoryWindow augment_rotate(const TrajectoryWindow& w, double angle);

/// r ~ U{0..max_agents} neighbours, each with 8 positions uniform in [0,1]^2
/// (normalized space), velocities from those positions, all steps valid.
std::vector<NeighbourTrack> gen_random_neighbours(std::size_t max_agents, Rng& rng);

struct SplitPlan {
  std::string held_out;
  std::vector<std::string> training_scenes;
  double val_fraction = 0.2;
};

struct DataSplit {
  SplitPlan plan;
  Normalizer normalizer;
  std::vector<TrajectoryWindow> train;
  std::vector<TrajectoryWindow> val;
  std::vector<TrajectoryWindow> test;
  std::size_t max_neighbours = 0;  // over train + val
};

/// Leave-one-scene-out split. Train/val are a seeded random partition of the
/// training scenes' windows; test is every window of the held-out scene. The
/// normalizer is fit on the training scenes only.
DataSplit make_splits(std::span<const Scene> scenes, const std::string& held_out,
                      double val_fraction, Rng& rng);

/// Loads `<dir>/<name>.txt` for each requested scene.
std::vector<Scene> load_scenes(const std::filesystem::path& dir,
                               std::span<const std::string> names);

}  // namespace socialprobe
