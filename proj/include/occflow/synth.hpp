#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "occflow/homography.hpp"
#include "occflow/occ_grid.hpp"

namespace occflow {

// Axis-aligned box at frame 0, moving with constant planar velocity and
// optional yaw rate about its own center. Extents are in cells; the box
// occupies z from 0 up to a jittered top below ext_z.
struct ObjectSpec {
  uint8_t cls = 4;
  uint32_t ext_x = 1;
  uint32_t ext_y = 1;
  uint32_t ext_z = 1;
  double start_x = 0.0;  // min corner in world cells at frame 0
  double start_y = 0.0;
  double vel_x = 0.0;  // cells per frame
  double vel_y = 0.0;
  double yaw_rate_deg = 0.0;  // degrees per frame about the box center
};

// Per-frame rigid motion of the scene content in grid coordinates (the
// view moves inversely: content translating by (-1,0) means the sensor
// moved by (+1,0)). Rotation pivots on the grid center.
struct EgoMotion {
  double vel_x = 0.0;
  double vel_y = 0.0;
  double yaw_rate_deg = 0.0;
};

struct Scenario {
  std::string name;
  uint32_t dims_x = 64;
  uint32_t dims_y = 64;
  uint32_t dims_z = 8;
  uint8_t ground_class = 11;  // 0 disables the ground plane
  std::vector<ObjectSpec> objects;
  EgoMotion ego;
  uint32_t frames = 12;
  uint64_t seed = 42;

  void validate() const;
};

struct ObjectPose {
  double center_x = 0.0;
  double center_y = 0.0;
  double yaw_deg = 0.0;
};

struct GroundTruthMotion {
  // True scene homography between consecutive frames (t -> t+1);
  // constant under the constant-velocity model, one entry per pair.
  std::vector<Homography> steps;
  // World-frame pose of every object at every frame: [object][frame].
  std::vector<std::vector<ObjectPose>> object_poses;
  // Set when an object's footprint leaves the visible grid in any frame.
  std::vector<uint8_t> object_clipped;

  // Composed scene motion from frame 0 to frame t.
  Homography cumulative(uint32_t t) const;
};

struct SynthResult {
  OccSequence sequence;
  GroundTruthMotion motion;
};

SynthResult generate(const Scenario& sc);

// Fixed scenario library: static, translating_car, ego_translation,
// ego_rotation, crossing_pair.
std::vector<Scenario> scenario_presets();
Scenario find_preset(const std::string& name);

// Structured-text dump of the ground-truth motion (sidecar for synth).
std::string motion_text(const GroundTruthMotion& motion);

}  // namespace occflow
