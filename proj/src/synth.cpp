#include "occflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "occflow/parallel.hpp"
#include "occflow/rng.hpp"

namespace occflow {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Jitter in {-1, 0, +1} as a pure function of position. Ground uses
// salt -1; objects use their index, keyed by box-local cell so the
// texture travels with the box.
int jitter(uint64_t seed, int64_t a, int64_t b, int64_t salt) {
  return static_cast<int>(hash_mix(seed, a, b, salt) % 3) - 1;
}

struct ObjectState {
  Eigen::Vector2d center;
  double yaw_rad = 0.0;
  double cos_yaw = 1.0;
  double sin_yaw = 0.0;
};

ObjectState object_state(const ObjectSpec& obj, uint32_t frame) {
  ObjectState st;
  const double t = static_cast<double>(frame);
  st.center = Eigen::Vector2d(obj.start_x + 0.5 * obj.ext_x + t * obj.vel_x,
                              obj.start_y + 0.5 * obj.ext_y + t * obj.vel_y);
  st.yaw_rad = t * obj.yaw_rate_deg * kPi / 180.0;
  st.cos_yaw = std::cos(st.yaw_rad);
  st.sin_yaw = std::sin(st.yaw_rad);
  return st;
}

// Box-local coordinates of a world point: inverse-rotate about the
// center, then shift so the box spans [0, ext).
Eigen::Vector2d box_local(const ObjectSpec& obj, const ObjectState& st,
                          const Eigen::Vector2d& p) {
  const Eigen::Vector2d rel = p - st.center;
  return Eigen::Vector2d(
      st.cos_yaw * rel.x() + st.sin_yaw * rel.y() + 0.5 * obj.ext_x,
      -st.sin_yaw * rel.x() + st.cos_yaw * rel.y() + 0.5 * obj.ext_y);
}

}  // namespace

void Scenario::validate() const {
  if (dims_x == 0 || dims_y == 0 || dims_z == 0) {
    throw Error(ErrorCode::InvalidScenario, "grid dims must be positive");
  }
  if (frames == 0) {
    throw Error(ErrorCode::InvalidScenario, "frame count must be positive");
  }
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const ObjectSpec& obj = objects[i];
    if (obj.ext_x == 0 || obj.ext_y == 0 || obj.ext_z == 0) {
      throw Error(ErrorCode::InvalidScenario,
                  "object " + std::to_string(i) + " has a zero extent");
    }
    if (obj.cls == kFreeClass) {
      throw Error(ErrorCode::InvalidScenario,
                  "object " + std::to_string(i) + " uses the free class");
    }
    if (!std::isfinite(obj.start_x) || !std::isfinite(obj.start_y) ||
        !std::isfinite(obj.vel_x) || !std::isfinite(obj.vel_y) ||
        !std::isfinite(obj.yaw_rate_deg)) {
      throw Error(ErrorCode::InvalidScenario,
                  "object " + std::to_string(i) + " has non-finite motion");
    }
  }
  if (!std::isfinite(ego.vel_x) || !std::isfinite(ego.vel_y) ||
      !std::isfinite(ego.yaw_rate_deg)) {
    throw Error(ErrorCode::InvalidScenario, "ego motion is non-finite");
  }
}

Homography GroundTruthMotion::cumulative(uint32_t t) const {
  if (steps.empty()) return Homography::identity();
  return compose(steps.front(), t);
}

SynthResult generate(const Scenario& sc) {
  sc.validate();

  const double pivot_x = (static_cast<double>(sc.dims_x) - 1.0) / 2.0;
  const double pivot_y = (static_cast<double>(sc.dims_y) - 1.0) / 2.0;
  const Homography step = Homography::rigid(sc.ego.yaw_rate_deg, sc.ego.vel_x,
                                            sc.ego.vel_y, pivot_x, pivot_y);

  SynthResult result;
  result.sequence.frame_period_s = 0.5f;
  result.sequence.frames.reserve(sc.frames);
  result.motion.steps.assign(sc.frames > 0 ? sc.frames - 1 : 0,
                             normalized(step));
  result.motion.object_poses.assign(sc.objects.size(), {});
  result.motion.object_clipped.assign(sc.objects.size(), 0);

  std::vector<std::vector<ObjectState>> states(sc.objects.size());
  for (std::size_t o = 0; o < sc.objects.size(); ++o) {
    states[o].reserve(sc.frames);
    for (uint32_t t = 0; t < sc.frames; ++t) {
      const ObjectState st = object_state(sc.objects[o], t);
      states[o].push_back(st);
      result.motion.object_poses[o].push_back(
          {st.center.x(), st.center.y(), st.yaw_rad * 180.0 / kPi});
    }
  }

  const uint32_t zs = sc.dims_z;
  for (uint32_t t = 0; t < sc.frames; ++t) {
    const Homography view = compose(step, t);
    const Homography world_from_grid = view.inverse();

    OccGrid frame = make_grid(sc.dims_x, sc.dims_y, sc.dims_z);
    const std::size_t columns =
        static_cast<std::size_t>(sc.dims_x) * sc.dims_y;

    parallel_chunks(columns, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const int64_t gx = static_cast<int64_t>(i) / sc.dims_y;
        const int64_t gy = static_cast<int64_t>(i) % sc.dims_y;
        Eigen::Vector2d world;
        if (!world_from_grid.try_apply(
                Eigen::Vector2d(static_cast<double>(gx),
                                static_cast<double>(gy)),
                world)) {
          continue;  // line at infinity cannot occur for rigid motion
        }
        const int64_t wx = std::llround(world.x());
        const int64_t wy = std::llround(world.y());
        const Eigen::Vector2d cell(static_cast<double>(wx),
                                   static_cast<double>(wy));

        uint8_t label = kFreeClass;
        int top = -1;
        for (std::size_t o = 0; o < sc.objects.size(); ++o) {
          const ObjectSpec& obj = sc.objects[o];
          const Eigen::Vector2d local = box_local(obj, states[o][t], cell);
          if (local.x() < 0.0 || local.y() < 0.0 ||
              local.x() >= static_cast<double>(obj.ext_x) ||
              local.y() >= static_cast<double>(obj.ext_y)) {
            continue;
          }
          const int64_t lx = static_cast<int64_t>(std::floor(local.x()));
          const int64_t ly = static_cast<int64_t>(std::floor(local.y()));
          label = obj.cls;
          top = static_cast<int>(obj.ext_z) - 1 +
                jitter(sc.seed, lx, ly, static_cast<int64_t>(o));
          break;
        }
        if (top < 0 && label == kFreeClass && sc.ground_class != kFreeClass) {
          label = sc.ground_class;
          top = 1 + jitter(sc.seed, wx, wy, -1);
        }
        if (label == kFreeClass) continue;
        top = std::clamp(top, 0, static_cast<int>(zs) - 1);
        uint8_t* column = frame.labels.data() + i * zs;
        for (int z = 0; z <= top; ++z) column[z] = label;
      }
    });

    result.sequence.frames.push_back(std::move(frame));

    // Clipping check: any box corner outside the visible grid this frame.
    for (std::size_t o = 0; o < sc.objects.size(); ++o) {
      const ObjectSpec& obj = sc.objects[o];
      const ObjectState& st = states[o][t];
      const double hx = 0.5 * obj.ext_x;
      const double hy = 0.5 * obj.ext_y;
      for (int corner = 0; corner < 4; ++corner) {
        const double sx = (corner & 1) ? hx : -hx;
        const double sy = (corner & 2) ? hy : -hy;
        const Eigen::Vector2d world(
            st.center.x() + st.cos_yaw * sx - st.sin_yaw * sy,
            st.center.y() + st.sin_yaw * sx + st.cos_yaw * sy);
        Eigen::Vector2d grid_pos;
        if (!view.try_apply(world, grid_pos)) continue;
        if (grid_pos.x() < -0.5 ||
            grid_pos.x() > static_cast<double>(sc.dims_x) - 0.5 ||
            grid_pos.y() < -0.5 ||
            grid_pos.y() > static_cast<double>(sc.dims_y) - 0.5) {
          result.motion.object_clipped[o] = 1;
        }
      }
    }
  }

  return result;
}

std::vector<Scenario> scenario_presets() {
  std::vector<Scenario> presets;

  {
    Scenario sc;
    sc.name = "static";
    sc.objects.push_back({4, 6, 4, 3, 20.0, 30.0, 0.0, 0.0, 0.0});
    sc.objects.push_back({15, 8, 8, 6, 40.0, 12.0, 0.0, 0.0, 0.0});
    presets.push_back(sc);
  }
  {
    Scenario sc;
    sc.name = "translating_car";
    // No ground plane: the single global motion model must latch onto
    // the car, which a dominant static ground would prevent.
    sc.ground_class = kFreeClass;
    sc.objects.push_back({4, 30, 22, 3, 10.0, 24.0, 2.0, 0.0, 0.0});
    presets.push_back(sc);
  }
  {
    Scenario sc;
    sc.name = "ego_translation";
    sc.ego.vel_x = -1.0;
    sc.ego.vel_y = 0.0;
    presets.push_back(sc);
  }
  {
    Scenario sc;
    sc.name = "ego_rotation";
    sc.ego.yaw_rate_deg = 4.0;
    presets.push_back(sc);
  }
  {
    Scenario sc;
    sc.name = "crossing_pair";
    sc.objects.push_back({4, 8, 5, 3, 8.0, 28.0, 3.0, 0.0, 0.0});
    sc.objects.push_back({10, 6, 6, 4, 30.0, 6.0, 0.0, 3.0, 0.0});
    presets.push_back(sc);
  }

  return presets;
}

Scenario find_preset(const std::string& name) {
  for (const Scenario& sc : scenario_presets()) {
    if (sc.name == name) return sc;
  }
  std::string known;
  for (const Scenario& sc : scenario_presets()) {
    if (!known.empty()) known += ", ";
    known += sc.name;
  }
  throw Error(ErrorCode::InvalidScenario,
              "unknown preset '" + name + "' (known: " + known + ")");
}

std::string motion_text(const GroundTruthMotion& motion) {
  std::ostringstream out;
  out.precision(17);
  out << "steps = " << motion.steps.size() << "\n";
  for (std::size_t i = 0; i < motion.steps.size(); ++i) {
    out << "step_" << i << " =";
    const Eigen::Matrix3d& m = motion.steps[i].m;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out << ' ' << m(r, c);
    }
    out << "\n";
  }
  out << "objects = " << motion.object_poses.size() << "\n";
  for (std::size_t o = 0; o < motion.object_poses.size(); ++o) {
    out << "object_" << o << "_clipped = "
        << static_cast<int>(motion.object_clipped[o]) << "\n";
    for (std::size_t t = 0; t < motion.object_poses[o].size(); ++t) {
      const ObjectPose& p = motion.object_poses[o][t];
      out << "object_" << o << "_frame_" << t << " = " << p.center_x << ' '
          << p.center_y << ' ' << p.yaw_deg << "\n";
    }
  }
  return out.str();
}

}  // namespace occflow
