#ifndef OCCFLOW_OCC_GRID_HPP
#define OCCFLOW_OCC_GRID_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "occflow/class_table.hpp"
#include "occflow/errors.hpp"

namespace occflow {

// Dense semantic occupancy grid. One uint8 class id per voxel, 0 = free.
// Linear layout is z-fastest so a vertical column is contiguous:
//   index(x, y, z) = ((x * dims_y) + y) * dims_z + z
// Treated as immutable once validated; safe to share across workers.
struct OccGrid {
  uint32_t dims_x = 0;
  uint32_t dims_y = 0;
  uint32_t dims_z = 0;
  float voxel_size_m = 0.4f;
  std::array<double, 3> origin_m = {0.0, 0.0, 0.0};
  std::vector<uint8_t> labels;

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims_x) * dims_y * dims_z;
  }

  std::size_t linear_index(uint32_t x, uint32_t y, uint32_t z) const {
    return (static_cast<std::size_t>(x) * dims_y + y) * dims_z + z;
  }

  uint8_t at(uint32_t x, uint32_t y, uint32_t z) const {
    return labels[linear_index(x, y, z)];
  }

  uint8_t& at(uint32_t x, uint32_t y, uint32_t z) {
    return labels[linear_index(x, y, z)];
  }

  // First byte of column (x, y); spans dims_z consecutive labels.
  const uint8_t* column_data(uint32_t x, uint32_t y) const {
    return labels.data() + linear_index(x, y, 0);
  }
  uint8_t* column_data(uint32_t x, uint32_t y) {
    return labels.data() + linear_index(x, y, 0);
  }

  bool same_dims(const OccGrid& other) const {
    return dims_x == other.dims_x && dims_y == other.dims_y &&
           dims_z == other.dims_z;
  }

  bool operator==(const OccGrid& other) const = default;
};

// All-free grid of the given shape. Throws DimsOverflow when the voxel
// count exceeds 2^32 and InvalidScenario on zero dims.
OccGrid make_grid(uint32_t dims_x, uint32_t dims_y, uint32_t dims_z,
                  float voxel_size_m = 0.4f);

// Full invariant check: positive dims, product below 2^32, label buffer
// length, every label < num_classes. Throws the matching typed error.
void validate_grid(const OccGrid& grid, int num_classes = kDefaultNumClasses);

// Ordered frames sharing identical dims.
struct OccSequence {
  std::vector<OccGrid> frames;
  float frame_period_s = 0.5f;

  std::size_t size() const { return frames.size(); }
  const OccGrid& back() const { return frames.back(); }

  bool operator==(const OccSequence& other) const = default;
};

// Checks length >= 1 and dimension-identical frames (FrameDimMismatch).
void validate_sequence(const OccSequence& seq,
                       int num_classes = kDefaultNumClasses);

}  // namespace occflow

#endif  // OCCFLOW_OCC_GRID_HPP
