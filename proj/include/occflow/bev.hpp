#ifndef OCCFLOW_BEV_HPP
#define OCCFLOW_BEV_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "occflow/occ_grid.hpp"

namespace occflow {

inline constexpr int32_t kEmptyColumn = -1;

// Height map over columns: value = max occupied z index, kEmptyColumn for
// columns with no occupied voxel. z = 0 is a valid height, hence the -1
// sentinel. Storage is x-major (idx = x * height + y), matching the grid.
struct BevMap {
  uint32_t width = 0;   // dims_x
  uint32_t height = 0;  // dims_y
  uint32_t depth = 0;   // dims_z; bounds heights and prices sentinel mismatches
  std::vector<int32_t> heights;

  std::size_t index(uint32_t x, uint32_t y) const {
    return static_cast<std::size_t>(x) * height + y;
  }
  int32_t at(uint32_t x, uint32_t y) const { return heights[index(x, y)]; }
  int32_t& at(uint32_t x, uint32_t y) { return heights[index(x, y)]; }

  bool same_dims(const BevMap& o) const {
    return width == o.width && height == o.height && depth == o.depth;
  }
};

// Class id of the topmost occupied voxel per column, 0 for empty columns.
struct BevLabelMap {
  uint32_t width = 0;
  uint32_t height = 0;
  std::vector<uint8_t> labels;

  std::size_t index(uint32_t x, uint32_t y) const {
    return static_cast<std::size_t>(x) * height + y;
  }
  uint8_t at(uint32_t x, uint32_t y) const { return labels[index(x, y)]; }
};

// heights[x,y] = max { z : grid(x,y,z) != 0 }, else kEmptyColumn.
BevMap project_height(const OccGrid& grid);

// labels[x,y] = label of the topmost occupied voxel, 0 when empty.
BevLabelMap project_label(const OccGrid& grid);

// Occupied voxels of one column in ascending z. Throws IndexOutOfRange.
std::vector<std::pair<uint32_t, uint8_t>> column(const OccGrid& grid,
                                                 uint32_t x, uint32_t y);

// 16-bit PGM dump; stored sample = height + 1 so the sentinel maps to 0.
// The offset is recorded in the header comment.
std::string to_pgm(const BevMap& map);

// One CSV row per y, columns ordered by x.
std::string to_csv(const BevLabelMap& map);
std::string to_csv(const BevMap& map);

}  // namespace occflow

#endif  // OCCFLOW_BEV_HPP
