#include "occflow/bev.hpp"

#include <sstream>

#include "occflow/parallel.hpp"

namespace occflow {

BevMap project_height(const OccGrid& grid) {
  BevMap map;
  map.width = grid.dims_x;
  map.height = grid.dims_y;
  map.depth = grid.dims_z;
  map.heights.assign(static_cast<std::size_t>(map.width) * map.height,
                     kEmptyColumn);
  const std::size_t columns = map.heights.size();
  parallel_chunks(columns, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const uint8_t* col = grid.labels.data() + i * grid.dims_z;
      for (int32_t z = static_cast<int32_t>(grid.dims_z) - 1; z >= 0; --z) {
        if (col[z] != 0) {
          map.heights[i] = z;
          break;
        }
      }
    }
  });
  return map;
}

BevLabelMap project_label(const OccGrid& grid) {
  const BevMap heights = project_height(grid);
  BevLabelMap map;
  map.width = grid.dims_x;
  map.height = grid.dims_y;
  map.labels.assign(heights.heights.size(), 0);
  for (std::size_t i = 0; i < heights.heights.size(); ++i) {
    const int32_t h = heights.heights[i];
    if (h != kEmptyColumn) {
      map.labels[i] = grid.labels[i * grid.dims_z + static_cast<uint32_t>(h)];
    }
  }
  return map;
}

std::vector<std::pair<uint32_t, uint8_t>> column(const OccGrid& grid,
                                                 uint32_t x, uint32_t y) {
  if (x >= grid.dims_x || y >= grid.dims_y) {
    throw Error(ErrorCode::IndexOutOfRange,
                "column (" + std::to_string(x) + "," + std::to_string(y) +
                    ") outside " + std::to_string(grid.dims_x) + "x" +
                    std::to_string(grid.dims_y));
  }
  std::vector<std::pair<uint32_t, uint8_t>> out;
  const uint8_t* col = grid.column_data(x, y);
  for (uint32_t z = 0; z < grid.dims_z; ++z) {
    if (col[z] != 0) out.emplace_back(z, col[z]);
  }
  return out;
}

std::string to_pgm(const BevMap& map) {
  std::ostringstream out;
  out << "P5\n# samples are height+1; 0 means empty column\n"
      << map.width << " " << map.height << "\n65535\n";
  // PGM raster order: rows top to bottom, so y is the row index.
  for (uint32_t y = 0; y < map.height; ++y) {
    for (uint32_t x = 0; x < map.width; ++x) {
      const uint16_t v = static_cast<uint16_t>(map.at(x, y) + 1);
      out.put(static_cast<char>(v >> 8));
      out.put(static_cast<char>(v & 0xFF));
    }
  }
  return out.str();
}

std::string to_csv(const BevLabelMap& map) {
  std::ostringstream out;
  for (uint32_t y = 0; y < map.height; ++y) {
    for (uint32_t x = 0; x < map.width; ++x) {
      if (x) out << ',';
      out << static_cast<int>(map.at(x, y));
    }
    out << '\n';
  }
  return out.str();
}

std::string to_csv(const BevMap& map) {
  std::ostringstream out;
  for (uint32_t y = 0; y < map.height; ++y) {
    for (uint32_t x = 0; x < map.width; ++x) {
      if (x) out << ',';
      out << map.at(x, y);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace occflow
