#include "occflow/occ_grid.hpp"

#include <string>

namespace occflow {

OccGrid make_grid(uint32_t dims_x, uint32_t dims_y, uint32_t dims_z,
                  float voxel_size_m) {
  if (dims_x == 0 || dims_y == 0 || dims_z == 0) {
    throw Error(ErrorCode::InvalidScenario, "grid dims must be positive");
  }
  const uint64_t count =
      static_cast<uint64_t>(dims_x) * dims_y * dims_z;
  if (count > (1ULL << 32)) {
    throw Error(ErrorCode::DimsOverflow,
                "dims product " + std::to_string(count) + " exceeds 2^32");
  }
  OccGrid g;
  g.dims_x = dims_x;
  g.dims_y = dims_y;
  g.dims_z = dims_z;
  g.voxel_size_m = voxel_size_m;
  g.labels.assign(static_cast<std::size_t>(count), 0);
  return g;
}

void validate_grid(const OccGrid& grid, int num_classes) {
  if (grid.dims_x == 0 || grid.dims_y == 0 || grid.dims_z == 0) {
    throw Error(ErrorCode::InvalidScenario, "grid dims must be positive");
  }
  const uint64_t count =
      static_cast<uint64_t>(grid.dims_x) * grid.dims_y * grid.dims_z;
  if (count > (1ULL << 32)) {
    throw Error(ErrorCode::DimsOverflow,
                "dims product " + std::to_string(count) + " exceeds 2^32");
  }
  if (grid.labels.size() != count) {
    throw Error(ErrorCode::SizeMismatch,
                "label buffer holds " + std::to_string(grid.labels.size()) +
                    " voxels, dims demand " + std::to_string(count));
  }
  if (grid.voxel_size_m <= 0.0f) {
    throw Error(ErrorCode::InvalidScenario, "voxel size must be positive");
  }
  for (std::size_t i = 0; i < grid.labels.size(); ++i) {
    if (grid.labels[i] >= num_classes) {
      const uint32_t z = static_cast<uint32_t>(i % grid.dims_z);
      const uint32_t y = static_cast<uint32_t>((i / grid.dims_z) % grid.dims_y);
      const uint32_t x = static_cast<uint32_t>(i / grid.dims_z / grid.dims_y);
      throw Error(ErrorCode::LabelOutOfRange,
                  "label " + std::to_string(grid.labels[i]) + " at (" +
                      std::to_string(x) + "," + std::to_string(y) + "," +
                      std::to_string(z) + ") with num_classes " +
                      std::to_string(num_classes));
    }
  }
}

void validate_sequence(const OccSequence& seq, int num_classes) {
  if (seq.frames.empty()) {
    throw Error(ErrorCode::EmptySequence, "sequence has no frames");
  }
  if (seq.frame_period_s <= 0.0f) {
    throw Error(ErrorCode::InvalidScenario, "frame period must be positive");
  }
  const OccGrid& first = seq.frames.front();
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const OccGrid& f = seq.frames[i];
    if (!f.same_dims(first)) {
      throw Error(ErrorCode::FrameDimMismatch,
                  "frame " + std::to_string(i) + " dims differ from frame 0");
    }
    validate_grid(f, num_classes);
  }
}

}  // namespace occflow
