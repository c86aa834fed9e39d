#ifndef OCCFLOW_OCC_IO_HPP
#define OCCFLOW_OCC_IO_HPP

#include <string>
#include <vector>

#include "occflow/occ_grid.hpp"

namespace occflow {

// OCCV single-grid format, little-endian, 24-byte header:
//   "OCCV"  u16 version=1  u8 label_bits=8  u8 reserved=0
//   u32 dims_x  u32 dims_y  u32 dims_z  f32 voxel_size_m
// followed by dims_x*dims_y*dims_z label bytes in ((x*Y)+y)*Z+z order.
// Encoding is deterministic: the same grid always yields the same bytes.
std::vector<uint8_t> encode_grid(const OccGrid& grid);
OccGrid decode_grid(const std::vector<uint8_t>& bytes,
                    int num_classes = kDefaultNumClasses);

void save_grid(const OccGrid& grid, const std::string& path);
OccGrid load_grid(const std::string& path,
                  int num_classes = kDefaultNumClasses);

// OCCS sequence container:
//   "OCCS"  u16 version=1  u16 reserved=0  u32 frame_count
//   f32 frame_period_s, then frame_count OCCV blocks.
std::vector<uint8_t> encode_sequence(const OccSequence& seq);
OccSequence decode_sequence(const std::vector<uint8_t>& bytes,
                            int num_classes = kDefaultNumClasses);

void save_sequence(const OccSequence& seq, const std::string& path);

// Accepts either an OCCS container file or a directory of .occv frames
// (lexicographic filename order).
OccSequence load_sequence(const std::string& dir_or_container,
                          int num_classes = kDefaultNumClasses);

// Raw voxel dump: exactly dims_x*dims_y*dims_z label bytes in OCCV axis
// order, no header.
OccGrid import_raw(const std::string& path, uint32_t dims_x, uint32_t dims_y,
                   uint32_t dims_z, int num_classes = kDefaultNumClasses);

// Key/value sidecar ("key = value" lines) carrying what the binary format
// does not: origin and class names.
void save_sidecar(const OccGrid& grid, const ClassTable& classes,
                  const std::string& path);
void load_sidecar(const std::string& path, OccGrid& grid,
                  ClassTable& classes);

}  // namespace occflow

#endif  // OCCFLOW_OCC_IO_HPP
