#ifndef OCCFLOW_FLOW_HPP
#define OCCFLOW_FLOW_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "occflow/bev.hpp"
#include "occflow/homography.hpp"

namespace occflow {

// Block matching and robust fitting knobs. Defaults suit cell-unit BEV
// height maps; all randomness flows from the seed.
struct FlowParams {
  int block_size = 9;        // odd, >= 3
  int search_radius = 12;    // cells
  double min_texture = 0.5;  // height variance gate per block
  int ransac_iters = 1000;
  double inlier_thresh = 1.0;  // symmetric transfer distance, cells
  int min_inliers = 12;
  uint64_t seed = 42;

  void validate() const;
};

// One block-center match between two height maps, in cell coordinates.
struct Correspondence {
  Eigen::Vector2d src;
  Eigen::Vector2d dst;
  double score = 0.0;  // SSD of the winning offset
};

// Dense per-cell displacement field (dx, dy), x-major like BevMap.
struct FlowField {
  uint32_t width = 0;
  uint32_t height = 0;
  std::vector<float> vectors;  // 2 floats per cell

  std::size_t index(uint32_t x, uint32_t y) const {
    return 2 * (static_cast<std::size_t>(x) * height + y);
  }
  float dx(uint32_t x, uint32_t y) const { return vectors[index(x, y)]; }
  float dy(uint32_t x, uint32_t y) const { return vectors[index(x, y) + 1]; }
};

// Exhaustive SSD block matching on a regular lattice (stride = block
// size). Blocks whose height variance falls below min_texture are
// skipped. Cells where exactly one side is empty (or out of bounds)
// add a fixed penalty of depth per cell; agreeing empty cells cost
// nothing. Ties resolve to the smallest offset magnitude, then
// lexicographic (dy, dx). Returns an empty list when nothing passes the
// texture gate. Throws DimMismatch.
std::vector<Correspondence> match_blocks(const BevMap& b0, const BevMap& b1,
                                         const FlowParams& params);

// Normalized DLT on all given correspondences: Hartley-normalize both
// point sets, solve the homogeneous system via the eigenvector of the
// smallest eigenvalue of A^T A, denormalize, scale so m(2,2) = 1.
// Throws TooFewCorrespondences (< 4) and DegenerateConfiguration.
Homography fit_homography_dlt(const std::vector<Correspondence>& corrs);

struct HomographyEstimate {
  Homography h;
  std::vector<uint8_t> inlier_mask;  // parallel to the input list
  int inlier_count = 0;
};

// Seeded RANSAC over 4-point minimal samples, each solved by normalized
// DLT; the best hypothesis is refit on its inliers and the final mask is
// recomputed with the refit model. Throws TooFewCorrespondences,
// DegenerateConfiguration (no usable minimal sample), and TooFewInliers;
// on any of those the caller should fall back to the identity flow.
HomographyEstimate estimate_homography(const std::vector<Correspondence>& corrs,
                                       const FlowParams& params);

// flow(p) = pi(M [x y 1]^T) - (x, y) for every cell center. Throws
// ProjectiveDivideByZero when any cell maps to the line at infinity.
FlowField flow_field(const Homography& h, uint32_t width, uint32_t height);

// Binary raster: "FLOW", u32 width, u32 height, then 2*w*h f32 LE values
// row-major by y, (dx, dy) per cell.
std::vector<uint8_t> encode_flow_field(const FlowField& field);
FlowField decode_flow_field(const std::vector<uint8_t>& bytes);
void save_flow_field(const FlowField& field, const std::string& path);
FlowField load_flow_field(const std::string& path);

// CSV dump of correspondences: src_x,src_y,dst_x,dst_y,score.
std::string correspondences_csv(const std::vector<Correspondence>& corrs);

}  // namespace occflow

#endif  // OCCFLOW_FLOW_HPP
