#pragma once

#include <cstddef>

#include "occflow/flow.hpp"
#include "occflow/homography.hpp"
#include "occflow/occ_grid.hpp"

namespace occflow {

// How voxel columns are carried from the source frame to a warped frame.
// backward_nn samples every target column from the inverse-mapped source
// position, so the output has no holes. forward_splat pushes occupied
// source columns to their rounded targets and backfills untouched cells
// with a backward_nn pass.
enum class WarpMode {
  backward_nn,
  forward_splat,
};

struct ForecastParams {
  int horizon = 4;
  WarpMode warp = WarpMode::backward_nn;
  FlowParams flow;

  void validate() const;
};

// Diagnostics from a forecast run, for logging and tools.
struct ForecastInfo {
  bool used_fallback = false;
  Homography model;  // per-step motion; identity when fallback engaged
  int inlier_count = 0;
  std::size_t correspondence_count = 0;
};

// Moves whole columns of `grid` by the planar map `h`.
OccGrid warp_grid(const OccGrid& grid, const Homography& h, WarpMode mode);

// Repeats the last history frame `horizon` times.
OccSequence copy_paste(const OccSequence& history, int horizon);

// Estimates per-step motion from the last two history frames, then
// predicts frame k by warping the last frame with the k-fold composition.
// Falls back to copy_paste when estimation cannot produce a model.
OccSequence forecast(const OccSequence& history, const ForecastParams& p,
                     ForecastInfo* info = nullptr);

// Variant that re-warps the previous prediction each step instead of
// composing the motion. Provided for comparison; rounding can accumulate.
OccSequence forecast_iterated(const OccSequence& history,
                              const ForecastParams& p,
                              ForecastInfo* info = nullptr);

}  // namespace occflow
