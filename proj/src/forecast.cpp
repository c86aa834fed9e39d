#include "occflow/forecast.hpp"

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "occflow/bev.hpp"
#include "occflow/class_table.hpp"
#include "occflow/parallel.hpp"

namespace occflow {

namespace {

bool column_occupied(const uint8_t* col, uint32_t depth) {
  for (uint32_t z = 0; z < depth; ++z) {
    if (col[z] != kFreeClass) return true;
  }
  return false;
}

int occupied_count(const uint8_t* col, uint32_t depth) {
  int n = 0;
  for (uint32_t z = 0; z < depth; ++z) {
    if (col[z] != kFreeClass) ++n;
  }
  return n;
}

OccGrid empty_like(const OccGrid& grid) {
  OccGrid out;
  out.dims_x = grid.dims_x;
  out.dims_y = grid.dims_y;
  out.dims_z = grid.dims_z;
  out.voxel_size_m = grid.voxel_size_m;
  out.origin_m = grid.origin_m;
  out.labels.assign(grid.labels.size(), kFreeClass);
  return out;
}

void warp_backward_into(const OccGrid& grid, const Homography& inv,
                        OccGrid& out, const std::vector<uint8_t>* skip) {
  const int64_t xs = grid.dims_x;
  const int64_t ys = grid.dims_y;
  const uint32_t zs = grid.dims_z;
  const std::size_t columns = static_cast<std::size_t>(xs * ys);
  parallel_chunks(columns, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      if (skip && (*skip)[i]) continue;
      const int64_t tx = static_cast<int64_t>(i) / ys;
      const int64_t ty = static_cast<int64_t>(i) % ys;
      Eigen::Vector2d src;
      if (!inv.try_apply(Eigen::Vector2d(static_cast<double>(tx),
                                         static_cast<double>(ty)),
                         src)) {
        throw Error(ErrorCode::ProjectiveDivideByZero,
                    "column (" + std::to_string(tx) + "," +
                        std::to_string(ty) + ") has no finite source");
      }
      const int64_t sx = std::llround(src.x());
      const int64_t sy = std::llround(src.y());
      if (sx < 0 || sy < 0 || sx >= xs || sy >= ys) continue;
      std::memcpy(out.labels.data() + i * zs,
                  grid.labels.data() + (static_cast<std::size_t>(sx) * ys +
                                        static_cast<std::size_t>(sy)) *
                                           zs,
                  zs);
    }
  });
}

}  // namespace

void ForecastParams::validate() const {
  if (horizon < 1) {
    throw Error(ErrorCode::ConfigInvalid,
                "horizon must be >= 1, got " + std::to_string(horizon));
  }
  flow.validate();
}

OccGrid warp_grid(const OccGrid& grid, const Homography& h, WarpMode mode) {
  const Homography inv = h.inverse();  // also enforces the invertible pre
  OccGrid out = empty_like(grid);

  if (mode == WarpMode::backward_nn) {
    warp_backward_into(grid, inv, out, nullptr);
    return out;
  }

  // forward_splat: push occupied columns, resolve collisions by density,
  // then backfill every untouched target column from the backward map.
  const int64_t xs = grid.dims_x;
  const int64_t ys = grid.dims_y;
  const uint32_t zs = grid.dims_z;
  std::vector<int> winner_density(static_cast<std::size_t>(xs * ys), -1);
  std::vector<uint8_t> written(static_cast<std::size_t>(xs * ys), 0);

  for (int64_t x = 0; x < xs; ++x) {
    for (int64_t y = 0; y < ys; ++y) {
      const std::size_t src_idx = static_cast<std::size_t>(x * ys + y);
      const uint8_t* col = grid.labels.data() + src_idx * zs;
      if (!column_occupied(col, zs)) continue;
      Eigen::Vector2d dst;
      if (!h.try_apply(Eigen::Vector2d(static_cast<double>(x),
                                       static_cast<double>(y)),
                       dst)) {
        throw Error(ErrorCode::ProjectiveDivideByZero,
                    "column (" + std::to_string(x) + "," + std::to_string(y) +
                        ") has no finite target");
      }
      const int64_t tx = std::llround(dst.x());
      const int64_t ty = std::llround(dst.y());
      if (tx < 0 || ty < 0 || tx >= xs || ty >= ys) continue;
      const std::size_t dst_idx = static_cast<std::size_t>(tx * ys + ty);
      const int density = occupied_count(col, zs);
      // Ascending (x, y) source order makes "strictly denser" keep the
      // smallest source index on ties.
      if (density > winner_density[dst_idx]) {
        winner_density[dst_idx] = density;
        written[dst_idx] = 1;
        std::memcpy(out.labels.data() + dst_idx * zs, col, zs);
      }
    }
  }

  warp_backward_into(grid, inv, out, &written);
  return out;
}

OccSequence copy_paste(const OccSequence& history, int horizon) {
  if (horizon < 1) {
    throw Error(ErrorCode::ConfigInvalid,
                "horizon must be >= 1, got " + std::to_string(horizon));
  }
  if (history.frames.empty()) {
    throw Error(ErrorCode::HistoryTooShort, "history is empty");
  }
  OccSequence out;
  out.frame_period_s = history.frame_period_s;
  out.frames.assign(static_cast<std::size_t>(horizon), history.frames.back());
  return out;
}

namespace {

// Shared front half of both forecast variants: estimate per-step motion
// from the last two history frames, or report that fallback is needed.
bool estimate_step_motion(const OccSequence& history, const ForecastParams& p,
                          Homography& model, ForecastInfo* info) {
  validate_sequence(history);
  if (history.frames.size() < 2) {
    throw Error(ErrorCode::HistoryTooShort,
                "need >= 2 history frames, got " +
                    std::to_string(history.frames.size()));
  }
  const OccGrid& prev = history.frames[history.frames.size() - 2];
  const OccGrid& last = history.frames.back();
  const BevMap b0 = project_height(prev);
  const BevMap b1 = project_height(last);
  try {
    const std::vector<Correspondence> corrs = match_blocks(b0, b1, p.flow);
    if (info) info->correspondence_count = corrs.size();
    const HomographyEstimate est = estimate_homography(corrs, p.flow);
    model = est.h;
    if (info) {
      info->model = est.h;
      info->inlier_count = est.inlier_count;
    }
    return true;
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::TooFewCorrespondences:
      case ErrorCode::TooFewInliers:
      case ErrorCode::DegenerateConfiguration:
        if (info) info->used_fallback = true;
        return false;
      default:
        throw;
    }
  }
}

}  // namespace

OccSequence forecast(const OccSequence& history, const ForecastParams& p,
                     ForecastInfo* info) {
  p.validate();
  if (info) *info = ForecastInfo{};
  Homography model;
  if (!estimate_step_motion(history, p, model, info)) {
    return copy_paste(history, p.horizon);
  }
  OccSequence out;
  out.frame_period_s = history.frame_period_s;
  out.frames.reserve(static_cast<std::size_t>(p.horizon));
  const OccGrid& last = history.frames.back();
  for (int k = 1; k <= p.horizon; ++k) {
    out.frames.push_back(warp_grid(last, compose(model, k), p.warp));
  }
  return out;
}

OccSequence forecast_iterated(const OccSequence& history,
                              const ForecastParams& p, ForecastInfo* info) {
  p.validate();
  if (info) *info = ForecastInfo{};
  Homography model;
  if (!estimate_step_motion(history, p, model, info)) {
    return copy_paste(history, p.horizon);
  }
  OccSequence out;
  out.frame_period_s = history.frame_period_s;
  out.frames.reserve(static_cast<std::size_t>(p.horizon));
  const OccGrid* current = &history.frames.back();
  for (int k = 1; k <= p.horizon; ++k) {
    out.frames.push_back(warp_grid(*current, model, p.warp));
    current = &out.frames.back();
  }
  return out;
}

}  // namespace occflow
