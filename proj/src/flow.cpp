#include "occflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "occflow/binio.hpp"
#include "occflow/parallel.hpp"
#include "occflow/rng.hpp"

namespace occflow {

namespace {

// Any 3 of the 4 points (numerically) collinear disqualifies a minimal
// RANSAC sample.
bool has_collinear_triple(const Eigen::Vector2d pts[4]) {
  for (int a = 0; a < 2; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      for (int c = b + 1; c < 4; ++c) {
        const Eigen::Vector2d u = pts[b] - pts[a];
        const Eigen::Vector2d v = pts[c] - pts[a];
        if (std::abs(u.x() * v.y() - u.y() * v.x()) < 1e-6) return true;
      }
    }
  }
  return false;
}

struct Normalization {
  Eigen::Matrix3d t;
};

// Hartley normalization: centroid to origin, mean distance sqrt(2).
Normalization hartley(const std::vector<Correspondence>& corrs, bool dst_side) {
  Eigen::Vector2d centroid(0, 0);
  for (const auto& c : corrs) centroid += dst_side ? c.dst : c.src;
  centroid /= static_cast<double>(corrs.size());
  double mean_dist = 0.0;
  for (const auto& c : corrs) {
    mean_dist += ((dst_side ? c.dst : c.src) - centroid).norm();
  }
  mean_dist /= static_cast<double>(corrs.size());
  if (mean_dist < 1e-12) {
    throw Error(ErrorCode::DegenerateConfiguration,
                "all points coincide; cannot normalize");
  }
  const double s = std::sqrt(2.0) / mean_dist;
  Normalization n;
  n.t << s, 0, -s * centroid.x(), 0, s, -s * centroid.y(), 0, 0, 1;
  return n;
}

}  // namespace

void FlowParams::validate() const {
  if (block_size < 3 || block_size % 2 == 0) {
    throw Error(ErrorCode::ConfigInvalid,
                "block_size must be odd and >= 3, got " +
                    std::to_string(block_size));
  }
  if (search_radius < 1) {
    throw Error(ErrorCode::ConfigInvalid, "search_radius must be >= 1");
  }
  if (ransac_iters < 1) {
    throw Error(ErrorCode::ConfigInvalid, "ransac_iters must be >= 1");
  }
  if (!(inlier_thresh > 0.0)) {
    throw Error(ErrorCode::ConfigInvalid, "inlier_thresh must be positive");
  }
  if (min_inliers < 4) {
    throw Error(ErrorCode::ConfigInvalid, "min_inliers must be >= 4");
  }
  if (!(min_texture >= 0.0)) {
    throw Error(ErrorCode::ConfigInvalid, "min_texture must be >= 0");
  }
}

std::vector<Correspondence> match_blocks(const BevMap& b0, const BevMap& b1,
                                         const FlowParams& params) {
  params.validate();
  if (!b0.same_dims(b1)) {
    throw Error(ErrorCode::DimMismatch, "height maps differ in shape");
  }
  const int width = static_cast<int>(b0.width);
  const int height = static_cast<int>(b0.height);
  const int half = params.block_size / 2;
  const int stride = params.block_size;
  const int radius = params.search_radius;
  const int64_t penalty = static_cast<int64_t>(b0.depth);

  // Value at (x, y); out-of-bounds reads as an empty column.
  auto sample = [&](const BevMap& m, int x, int y) -> int64_t {
    if (x < 0 || y < 0 || x >= width || y >= height) return kEmptyColumn;
    return m.heights[static_cast<std::size_t>(x) * m.height +
                     static_cast<std::size_t>(y)];
  };

  std::vector<std::pair<int, int>> centers;
  for (int cy = half; cy + half < height; cy += stride) {
    for (int cx = half; cx + half < width; cx += stride) {
      centers.emplace_back(cx, cy);
    }
  }

  std::vector<Correspondence> results(centers.size());
  std::vector<uint8_t> keep(centers.size(), 0);

  parallel_chunks(centers.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto [cx, cy] = centers[i];

      double sum = 0.0, sum_sq = 0.0;
      for (int dy = -half; dy <= half; ++dy) {
        for (int dx = -half; dx <= half; ++dx) {
          const double v = static_cast<double>(sample(b0, cx + dx, cy + dy));
          sum += v;
          sum_sq += v * v;
        }
      }
      const double n = static_cast<double>(params.block_size) *
                       static_cast<double>(params.block_size);
      const double variance = sum_sq / n - (sum / n) * (sum / n);
      if (variance < params.min_texture) continue;

      int64_t best_ssd = std::numeric_limits<int64_t>::max();
      int best_dx = 0, best_dy = 0;
      for (int ody = -radius; ody <= radius; ++ody) {
        for (int odx = -radius; odx <= radius; ++odx) {
          int64_t ssd = 0;
          for (int by = -half; by <= half; ++by) {
            for (int bx = -half; bx <= half; ++bx) {
              const int64_t v0 = sample(b0, cx + bx, cy + by);
              const int64_t v1 = sample(b1, cx + odx + bx, cy + ody + by);
              const bool e0 = v0 == kEmptyColumn;
              const bool e1 = v1 == kEmptyColumn;
              if (e0 != e1) {
                ssd += penalty;
              } else if (!e0) {
                const int64_t d = v0 - v1;
                ssd += d * d;
              }
            }
            if (ssd > best_ssd) break;
          }
          if (ssd < best_ssd ||
              (ssd == best_ssd &&
               std::make_tuple(odx * odx + ody * ody, ody, odx) <
                   std::make_tuple(best_dx * best_dx + best_dy * best_dy,
                                   best_dy, best_dx))) {
            best_ssd = ssd;
            best_dx = odx;
            best_dy = ody;
          }
        }
      }
      results[i].src = Eigen::Vector2d(cx, cy);
      results[i].dst = Eigen::Vector2d(cx + best_dx, cy + best_dy);
      results[i].score = static_cast<double>(best_ssd);
      keep[i] = 1;
    }
  });

  std::vector<Correspondence> out;
  out.reserve(centers.size());
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (keep[i]) out.push_back(results[i]);
  }
  return out;
}

Homography fit_homography_dlt(const std::vector<Correspondence>& corrs) {
  if (corrs.size() < 4) {
    throw Error(ErrorCode::TooFewCorrespondences,
                "need >= 4 correspondences, got " +
                    std::to_string(corrs.size()));
  }
  const Normalization n0 = hartley(corrs, false);
  const Normalization n1 = hartley(corrs, true);

  Eigen::Matrix<double, 9, 9> ata = Eigen::Matrix<double, 9, 9>::Zero();
  for (const auto& c : corrs) {
    const Eigen::Vector3d p = n0.t * Eigen::Vector3d(c.src.x(), c.src.y(), 1.0);
    const Eigen::Vector3d q = n1.t * Eigen::Vector3d(c.dst.x(), c.dst.y(), 1.0);
    const double x = p.x(), y = p.y();
    const double u = q.x(), v = q.y();
    Eigen::Matrix<double, 1, 9> r1, r2;
    r1 << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    r2 << x, y, 1, 0, 0, 0, -u * x, -u * y, -u;
    ata += r1.transpose() * r1;
    ata += r2.transpose() * r2;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 9, 9>> solver(ata);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::DegenerateConfiguration, "eigen solve failed");
  }
  const Eigen::Matrix<double, 9, 1> h = solver.eigenvectors().col(0);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);

  Homography out;
  out.m = n1.t.inverse() * hn * n0.t;
  if (std::abs(out.m(2, 2)) < 1e-12) {
    throw Error(ErrorCode::DegenerateConfiguration,
                "homography has vanishing scale entry");
  }
  out.m /= out.m(2, 2);
  if (!out.is_invertible()) {
    throw Error(ErrorCode::DegenerateConfiguration,
                "fitted homography is singular");
  }
  return out;
}

HomographyEstimate estimate_homography(const std::vector<Correspondence>& corrs,
                                       const FlowParams& params) {
  params.validate();
  const std::size_t n = corrs.size();
  if (n < 4) {
    throw Error(ErrorCode::TooFewCorrespondences,
                "need >= 4 correspondences, got " + std::to_string(n));
  }

  auto score_model = [&](const Homography& h, std::vector<uint8_t>& mask,
                         double& total_err) -> int {
    mask.assign(n, 0);
    total_err = 0.0;
    int count = 0;
    const Homography inv = h.inverse();
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::Vector2d fwd, bwd;
      if (!h.try_apply(corrs[i].src, fwd) || !inv.try_apply(corrs[i].dst, bwd)) {
        continue;
      }
      const double err =
          0.5 * ((fwd - corrs[i].dst).norm() + (bwd - corrs[i].src).norm());
      if (err <= params.inlier_thresh) {
        mask[i] = 1;
        total_err += err;
        ++count;
      }
    }
    return count;
  };

  bool have_best = false;
  Homography best_h;
  std::vector<uint8_t> best_mask;
  int best_count = 0;
  double best_err = 0.0;

  std::vector<uint8_t> mask;
  for (int iter = 0; iter < params.ransac_iters; ++iter) {
    SplitMix64 rng = stream_for(params.seed, static_cast<uint64_t>(iter));
    std::size_t idx[4];
    for (int k = 0; k < 4; ++k) {
      for (;;) {
        const std::size_t cand = rng.next_below(n);
        bool dup = false;
        for (int j = 0; j < k; ++j) dup |= idx[j] == cand;
        if (!dup) {
          idx[k] = cand;
          break;
        }
      }
    }
    Eigen::Vector2d srcs[4], dsts[4];
    for (int k = 0; k < 4; ++k) {
      srcs[k] = corrs[idx[k]].src;
      dsts[k] = corrs[idx[k]].dst;
    }
    if (has_collinear_triple(srcs) || has_collinear_triple(dsts)) continue;

    Homography h;
    try {
      h = fit_homography_dlt(
          {corrs[idx[0]], corrs[idx[1]], corrs[idx[2]], corrs[idx[3]]});
    } catch (const Error&) {
      continue;
    }

    double total_err = 0.0;
    const int count = score_model(h, mask, total_err);
    if (!have_best || count > best_count ||
        (count == best_count && total_err < best_err)) {
      have_best = true;
      best_h = h;
      best_mask = mask;
      best_count = count;
      best_err = total_err;
    }
  }

  if (!have_best) {
    throw Error(ErrorCode::DegenerateConfiguration,
                "no usable minimal sample found");
  }

  // Refit on the consensus set, then recompute the mask with the refit.
  std::vector<Correspondence> inliers;
  inliers.reserve(static_cast<std::size_t>(best_count));
  for (std::size_t i = 0; i < n; ++i) {
    if (best_mask[i]) inliers.push_back(corrs[i]);
  }
  Homography final_h = best_h;
  if (inliers.size() >= 4) {
    try {
      final_h = fit_homography_dlt(inliers);
    } catch (const Error&) {
      final_h = best_h;
    }
  }

  HomographyEstimate est;
  est.h = normalized(final_h);
  double total_err = 0.0;
  est.inlier_count = score_model(est.h, est.inlier_mask, total_err);
  if (est.inlier_count < params.min_inliers) {
    throw Error(ErrorCode::TooFewInliers,
                std::to_string(est.inlier_count) + " inliers, need " +
                    std::to_string(params.min_inliers));
  }
  return est;
}

FlowField flow_field(const Homography& h, uint32_t width, uint32_t height) {
  if (!h.is_invertible()) {
    throw Error(ErrorCode::DegenerateConfiguration,
                "flow requires an invertible homography");
  }
  FlowField field;
  field.width = width;
  field.height = height;
  field.vectors.assign(2 * static_cast<std::size_t>(width) * height, 0.0f);
  for (uint32_t x = 0; x < width; ++x) {
    for (uint32_t y = 0; y < height; ++y) {
      Eigen::Vector2d mapped;
      if (!h.try_apply(Eigen::Vector2d(x, y), mapped)) {
        throw Error(ErrorCode::ProjectiveDivideByZero,
                    "cell (" + std::to_string(x) + "," + std::to_string(y) +
                        ") maps to the line at infinity");
      }
      const std::size_t i = field.index(x, y);
      field.vectors[i] = static_cast<float>(mapped.x() - x);
      field.vectors[i + 1] = static_cast<float>(mapped.y() - y);
    }
  }
  return field;
}

std::vector<uint8_t> encode_flow_field(const FlowField& field) {
  ByteWriter w;
  w.magic("FLOW");
  w.u32(field.width);
  w.u32(field.height);
  for (uint32_t y = 0; y < field.height; ++y) {
    for (uint32_t x = 0; x < field.width; ++x) {
      w.f32(field.dx(x, y));
      w.f32(field.dy(x, y));
    }
  }
  return w.data();
}

FlowField decode_flow_field(const std::vector<uint8_t>& bytes) {
  ByteReader r(bytes.data(), bytes.size());
  r.expect_magic("FLOW", "flow field");
  FlowField field;
  field.width = r.u32();
  field.height = r.u32();
  field.vectors.assign(2 * static_cast<std::size_t>(field.width) * field.height,
                       0.0f);
  for (uint32_t y = 0; y < field.height; ++y) {
    for (uint32_t x = 0; x < field.width; ++x) {
      const std::size_t i = field.index(x, y);
      field.vectors[i] = r.f32();
      field.vectors[i + 1] = r.f32();
      if (!std::isfinite(field.vectors[i]) ||
          !std::isfinite(field.vectors[i + 1])) {
        throw Error(ErrorCode::DegenerateConfiguration,
                    "non-finite flow vector in file");
      }
    }
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::SizeMismatch,
                std::to_string(r.remaining()) + " trailing bytes");
  }
  return field;
}

void save_flow_field(const FlowField& field, const std::string& path) {
  write_file(path, encode_flow_field(field));
}

FlowField load_flow_field(const std::string& path) {
  return decode_flow_field(read_file(path));
}

std::string correspondences_csv(const std::vector<Correspondence>& corrs) {
  std::ostringstream out;
  out.precision(17);
  out << "src_x,src_y,dst_x,dst_y,score\n";
  for (const auto& c : corrs) {
    out << c.src.x() << ',' << c.src.y() << ',' << c.dst.x() << ',' << c.dst.y()
        << ',' << c.score << '\n';
  }
  return out.str();
}

}  // namespace occflow
