#include "occflow/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "occflow/binio.hpp"
#include "occflow/parallel.hpp"

namespace occflow {

namespace {

void check_same_grid_shape(const FeatureGrid& f, const OccGrid& g) {
  if (f.dims_x != g.dims_x || f.dims_y != g.dims_y || f.dims_z != g.dims_z) {
    throw Error(ErrorCode::DimMismatch,
                "feature grid and label grid dims differ");
  }
}

}  // namespace

void validate_feature_grid(const FeatureGrid& f, bool probability_mode) {
  const std::size_t expect = f.voxel_count() * f.num_classes;
  if (f.num_classes == 0) {
    throw Error(ErrorCode::InvalidFeatureGrid, "feature grid has no classes");
  }
  if (f.scores.size() != expect) {
    throw Error(ErrorCode::SizeMismatch,
                "score buffer holds " + std::to_string(f.scores.size()) +
                    " values, dims require " + std::to_string(expect));
  }
  for (const float s : f.scores) {
    if (!std::isfinite(s)) {
      throw Error(ErrorCode::InvalidFeatureGrid, "non-finite score");
    }
  }
  if (!probability_mode) return;
  const std::size_t voxels = f.voxel_count();
  for (std::size_t v = 0; v < voxels; ++v) {
    double sum = 0.0;
    for (uint32_t c = 0; c < f.num_classes; ++c) {
      const float s = f.at(v, c);
      if (s < 0.0f) {
        throw Error(ErrorCode::InvalidFeatureGrid,
                    "negative probability at voxel " + std::to_string(v));
      }
      sum += s;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw Error(ErrorCode::InvalidFeatureGrid,
                  "probabilities at voxel " + std::to_string(v) +
                      " sum to " + std::to_string(sum));
    }
  }
}

ClassRescaleRefiner::ClassRescaleRefiner(std::vector<float> scale,
                                         std::vector<float> offset)
    : scale_(std::move(scale)), offset_(std::move(offset)) {
  if (scale_.size() != offset_.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "scale and offset vectors differ in length");
  }
}

FeatureGrid ClassRescaleRefiner::refine(const FeatureGrid& f) const {
  if (scale_.size() != f.num_classes) {
    throw Error(ErrorCode::LengthMismatch,
                "refiner built for " + std::to_string(scale_.size()) +
                    " classes, grid has " + std::to_string(f.num_classes));
  }
  FeatureGrid out = f;
  const std::size_t voxels = f.voxel_count();
  parallel_chunks(voxels, [&](std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      for (uint32_t c = 0; c < f.num_classes; ++c) {
        out.scores[out.index(v, c)] = scale_[c] * f.at(v, c) + offset_[c];
      }
    }
  });
  return out;
}

FeatureGrid one_hot(const OccGrid& grid, uint32_t num_classes) {
  if (num_classes == 0) {
    throw Error(ErrorCode::InvalidFeatureGrid, "num_classes must be positive");
  }
  FeatureGrid f;
  f.dims_x = grid.dims_x;
  f.dims_y = grid.dims_y;
  f.dims_z = grid.dims_z;
  f.num_classes = num_classes;
  f.scores.assign(f.voxel_count() * num_classes, 0.0f);
  const std::size_t voxels = f.voxel_count();
  parallel_chunks(voxels, [&](std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      const uint8_t label = grid.labels[v];
      if (label >= num_classes) {
        throw Error(ErrorCode::LabelOutOfRange,
                    "label " + std::to_string(label) + " >= num_classes " +
                        std::to_string(num_classes));
      }
      f.scores[f.index(v, label)] = 1.0f;
    }
  });
  return f;
}

ClassWeights class_weights(const OccGrid& coarse, uint32_t num_classes,
                           WeightOrder order) {
  if (num_classes == 0) {
    throw Error(ErrorCode::InvalidFeatureGrid, "num_classes must be positive");
  }
  std::vector<uint64_t> counts(num_classes, 0);
  for (const uint8_t label : coarse.labels) {
    if (label >= num_classes) {
      throw Error(ErrorCode::LabelOutOfRange,
                  "label " + std::to_string(label) + " >= num_classes " +
                      std::to_string(num_classes));
    }
    ++counts[label];
  }
  std::vector<uint32_t> ids(num_classes);
  std::iota(ids.begin(), ids.end(), 0u);
  std::sort(ids.begin(), ids.end(), [&](uint32_t a, uint32_t b) {
    if (counts[a] != counts[b]) return counts[a] < counts[b];
    return a < b;
  });
  ClassWeights w;
  w.alpha.assign(num_classes, 0.0);
  for (uint32_t rank = 0; rank < num_classes; ++rank) {
    const uint32_t cls = ids[rank];
    const uint32_t slot =
        order == WeightOrder::frequent_high ? rank + 1 : num_classes - rank;
    w.alpha[cls] = static_cast<double>(slot) / static_cast<double>(num_classes);
  }
  return w;
}

FeatureGrid gated_fuse(const FeatureGrid& a, const FeatureGrid& b, double w) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::DimMismatch, "fusion inputs differ in shape");
  }
  if (w < 0.0 || w > 1.0) {
    throw Error(ErrorCode::ConfigInvalid,
                "gate weight must lie in [0,1], got " + std::to_string(w));
  }
  FeatureGrid out = a;
  const float wf = static_cast<float>(w);
  const float one_minus = 1.0f - wf;
  const std::size_t n = a.scores.size();
  parallel_chunks(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out.scores[i] = one_minus * a.scores[i] + wf * b.scores[i];
    }
  });
  return out;
}

FeatureGrid apply_weights(const FeatureGrid& f, const ClassWeights& alpha) {
  if (alpha.alpha.size() != f.num_classes) {
    throw Error(ErrorCode::DimMismatch,
                "weight vector length " + std::to_string(alpha.alpha.size()) +
                    " != class count " + std::to_string(f.num_classes));
  }
  std::vector<float> alpha_f(f.num_classes);
  for (uint32_t c = 0; c < f.num_classes; ++c) {
    alpha_f[c] = static_cast<float>(alpha.alpha[c]);
  }
  FeatureGrid out = f;
  const std::size_t voxels = f.voxel_count();
  parallel_chunks(voxels, [&](std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      for (uint32_t c = 0; c < f.num_classes; ++c) {
        out.scores[out.index(v, c)] = alpha_f[c] * f.at(v, c);
      }
    }
  });
  return out;
}

OccGrid refine_argmax(const FeatureGrid& f, const Refiner& r) {
  const FeatureGrid refined = r.refine(f);
  if (!refined.same_shape(f)) {
    throw Error(ErrorCode::DimMismatch,
                "refiner '" + r.name() + "' changed the grid shape");
  }
  if (f.num_classes == 0 || f.num_classes > 256) {
    throw Error(ErrorCode::InvalidFeatureGrid,
                "argmax needs 1..256 classes, got " +
                    std::to_string(f.num_classes));
  }
  OccGrid out;
  out.dims_x = f.dims_x;
  out.dims_y = f.dims_y;
  out.dims_z = f.dims_z;
  out.labels.assign(f.voxel_count(), 0);
  const std::size_t voxels = f.voxel_count();
  parallel_chunks(voxels, [&](std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      uint32_t best = 0;
      float best_score = refined.at(v, 0);
      for (uint32_t c = 1; c < f.num_classes; ++c) {
        const float s = refined.at(v, c);
        if (s > best_score) {
          best_score = s;
          best = c;
        }
      }
      out.labels[v] = static_cast<uint8_t>(best);
    }
  });
  return out;
}

OccGrid quality_fuse(const OccGrid& pred_a, const OccGrid& pred_b, double w,
                     const Refiner& r, uint32_t num_classes,
                     WeightOrder order) {
  if (!pred_a.same_dims(pred_b)) {
    throw Error(ErrorCode::DimMismatch, "fusion inputs differ in dims");
  }
  const FeatureGrid fa = one_hot(pred_a, num_classes);
  const FeatureGrid fb = one_hot(pred_b, num_classes);
  const FeatureGrid blended = gated_fuse(fa, fb, w);
  const ClassWeights alpha = class_weights(pred_b, num_classes, order);
  const FeatureGrid weighted = apply_weights(blended, alpha);
  OccGrid out = refine_argmax(weighted, r);
  out.voxel_size_m = pred_a.voxel_size_m;
  out.origin_m = pred_a.origin_m;
  return out;
}

double softmax_ce(const FeatureGrid& pred, const OccGrid& gt,
                  bool ignore_free) {
  check_same_grid_shape(pred, gt);
  validate_feature_grid(pred, true);
  const std::size_t voxels = pred.voxel_count();
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t v = 0; v < voxels; ++v) {
    const uint8_t label = gt.labels[v];
    if (ignore_free && label == kFreeClass) continue;
    if (label >= pred.num_classes) {
      throw Error(ErrorCode::LabelOutOfRange,
                  "gt label " + std::to_string(label) + " >= class count " +
                      std::to_string(pred.num_classes));
    }
    const double p =
        std::max(static_cast<double>(pred.at(v, label)), 1e-12);
    sum += -std::log(p);
    ++counted;
  }
  return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

std::optional<double> lovasz_class(const FeatureGrid& pred, const OccGrid& gt,
                                   uint8_t cls) {
  check_same_grid_shape(pred, gt);
  if (cls >= pred.num_classes) {
    throw Error(ErrorCode::LabelOutOfRange,
                "class " + std::to_string(cls) + " >= class count " +
                    std::to_string(pred.num_classes));
  }
  const std::size_t voxels = pred.voxel_count();
  std::vector<double> errors(voxels);
  std::vector<uint8_t> is_gt(voxels);
  uint64_t gt_total = 0;
  for (std::size_t v = 0; v < voxels; ++v) {
    const bool hit = gt.labels[v] == cls;
    is_gt[v] = hit ? 1 : 0;
    gt_total += hit ? 1 : 0;
    const double p = static_cast<double>(pred.at(v, cls));
    errors[v] = hit ? 1.0 - p : p;
  }
  if (gt_total == 0) return std::nullopt;

  std::vector<std::size_t> order(voxels);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return errors[a] > errors[b];
                   });

  // Gradient of the Jaccard-loss extension along the sorted errors.
  double loss = 0.0;
  uint64_t inter = gt_total;
  uint64_t uni = gt_total;
  double prev_jaccard = 0.0;
  for (std::size_t k = 0; k < voxels; ++k) {
    const std::size_t v = order[k];
    if (is_gt[v]) {
      --inter;
    } else {
      ++uni;
    }
    const double jaccard =
        1.0 - static_cast<double>(inter) / static_cast<double>(uni);
    loss += errors[v] * (jaccard - prev_jaccard);
    prev_jaccard = jaccard;
  }
  return loss;
}

double lovasz_softmax(const FeatureGrid& pred, const OccGrid& gt,
                      const std::vector<uint8_t>& class_set) {
  check_same_grid_shape(pred, gt);
  validate_feature_grid(pred, true);
  if (class_set.empty()) {
    throw Error(ErrorCode::EmptyClassSet, "class set must not be empty");
  }
  double sum = 0.0;
  std::size_t present = 0;
  for (const uint8_t cls : class_set) {
    const std::optional<double> value = lovasz_class(pred, gt, cls);
    if (value) {
      sum += *value;
      ++present;
    }
  }
  return present == 0 ? 0.0 : sum / static_cast<double>(present);
}

LossBreakdown evaluate_loss(const FeatureGrid& pred, const OccGrid& gt,
                            const LossOptions& opts) {
  std::vector<uint8_t> class_set = opts.class_set;
  if (class_set.empty()) {
    const uint32_t limit = std::min<uint32_t>(pred.num_classes, 256);
    class_set.reserve(limit);
    for (uint32_t c = 0; c < limit; ++c) {
      class_set.push_back(static_cast<uint8_t>(c));
    }
  }
  LossBreakdown out;
  out.ce = softmax_ce(pred, gt, opts.ignore_free);
  out.lovasz = lovasz_softmax(pred, gt, class_set);
  out.combined = out.ce + opts.lambda * out.lovasz;
  return out;
}

std::vector<uint8_t> encode_feature_grid(const FeatureGrid& f) {
  validate_feature_grid(f, false);
  ByteWriter w;
  w.magic("FEAT");
  w.u32(f.dims_x);
  w.u32(f.dims_y);
  w.u32(f.dims_z);
  w.u32(f.num_classes);
  for (const float s : f.scores) w.f32(s);
  return w.data();
}

FeatureGrid decode_feature_grid(const std::vector<uint8_t>& bytes) {
  ByteReader r(bytes.data(), bytes.size());
  r.expect_magic("FEAT", "feature grid");
  FeatureGrid f;
  f.dims_x = r.u32();
  f.dims_y = r.u32();
  f.dims_z = r.u32();
  f.num_classes = r.u32();
  const uint64_t total = static_cast<uint64_t>(f.dims_x) * f.dims_y *
                         f.dims_z * f.num_classes;
  if (total > (uint64_t{1} << 32)) {
    throw Error(ErrorCode::DimsOverflow, "feature grid too large");
  }
  f.scores.resize(static_cast<std::size_t>(total));
  for (auto& s : f.scores) s = r.f32();
  if (r.remaining() != 0) {
    throw Error(ErrorCode::SizeMismatch,
                std::to_string(r.remaining()) + " trailing bytes");
  }
  validate_feature_grid(f, false);
  return f;
}

void save_feature_grid(const FeatureGrid& f, const std::string& path) {
  write_file(path, encode_feature_grid(f));
}

FeatureGrid load_feature_grid(const std::string& path) {
  return decode_feature_grid(read_file(path));
}

}  // namespace occflow
