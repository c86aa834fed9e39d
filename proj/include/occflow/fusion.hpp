#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "occflow/class_table.hpp"
#include "occflow/occ_grid.hpp"

namespace occflow {

// Dense per-voxel class scores. Channel-minor layout: the C scores of a
// voxel are contiguous, voxels follow OccGrid linear order.
struct FeatureGrid {
  uint32_t dims_x = 0;
  uint32_t dims_y = 0;
  uint32_t dims_z = 0;
  uint32_t num_classes = 0;
  std::vector<float> scores;

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims_x) * dims_y * dims_z;
  }
  std::size_t index(std::size_t voxel, uint32_t c) const {
    return voxel * num_classes + c;
  }
  float at(std::size_t voxel, uint32_t c) const {
    return scores[index(voxel, c)];
  }
  bool same_shape(const FeatureGrid& o) const {
    return dims_x == o.dims_x && dims_y == o.dims_y && dims_z == o.dims_z &&
           num_classes == o.num_classes;
  }
};

// Throws unless scores are finite; in probability mode additionally
// requires non-negative entries summing to 1 within 1e-6 per voxel.
void validate_feature_grid(const FeatureGrid& f, bool probability_mode);

struct ClassWeights {
  std::vector<double> alpha;  // one weight per class, in (0, 1]
};

// Direction of the frequency-to-weight mapping.
enum class WeightOrder {
  frequent_high,  // most frequent class gets weight 1 (default)
  rare_high,      // least frequent class gets weight 1
};

class Refiner {
 public:
  virtual ~Refiner() = default;
  virtual FeatureGrid refine(const FeatureGrid& f) const = 0;
  virtual std::string name() const = 0;
};

class IdentityRefiner final : public Refiner {
 public:
  FeatureGrid refine(const FeatureGrid& f) const override { return f; }
  std::string name() const override { return "identity"; }
};

// Diagnostic refiner: per-class affine rescale of the scores.
class ClassRescaleRefiner final : public Refiner {
 public:
  ClassRescaleRefiner(std::vector<float> scale, std::vector<float> offset);
  FeatureGrid refine(const FeatureGrid& f) const override;
  std::string name() const override { return "class_rescale"; }

 private:
  std::vector<float> scale_;
  std::vector<float> offset_;
};

FeatureGrid one_hot(const OccGrid& grid, uint32_t num_classes);

ClassWeights class_weights(const OccGrid& coarse, uint32_t num_classes,
                           WeightOrder order = WeightOrder::frequent_high);

FeatureGrid gated_fuse(const FeatureGrid& a, const FeatureGrid& b, double w);

FeatureGrid apply_weights(const FeatureGrid& f, const ClassWeights& alpha);

// Applies the refiner, then takes the per-voxel argmax (ties -> smallest
// class id). Grid metadata (voxel size, origin) is left at defaults.
OccGrid refine_argmax(const FeatureGrid& f, const Refiner& r);

// End-to-end fusion of two coarse label grids: one-hot both, blend with
// gate w, scale channels by frequency weights derived from pred_b, refine,
// argmax. Output carries pred_a's voxel size and origin.
OccGrid quality_fuse(const OccGrid& pred_a, const OccGrid& pred_b, double w,
                     const Refiner& r,
                     uint32_t num_classes = kDefaultNumClasses,
                     WeightOrder order = WeightOrder::frequent_high);

// Mean cross-entropy -log p(gt) over counted voxels, probabilities clamped
// below at 1e-12. With ignore_free, voxels whose gt label is the free class
// are not counted. Zero counted voxels yields 0.
double softmax_ce(const FeatureGrid& pred, const OccGrid& gt,
                  bool ignore_free = true);

// Lovasz extension of the per-class Jaccard loss for one class; empty when
// the class is absent from gt.
std::optional<double> lovasz_class(const FeatureGrid& pred, const OccGrid& gt,
                                   uint8_t cls);

// Mean of lovasz_class over the classes of class_set present in gt.
double lovasz_softmax(const FeatureGrid& pred, const OccGrid& gt,
                      const std::vector<uint8_t>& class_set);

struct LossOptions {
  bool ignore_free = true;
  std::vector<uint8_t> class_set;  // empty means all classes
  double lambda = 1.0;
};

struct LossBreakdown {
  double ce = 0.0;
  double lovasz = 0.0;
  double combined = 0.0;
};

LossBreakdown evaluate_loss(const FeatureGrid& pred, const OccGrid& gt,
                            const LossOptions& opts);

// FEAT raster: magic, dims x/y/z, class count, f32 scores.
std::vector<uint8_t> encode_feature_grid(const FeatureGrid& f);
FeatureGrid decode_feature_grid(const std::vector<uint8_t>& bytes);
void save_feature_grid(const FeatureGrid& f, const std::string& path);
FeatureGrid load_feature_grid(const std::string& path);

}  // namespace occflow
