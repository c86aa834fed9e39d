#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "occflow/class_table.hpp"
#include "occflow/occ_grid.hpp"

namespace occflow {

// Square tally of (gt class, predicted class) voxel counts.
struct ConfusionMatrix {
  uint32_t num_classes = 0;
  std::vector<uint64_t> counts;  // row = gt, column = prediction

  uint64_t& at(uint32_t gt, uint32_t pred) {
    return counts[static_cast<std::size_t>(gt) * num_classes + pred];
  }
  uint64_t at(uint32_t gt, uint32_t pred) const {
    return counts[static_cast<std::size_t>(gt) * num_classes + pred];
  }
  uint64_t total() const;
  uint64_t row_sum(uint32_t gt) const;
  uint64_t col_sum(uint32_t pred) const;
};

struct MetricReport {
  double iou_occupancy = 0.0;
  double miou = 0.0;
  std::vector<double> per_class_iou;      // 0.0 placeholder when not evaluated
  std::vector<uint8_t> class_evaluated;   // 1 when the class entered the mean
  std::vector<uint8_t> evaluated_classes; // ids, ascending
};

ConfusionMatrix confusion(const OccGrid& pred, const OccGrid& gt,
                          uint32_t num_classes);

// Binary occupied-vs-free IoU; 1.0 when both grids are entirely free.
double iou_occupancy(const OccGrid& pred, const OccGrid& gt);

// Per-class IoU = TP/(TP+FP+FN) over the classes of class_set; classes
// absent from both grids are flagged and left out of the mean.
MetricReport miou(const OccGrid& pred, const OccGrid& gt,
                  const std::vector<uint8_t>& class_set,
                  uint32_t num_classes = kDefaultNumClasses);

// Same metrics computed on the BEV projections: occupancy over non-empty
// column masks, per-class IoU over top-label maps.
MetricReport bev_metrics(const OccGrid& pred, const OccGrid& gt,
                         const std::vector<uint8_t>& class_set,
                         uint32_t num_classes = kDefaultNumClasses);

// All non-free class ids below num_classes.
std::vector<uint8_t> default_class_set(uint32_t num_classes);

struct HorizonReport {
  int horizon = 0;  // 1-based frame index into the future
  MetricReport space_3d;
  MetricReport space_bev;
};

std::vector<HorizonReport> evaluate_horizons(
    const OccSequence& pred, const OccSequence& gt,
    const std::vector<uint8_t>& class_set,
    uint32_t num_classes = kDefaultNumClasses);

// CSV table: horizon,space,iou,miou,class_0..class_{C-1}; class cells are
// blank when the class did not enter the mean.
std::string metrics_csv(const std::vector<HorizonReport>& reports,
                        uint32_t num_classes);

std::string metrics_json(const std::vector<HorizonReport>& reports,
                         uint32_t num_classes);

}  // namespace occflow
