#include "occflow/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <string>

#include "json.hpp"

#include "occflow/bev.hpp"
#include "occflow/parallel.hpp"

namespace occflow {

uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), uint64_t{0});
}

uint64_t ConfusionMatrix::row_sum(uint32_t gt) const {
  uint64_t sum = 0;
  for (uint32_t p = 0; p < num_classes; ++p) sum += at(gt, p);
  return sum;
}

uint64_t ConfusionMatrix::col_sum(uint32_t pred) const {
  uint64_t sum = 0;
  for (uint32_t g = 0; g < num_classes; ++g) sum += at(g, pred);
  return sum;
}

ConfusionMatrix confusion(const OccGrid& pred, const OccGrid& gt,
                          uint32_t num_classes) {
  if (!pred.same_dims(gt)) {
    throw Error(ErrorCode::DimMismatch, "prediction and gt dims differ");
  }
  if (num_classes == 0) {
    throw Error(ErrorCode::EmptyClassSet, "num_classes must be positive");
  }
  const std::size_t n = gt.labels.size();
  const std::size_t matrix_size =
      static_cast<std::size_t>(num_classes) * num_classes;

  std::vector<std::vector<uint64_t>> locals(
      std::max<std::size_t>(1, plan_chunks(n)),
      std::vector<uint64_t>(matrix_size, 0));

  parallel_chunks_indexed(
      n, [&](std::size_t w, std::size_t begin, std::size_t end) {
        auto& local = locals[w];
        for (std::size_t i = begin; i < end; ++i) {
          const uint8_t g = gt.labels[i];
          const uint8_t p = pred.labels[i];
          if (g >= num_classes || p >= num_classes) {
            throw Error(ErrorCode::LabelOutOfRange,
                        "label exceeds class count " +
                            std::to_string(num_classes));
          }
          ++local[static_cast<std::size_t>(g) * num_classes + p];
        }
      });

  ConfusionMatrix m;
  m.num_classes = num_classes;
  m.counts.assign(matrix_size, 0);
  for (const auto& local : locals) {
    for (std::size_t i = 0; i < matrix_size; ++i) m.counts[i] += local[i];
  }
  return m;
}

double iou_occupancy(const OccGrid& pred, const OccGrid& gt) {
  if (!pred.same_dims(gt)) {
    throw Error(ErrorCode::DimMismatch, "prediction and gt dims differ");
  }
  uint64_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    const bool p = pred.labels[i] != kFreeClass;
    const bool g = gt.labels[i] != kFreeClass;
    inter += (p && g) ? 1 : 0;
    uni += (p || g) ? 1 : 0;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

MetricReport report_from_confusion(const ConfusionMatrix& m,
                                   double occupancy_iou,
                                   const std::vector<uint8_t>& class_set) {
  if (class_set.empty()) {
    throw Error(ErrorCode::EmptyClassSet, "class set must not be empty");
  }
  MetricReport report;
  report.iou_occupancy = occupancy_iou;
  report.per_class_iou.assign(m.num_classes, 0.0);
  report.class_evaluated.assign(m.num_classes, 0);

  double sum = 0.0;
  std::size_t evaluated = 0;
  for (const uint8_t cls : class_set) {
    if (cls >= m.num_classes) {
      throw Error(ErrorCode::LabelOutOfRange,
                  "class set entry " + std::to_string(cls) +
                      " >= class count " + std::to_string(m.num_classes));
    }
    const uint64_t tp = m.at(cls, cls);
    const uint64_t fp = m.col_sum(cls) - tp;
    const uint64_t fn = m.row_sum(cls) - tp;
    if (tp + fp + fn == 0) continue;
    const double iou =
        static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
    report.per_class_iou[cls] = iou;
    report.class_evaluated[cls] = 1;
    report.evaluated_classes.push_back(cls);
    sum += iou;
    ++evaluated;
  }
  report.miou = evaluated == 0 ? 0.0 : sum / static_cast<double>(evaluated);
  return report;
}

}  // namespace

MetricReport miou(const OccGrid& pred, const OccGrid& gt,
                  const std::vector<uint8_t>& class_set,
                  uint32_t num_classes) {
  const ConfusionMatrix m = confusion(pred, gt, num_classes);
  return report_from_confusion(m, iou_occupancy(pred, gt), class_set);
}

MetricReport bev_metrics(const OccGrid& pred, const OccGrid& gt,
                         const std::vector<uint8_t>& class_set,
                         uint32_t num_classes) {
  if (!pred.same_dims(gt)) {
    throw Error(ErrorCode::DimMismatch, "prediction and gt dims differ");
  }
  if (class_set.empty()) {
    throw Error(ErrorCode::EmptyClassSet, "class set must not be empty");
  }
  const BevMap hp = project_height(pred);
  const BevMap hg = project_height(gt);
  uint64_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < hg.heights.size(); ++i) {
    const bool p = hp.heights[i] != kEmptyColumn;
    const bool g = hg.heights[i] != kEmptyColumn;
    inter += (p && g) ? 1 : 0;
    uni += (p || g) ? 1 : 0;
  }
  const double occ_iou =
      uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);

  const BevLabelMap lp = project_label(pred);
  const BevLabelMap lg = project_label(gt);
  ConfusionMatrix m;
  m.num_classes = num_classes;
  m.counts.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);
  for (std::size_t i = 0; i < lg.labels.size(); ++i) {
    const uint8_t g = lg.labels[i];
    const uint8_t p = lp.labels[i];
    if (g >= num_classes || p >= num_classes) {
      throw Error(ErrorCode::LabelOutOfRange,
                  "label exceeds class count " + std::to_string(num_classes));
    }
    ++m.at(g, p);
  }
  return report_from_confusion(m, occ_iou, class_set);
}

std::vector<uint8_t> default_class_set(uint32_t num_classes) {
  std::vector<uint8_t> out;
  out.reserve(num_classes > 0 ? num_classes - 1 : 0);
  for (uint32_t c = 0; c < num_classes && c < 256; ++c) {
    if (c == kFreeClass) continue;
    out.push_back(static_cast<uint8_t>(c));
  }
  return out;
}

std::vector<HorizonReport> evaluate_horizons(
    const OccSequence& pred, const OccSequence& gt,
    const std::vector<uint8_t>& class_set, uint32_t num_classes) {
  if (pred.frames.size() != gt.frames.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "prediction has " + std::to_string(pred.frames.size()) +
                    " frames, gt has " + std::to_string(gt.frames.size()));
  }
  std::vector<HorizonReport> reports;
  reports.reserve(pred.frames.size());
  for (std::size_t k = 0; k < pred.frames.size(); ++k) {
    HorizonReport r;
    r.horizon = static_cast<int>(k + 1);
    r.space_3d = miou(pred.frames[k], gt.frames[k], class_set, num_classes);
    r.space_bev =
        bev_metrics(pred.frames[k], gt.frames[k], class_set, num_classes);
    reports.push_back(std::move(r));
  }
  return reports;
}

namespace {

void append_report_row(std::ostream& out, int horizon, const char* space,
                       const MetricReport& r, uint32_t num_classes) {
  out << horizon << ',' << space << ',' << r.iou_occupancy << ',' << r.miou;
  for (uint32_t c = 0; c < num_classes; ++c) {
    out << ',';
    if (c < r.class_evaluated.size() && r.class_evaluated[c]) {
      out << r.per_class_iou[c];
    }
  }
  out << '\n';
}

nlohmann::json report_json(const MetricReport& r) {
  nlohmann::json j;
  j["iou"] = r.iou_occupancy;
  j["miou"] = r.miou;
  nlohmann::json per_class = nlohmann::json::object();
  for (const uint8_t cls : r.evaluated_classes) {
    per_class[std::to_string(cls)] = r.per_class_iou[cls];
  }
  j["per_class_iou"] = per_class;
  return j;
}

}  // namespace

std::string metrics_csv(const std::vector<HorizonReport>& reports,
                        uint32_t num_classes) {
  std::ostringstream out;
  out.precision(17);
  out << "horizon,space,iou,miou";
  for (uint32_t c = 0; c < num_classes; ++c) out << ",class_" << c;
  out << '\n';
  for (const auto& r : reports) {
    append_report_row(out, r.horizon, "3d", r.space_3d, num_classes);
    append_report_row(out, r.horizon, "bev", r.space_bev, num_classes);
  }
  return out.str();
}

std::string metrics_json(const std::vector<HorizonReport>& reports,
                         uint32_t num_classes) {
  nlohmann::json root;
  root["num_classes"] = num_classes;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json row;
    row["horizon"] = r.horizon;
    row["3d"] = report_json(r.space_3d);
    row["bev"] = report_json(r.space_bev);
    rows.push_back(std::move(row));
  }
  root["horizons"] = rows;
  return root.dump(2) + "\n";
}

}  // namespace occflow
