#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "occflow/flow.hpp"
#include "occflow/forecast.hpp"
#include "occflow/fusion.hpp"

namespace occflow {

// End-to-end run description, loaded from a "key = value" config file.
// Keys: history, gt, second, out_dir, horizon, warp, w, seed, block_size,
// search_radius, min_texture, ransac_iters, inlier_thresh, min_inliers,
// num_classes, class_set, weight_order, threads.
struct RunConfig {
  std::string history_path;
  std::string gt_path;     // optional; enables metrics.csv
  std::string second_path; // optional second coarse prediction
  std::string out_dir;
  int horizon = 4;
  WarpMode warp = WarpMode::backward_nn;
  double gate_w = 0.5;
  FlowParams flow;
  uint32_t num_classes = kDefaultNumClasses;
  std::vector<uint8_t> class_set;  // empty = all non-free classes
  WeightOrder weight_order = WeightOrder::frequent_high;
  int threads = 1;

  void validate() const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

struct RunOutcome {
  std::vector<std::string> artifacts;  // paths written, in order
  std::vector<std::string> notices;    // human-readable warnings
  bool used_fallback = false;
  bool gate_forced_zero = false;
};

RunOutcome run_pipeline(const RunConfig& config);

struct SelfTestCheck {
  std::string name;
  bool pass = false;
  std::string detail;  // empty on pass
};

struct SelfTestReport {
  std::vector<SelfTestCheck> checks;
  bool all_pass = false;
};

SelfTestReport run_self_test();

}  // namespace occflow
