#include "occflow/pipeline.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <set>
#include <sstream>

#include "occflow/bev.hpp"
#include "occflow/binio.hpp"
#include "occflow/metrics.hpp"
#include "occflow/occ_io.hpp"
#include "occflow/parallel.hpp"
#include "occflow/rng.hpp"
#include "occflow/synth.hpp"

namespace occflow {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t idx = 0;
    const int64_t v = std::stoll(value, &idx);
    if (idx != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigInvalid,
                "key '" + key + "': not an integer: '" + value + "'");
  }
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t idx = 0;
    const uint64_t v = std::stoull(value, &idx);
    if (idx != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigInvalid,
                "key '" + key + "': not an unsigned integer: '" + value + "'");
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t idx = 0;
    const double v = std::stod(value, &idx);
    if (idx != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigInvalid,
                "key '" + key + "': not a number: '" + value + "'");
  }
}

std::vector<uint8_t> parse_class_set(const std::string& key,
                                     const std::string& value) {
  std::vector<uint8_t> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    const int64_t v = parse_int(key, trim(item));
    if (v < 0 || v > 255) {
      throw Error(ErrorCode::ConfigInvalid,
                  "key '" + key + "': class id out of range: " + item);
    }
    out.push_back(static_cast<uint8_t>(v));
  }
  if (out.empty()) {
    throw Error(ErrorCode::ConfigInvalid, "key '" + key + "': empty list");
  }
  return out;
}

WarpMode parse_warp(const std::string& value) {
  if (value == "backward" || value == "backward_nn") {
    return WarpMode::backward_nn;
  }
  if (value == "forward" || value == "forward_splat") {
    return WarpMode::forward_splat;
  }
  throw Error(ErrorCode::ConfigInvalid,
              "key 'warp': expected backward or forward, got '" + value + "'");
}

WeightOrder parse_weight_order(const std::string& value) {
  if (value == "frequent_high") return WeightOrder::frequent_high;
  if (value == "rare_high") return WeightOrder::rare_high;
  throw Error(ErrorCode::ConfigInvalid,
              "key 'weight_order': expected frequent_high or rare_high, "
              "got '" + value + "'");
}

std::string homography_line(const Homography& h) {
  std::ostringstream out;
  out.precision(17);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      if (r != 0 || c != 0) out << ' ';
      out << h.m(r, c);
    }
  }
  return out.str();
}

}  // namespace

void RunConfig::validate() const {
  if (history_path.empty()) {
    throw Error(ErrorCode::ConfigInvalid, "key 'history' is required");
  }
  if (out_dir.empty()) {
    throw Error(ErrorCode::ConfigInvalid, "key 'out_dir' is required");
  }
  if (horizon < 1) {
    throw Error(ErrorCode::ConfigInvalid, "horizon must be >= 1");
  }
  if (!(gate_w >= 0.0 && gate_w <= 1.0)) {
    throw Error(ErrorCode::ConfigInvalid, "w must lie in [0,1]");
  }
  if (num_classes < 2 || num_classes > 256) {
    throw Error(ErrorCode::ConfigInvalid, "num_classes must lie in [2,256]");
  }
  for (const uint8_t cls : class_set) {
    if (cls >= num_classes) {
      throw Error(ErrorCode::ConfigInvalid,
                  "class_set entry " + std::to_string(cls) +
                      " >= num_classes " + std::to_string(num_classes));
    }
  }
  if (threads < 1) {
    throw Error(ErrorCode::ConfigInvalid, "threads must be >= 1");
  }
  flow.validate();
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigInvalid,
                  "line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw Error(ErrorCode::ConfigInvalid,
                  "line " + std::to_string(lineno) + ": empty key");
    }
    if (!seen.insert(key).second) {
      throw Error(ErrorCode::ConfigInvalid, "duplicate key '" + key + "'");
    }

    if (key == "history") {
      cfg.history_path = value;
    } else if (key == "gt") {
      cfg.gt_path = value;
    } else if (key == "second") {
      cfg.second_path = value;
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else if (key == "horizon") {
      cfg.horizon = static_cast<int>(parse_int(key, value));
    } else if (key == "warp") {
      cfg.warp = parse_warp(value);
    } else if (key == "w") {
      cfg.gate_w = parse_real(key, value);
    } else if (key == "seed") {
      cfg.flow.seed = parse_u64(key, value);
    } else if (key == "block_size") {
      cfg.flow.block_size = static_cast<int>(parse_int(key, value));
    } else if (key == "search_radius") {
      cfg.flow.search_radius = static_cast<int>(parse_int(key, value));
    } else if (key == "min_texture") {
      cfg.flow.min_texture = parse_real(key, value);
    } else if (key == "ransac_iters") {
      cfg.flow.ransac_iters = static_cast<int>(parse_int(key, value));
    } else if (key == "inlier_thresh") {
      cfg.flow.inlier_thresh = parse_real(key, value);
    } else if (key == "min_inliers") {
      cfg.flow.min_inliers = static_cast<int>(parse_int(key, value));
    } else if (key == "num_classes") {
      cfg.num_classes = static_cast<uint32_t>(parse_int(key, value));
    } else if (key == "class_set") {
      cfg.class_set = parse_class_set(key, value);
    } else if (key == "weight_order") {
      cfg.weight_order = parse_weight_order(value);
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(parse_int(key, value));
    } else {
      throw Error(ErrorCode::ConfigInvalid, "unknown key '" + key + "'");
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_text_file(path));
}

RunOutcome run_pipeline(const RunConfig& config) {
  config.validate();
  set_max_threads(config.threads);

  const OccSequence history = load_sequence(config.history_path);

  ForecastParams fp;
  fp.horizon = config.horizon;
  fp.warp = config.warp;
  fp.flow = config.flow;

  ForecastInfo info;
  OccSequence predicted = forecast(history, fp, &info);

  RunOutcome outcome;
  outcome.used_fallback = info.used_fallback;
  if (info.used_fallback) {
    outcome.notices.push_back(
        "flow estimation fell back to the copy-paste baseline");
  }

  if (!config.second_path.empty()) {
    const OccSequence second = load_sequence(config.second_path);
    if (second.frames.size() != predicted.frames.size()) {
      throw Error(ErrorCode::LengthMismatch,
                  "second prediction has " +
                      std::to_string(second.frames.size()) +
                      " frames, horizon is " +
                      std::to_string(predicted.frames.size()));
    }
    const IdentityRefiner refiner;
    for (std::size_t k = 0; k < predicted.frames.size(); ++k) {
      predicted.frames[k] =
          quality_fuse(predicted.frames[k], second.frames[k], config.gate_w,
                       refiner, config.num_classes, config.weight_order);
    }
  } else {
    outcome.gate_forced_zero = true;
    outcome.notices.push_back(
        "no second prediction supplied; gate weight forced to 0");
  }

  std::filesystem::create_directories(config.out_dir);
  const std::filesystem::path out_dir(config.out_dir);

  const std::string pred_path = (out_dir / "predicted.occs").string();
  save_sequence(predicted, pred_path);
  outcome.artifacts.push_back(pred_path);

  std::ostringstream flow_text;
  flow_text << "fallback = " << (info.used_fallback ? 1 : 0) << "\n"
            << "correspondences = " << info.correspondence_count << "\n"
            << "inliers = " << info.inlier_count << "\n"
            << "model = " << homography_line(info.model) << "\n";
  const std::string flow_path = (out_dir / "flow.txt").string();
  write_text_file(flow_path, flow_text.str());
  outcome.artifacts.push_back(flow_path);

  if (!config.gt_path.empty()) {
    const OccSequence gt = load_sequence(config.gt_path);
    const std::vector<uint8_t> class_set = config.class_set.empty()
                                               ? default_class_set(config.num_classes)
                                               : config.class_set;
    const std::vector<HorizonReport> reports =
        evaluate_horizons(predicted, gt, class_set, config.num_classes);
    const std::string csv_path = (out_dir / "metrics.csv").string();
    write_text_file(csv_path, metrics_csv(reports, config.num_classes));
    outcome.artifacts.push_back(csv_path);
  }

  return outcome;
}

// ---------------------------------------------------------------------
// Self-test: cheap independent re-checks of the core invariants, meant
// to validate a build on the target machine in seconds.

namespace {

OccSequence slice_frames(const OccSequence& seq, std::size_t begin,
                         std::size_t count) {
  OccSequence out;
  out.frame_period_s = seq.frame_period_s;
  out.frames.assign(seq.frames.begin() + static_cast<std::ptrdiff_t>(begin),
                    seq.frames.begin() +
                        static_cast<std::ptrdiff_t>(begin + count));
  return out;
}

OccGrid random_grid(uint32_t x, uint32_t y, uint32_t z, uint32_t num_classes,
                    SplitMix64& rng) {
  OccGrid g = make_grid(x, y, z);
  for (auto& label : g.labels) {
    label = static_cast<uint8_t>(rng.next_below(num_classes));
  }
  return g;
}

bool nearly(double a, double b, double tol) { return std::abs(a - b) <= tol; }

void check_formats(SelfTestCheck& c) {
  Scenario sc = find_preset("static");
  sc.dims_x = 16;
  sc.dims_y = 16;
  sc.dims_z = 4;
  sc.frames = 2;
  sc.objects.clear();
  sc.objects.push_back({4, 3, 2, 2, 5.0, 6.0, 0.0, 0.0, 0.0});
  const SynthResult synth = generate(sc);

  const OccGrid& g = synth.sequence.frames[0];
  const std::vector<uint8_t> bytes = encode_grid(g);
  const OccGrid back = decode_grid(bytes);
  if (!(back == g) || encode_grid(back) != bytes) {
    c.detail = "grid round-trip mismatch";
    return;
  }

  const std::vector<uint8_t> seq_bytes = encode_sequence(synth.sequence);
  const OccSequence seq_back = decode_sequence(seq_bytes);
  if (encode_sequence(seq_back) != seq_bytes) {
    c.detail = "sequence round-trip mismatch";
    return;
  }

  const FlowField field = flow_field(Homography::translation(1.5, -2.0), 8, 6);
  const std::vector<uint8_t> flow_bytes = encode_flow_field(field);
  if (encode_flow_field(decode_flow_field(flow_bytes)) != flow_bytes) {
    c.detail = "flow round-trip mismatch";
    return;
  }

  SplitMix64 rng(99);
  FeatureGrid f;
  f.dims_x = 3;
  f.dims_y = 2;
  f.dims_z = 2;
  f.num_classes = 4;
  f.scores.resize(f.voxel_count() * f.num_classes);
  for (auto& s : f.scores) s = static_cast<float>(rng.next_unit());
  const std::vector<uint8_t> feat_bytes = encode_feature_grid(f);
  if (encode_feature_grid(decode_feature_grid(feat_bytes)) != feat_bytes) {
    c.detail = "feature round-trip mismatch";
    return;
  }
  c.pass = true;
}

void check_static_fixed_point(SelfTestCheck& c) {
  const SynthResult synth = generate(find_preset("static"));
  const OccSequence history = slice_frames(synth.sequence, 0, 8);
  const OccSequence gt = slice_frames(synth.sequence, 8, 4);
  const std::vector<uint8_t> class_set = default_class_set(kDefaultNumClasses);

  ForecastParams fp;
  const OccSequence flow_pred = forecast(history, fp);
  const OccSequence cp_pred = copy_paste(history, fp.horizon);

  OccSequence fused;
  fused.frame_period_s = history.frame_period_s;
  const IdentityRefiner refiner;
  for (int k = 0; k < fp.horizon; ++k) {
    fused.frames.push_back(quality_fuse(flow_pred.frames[k],
                                        cp_pred.frames[k], 0.5, refiner));
  }

  const OccSequence* candidates[] = {&flow_pred, &cp_pred, &fused};
  for (const OccSequence* pred : candidates) {
    const auto reports = evaluate_horizons(*pred, gt, class_set);
    for (const auto& r : reports) {
      if (r.space_3d.iou_occupancy != 1.0 || r.space_3d.miou != 1.0 ||
          r.space_bev.iou_occupancy != 1.0 || r.space_bev.miou != 1.0) {
        c.detail = "horizon " + std::to_string(r.horizon) + " not exactly 1.0";
        return;
      }
    }
  }
  c.pass = true;
}

void check_dlt_exact(SelfTestCheck& c) {
  for (int trial = 0; trial < 20; ++trial) {
    SplitMix64 rng = stream_for(1007, static_cast<uint64_t>(trial));
    Homography h;
    h.m << 1.0 + rng.next_range(-0.2, 0.2), rng.next_range(-0.2, 0.2),
        rng.next_range(-5.0, 5.0), rng.next_range(-0.2, 0.2),
        1.0 + rng.next_range(-0.2, 0.2), rng.next_range(-5.0, 5.0),
        rng.next_range(-0.01, 0.01), rng.next_range(-0.01, 0.01), 1.0;
    if (!h.is_invertible()) continue;

    std::vector<Correspondence> corrs;
    for (const double x : {0.0, 5.0, 10.0, 15.0}) {
      for (const double y : {0.0, 7.0, 14.0}) {
        Correspondence pair;
        pair.src = Eigen::Vector2d(x, y);
        pair.dst = h.apply(pair.src);
        corrs.push_back(pair);
      }
    }
    const Homography fit = fit_homography_dlt(corrs);
    for (int r = 0; r < 3; ++r) {
      for (int col = 0; col < 3; ++col) {
        if (!nearly(fit.m(r, col), h.m(r, col), 1e-6)) {
          c.detail = "trial " + std::to_string(trial) + " entry (" +
                     std::to_string(r) + "," + std::to_string(col) +
                     ") off by more than 1e-6";
          return;
        }
      }
    }
  }
  c.pass = true;
}

void check_car_dominance(SelfTestCheck& c) {
  const SynthResult synth = generate(find_preset("translating_car"));
  const OccSequence history = slice_frames(synth.sequence, 0, 8);
  const OccSequence gt = slice_frames(synth.sequence, 8, 4);

  ForecastParams fp;
  fp.flow.block_size = 5;
  const OccSequence flow_pred = forecast(history, fp);
  const OccSequence cp_pred = copy_paste(history, fp.horizon);

  for (int k = 0; k < fp.horizon; ++k) {
    const double flow_iou = iou_occupancy(flow_pred.frames[k], gt.frames[k]);
    const double cp_iou = iou_occupancy(cp_pred.frames[k], gt.frames[k]);
    if (!(flow_iou > cp_iou)) {
      c.detail = "horizon " + std::to_string(k + 1) + ": flow " +
                 std::to_string(flow_iou) + " <= baseline " +
                 std::to_string(cp_iou);
      return;
    }
  }
  c.pass = true;
}

void check_fusion_fixed_point(SelfTestCheck& c) {
  const IdentityRefiner refiner;
  for (int trial = 0; trial < 5; ++trial) {
    SplitMix64 rng = stream_for(2024, static_cast<uint64_t>(trial));
    const OccGrid g = random_grid(6, 5, 3, 7, rng);
    const OccGrid other = random_grid(6, 5, 3, 7, rng);
    for (const double w : {0.0, 0.25, 0.5, 1.0}) {
      if (!(quality_fuse(g, g, w, refiner, 7) == g)) {
        c.detail = "fixed point violated at w = " + std::to_string(w);
        return;
      }
    }
    if (!(quality_fuse(g, other, 1.0, refiner, 7) == other) ||
        !(quality_fuse(g, other, 0.0, refiner, 7) == g)) {
      c.detail = "endpoint consistency violated";
      return;
    }
  }
  c.pass = true;
}

void check_lovasz_vertex(SelfTestCheck& c) {
  const uint32_t num_classes = 5;
  for (int trial = 0; trial < 10; ++trial) {
    SplitMix64 rng = stream_for(31337, static_cast<uint64_t>(trial));
    const OccGrid gt = random_grid(6, 6, 3, num_classes, rng);
    const OccGrid pred = random_grid(6, 6, 3, num_classes, rng);
    const FeatureGrid hard = one_hot(pred, num_classes);
    for (uint32_t cls = 0; cls < num_classes; ++cls) {
      const auto loss = lovasz_class(hard, gt, static_cast<uint8_t>(cls));
      if (!loss) continue;
      const MetricReport report =
          miou(pred, gt, {static_cast<uint8_t>(cls)}, num_classes);
      const double expect = 1.0 - report.per_class_iou[cls];
      if (!nearly(*loss, expect, 1e-12)) {
        c.detail = "trial " + std::to_string(trial) + " class " +
                   std::to_string(cls) + ": loss != 1 - IoU";
        return;
      }
    }
  }
  c.pass = true;
}

void check_metrics_oracle(SelfTestCheck& c) {
  const uint32_t num_classes = 6;
  for (int trial = 0; trial < 10; ++trial) {
    SplitMix64 rng = stream_for(555, static_cast<uint64_t>(trial));
    const OccGrid gt = random_grid(6, 6, 3, num_classes, rng);
    const OccGrid pred = random_grid(6, 6, 3, num_classes, rng);

    // Plain tally, written independently of the library path.
    std::vector<uint64_t> tally(num_classes * num_classes, 0);
    uint64_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
      ++tally[gt.labels[i] * num_classes + pred.labels[i]];
      const bool p = pred.labels[i] != 0;
      const bool g = gt.labels[i] != 0;
      if (p && g) ++inter;
      if (p || g) ++uni;
    }
    const ConfusionMatrix m = confusion(pred, gt, num_classes);
    if (m.counts != tally) {
      c.detail = "confusion tally mismatch, trial " + std::to_string(trial);
      return;
    }
    const double expect_occ =
        uni == 0 ? 1.0
                 : static_cast<double>(inter) / static_cast<double>(uni);
    if (iou_occupancy(pred, gt) != expect_occ) {
      c.detail = "occupancy IoU mismatch, trial " + std::to_string(trial);
      return;
    }

    const MetricReport report =
        miou(pred, gt, default_class_set(num_classes), num_classes);
    double sum = 0.0;
    std::size_t evaluated = 0;
    for (uint32_t cls = 1; cls < num_classes; ++cls) {
      uint64_t tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < gt.labels.size(); ++i) {
        const bool p = pred.labels[i] == cls;
        const bool g = gt.labels[i] == cls;
        if (p && g) ++tp;
        if (p && !g) ++fp;
        if (!p && g) ++fn;
      }
      if (tp + fp + fn == 0) continue;
      const double iou =
          static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
      if (!nearly(report.per_class_iou[cls], iou, 1e-12)) {
        c.detail = "per-class IoU mismatch, trial " + std::to_string(trial);
        return;
      }
      sum += iou;
      ++evaluated;
    }
    const double expect_miou =
        evaluated == 0 ? 0.0 : sum / static_cast<double>(evaluated);
    if (!nearly(report.miou, expect_miou, 1e-12)) {
      c.detail = "miou mismatch, trial " + std::to_string(trial);
      return;
    }
  }
  c.pass = true;
}

void check_determinism(SelfTestCheck& c) {
  const SynthResult a = generate(find_preset("translating_car"));
  const SynthResult b = generate(find_preset("translating_car"));
  if (encode_sequence(a.sequence) != encode_sequence(b.sequence)) {
    c.detail = "same seed produced different sequences";
    return;
  }

  const BevMap b0 = project_height(a.sequence.frames[6]);
  const BevMap b1 = project_height(a.sequence.frames[7]);
  FlowParams params;
  params.block_size = 5;
  const auto est1 = estimate_homography(match_blocks(b0, b1, params), params);
  const auto est2 = estimate_homography(match_blocks(b0, b1, params), params);
  if (std::memcmp(est1.h.m.data(), est2.h.m.data(), 9 * sizeof(double)) != 0) {
    c.detail = "repeated estimation produced different models";
    return;
  }
  c.pass = true;
}

}  // namespace

SelfTestReport run_self_test() {
  struct Entry {
    const char* name;
    void (*fn)(SelfTestCheck&);
  };
  const Entry entries[] = {
      {"format_round_trips", check_formats},
      {"static_scene_fixed_point", check_static_fixed_point},
      {"dlt_exact_recovery", check_dlt_exact},
      {"translating_car_dominance", check_car_dominance},
      {"fusion_fixed_point", check_fusion_fixed_point},
      {"lovasz_vertex_identity", check_lovasz_vertex},
      {"metrics_oracle_equivalence", check_metrics_oracle},
      {"determinism", check_determinism},
  };

  SelfTestReport report;
  report.all_pass = true;
  for (const Entry& entry : entries) {
    SelfTestCheck check;
    check.name = entry.name;
    try {
      entry.fn(check);
    } catch (const Error& e) {
      check.pass = false;
      check.detail = std::string(e.code_name()) + ": " + e.what();
    } catch (const std::exception& e) {
      check.pass = false;
      check.detail = e.what();
    }
    report.all_pass = report.all_pass && check.pass;
    report.checks.push_back(std::move(check));
  }
  return report;
}

}  // namespace occflow
