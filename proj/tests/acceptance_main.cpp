// Acceptance harness: nine release gates, one verdict line each, exit 0
// only when every gate passes. The CLI binary under test is argv[1].

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "golden_fixtures.hpp"
#include "occflow/bev.hpp"
#include "occflow/binio.hpp"
#include "occflow/flow.hpp"
#include "occflow/forecast.hpp"
#include "occflow/fusion.hpp"
#include "occflow/metrics.hpp"
#include "occflow/occ_io.hpp"
#include "occflow/rng.hpp"
#include "occflow/synth.hpp"
#include "test_util.hpp"

using namespace occflow;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

OccSequence slice_frames(const OccSequence& seq, std::size_t begin,
                         std::size_t count) {
  OccSequence out;
  out.frame_period_s = seq.frame_period_s;
  out.frames.assign(seq.frames.begin() + static_cast<std::ptrdiff_t>(begin),
                    seq.frames.begin() +
                        static_cast<std::ptrdiff_t>(begin + count));
  return out;
}

// ---------------------------------------------------------------- 1

bool homography_recovery(std::string& detail) {
  for (const char* name : {"ego_translation", "ego_rotation"}) {
    for (const uint32_t dims : {64u, 200u}) {
      Scenario sc = find_preset(name);
      sc.dims_x = dims;
      sc.dims_y = dims;
      sc.frames = 2;
      const SynthResult synth = generate(sc);
      const BevMap b0 = project_height(synth.sequence.frames[0]);
      const BevMap b1 = project_height(synth.sequence.frames[1]);

      const FlowParams params;
      const auto t0 = Clock::now();
      const auto corrs = match_blocks(b0, b1, params);
      const HomographyEstimate est = estimate_homography(corrs, params);
      const double elapsed = seconds_since(t0);

      std::vector<Eigen::Vector2d> centers;
      centers.reserve(static_cast<std::size_t>(dims) * dims);
      for (uint32_t x = 0; x < dims; ++x) {
        for (uint32_t y = 0; y < dims; ++y) centers.emplace_back(x, y);
      }
      const double err =
          mean_transfer_discrepancy(est.h, synth.motion.steps[0], centers);
      if (!(err <= 0.1)) {
        detail = std::string(name) + " at " + std::to_string(dims) +
                 ": mean transfer discrepancy " + fmt(err) + " > 0.1";
        return false;
      }
      if (dims == 200 && !(elapsed < 1.0)) {
        detail = std::string(name) + " at 200: estimation took " +
                 fmt(elapsed) + " s (budget 1 s)";
        return false;
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------- 2

bool dlt_exact_recovery(std::string& detail) {
  for (uint64_t trial = 0; trial < 100; ++trial) {
    SplitMix64 rng = stream_for(4242, trial);
    Homography h;
    h.m << 1.0 + rng.next_range(-0.2, 0.2), rng.next_range(-0.2, 0.2),
        rng.next_range(-5.0, 5.0), rng.next_range(-0.2, 0.2),
        1.0 + rng.next_range(-0.2, 0.2), rng.next_range(-5.0, 5.0),
        rng.next_range(-0.01, 0.01), rng.next_range(-0.01, 0.01), 1.0;
    if (!h.is_invertible()) {
      detail = "trial " + std::to_string(trial) + ": drawn model singular";
      return false;
    }
    std::vector<Correspondence> corrs;
    for (const double x : {0.0, 5.0, 10.0, 15.0}) {
      for (const double y : {0.0, 7.0, 14.0}) {
        Correspondence c;
        c.src = Eigen::Vector2d(x, y);
        c.dst = h.apply(c.src);
        corrs.push_back(c);
      }
    }
    const Homography fit = fit_homography_dlt(corrs);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        const double diff = std::abs(fit.m(r, c) - h.m(r, c));
        if (!(diff <= 1e-6)) {
          detail = "trial " + std::to_string(trial) + " entry (" +
                   std::to_string(r) + "," + std::to_string(c) + ") off by " +
                   fmt(diff);
          return false;
        }
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------- 3

bool static_fixed_point(std::string& detail) {
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
    fused.frames.push_back(
        quality_fuse(flow_pred.frames[k], cp_pred.frames[k], 0.5, refiner));
  }

  const struct {
    const char* name;
    const OccSequence* seq;
  } predictors[] = {{"flow", &flow_pred}, {"copy_paste", &cp_pred},
                    {"fused", &fused}};
  for (const auto& p : predictors) {
    const auto reports = evaluate_horizons(*p.seq, gt, class_set);
    for (const HorizonReport& r : reports) {
      const double scores[] = {r.space_3d.iou_occupancy, r.space_3d.miou,
                               r.space_bev.iou_occupancy, r.space_bev.miou};
      for (const double s : scores) {
        if (s != 1.0) {
          detail = std::string(p.name) + " horizon " +
                   std::to_string(r.horizon) + ": score " + fmt(s) +
                   " is not exactly 1.0";
          return false;
        }
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------- 4

bool dynamic_dominance(std::string& detail) {
  // Occupied-IoU of the repeat-last baseline on translating_car, frozen
  // from an independent footprint-overlap computation of the moving box
  // (30 x 22 columns advancing 2 cells per frame), and of the flow
  // forecaster which recovers the shift exactly on this scene.
  const double expected_baseline[4] = {
      0.6584967320261438, 0.5902859381120251, 0.5251690458302029,
      0.4662332972192127};
  const double expected_flow[4] = {1.0, 1.0, 1.0, 1.0};

  const SynthResult synth = generate(find_preset("translating_car"));
  const OccSequence history = slice_frames(synth.sequence, 0, 8);
  const OccSequence gt = slice_frames(synth.sequence, 8, 4);

  ForecastParams fp;
  fp.flow.block_size = 5;
  const OccSequence flow_pred = forecast(history, fp);
  const OccSequence cp_pred = copy_paste(history, fp.horizon);

  for (int k = 0; k < 4; ++k) {
    const double flow_iou =
        iou_occupancy(flow_pred.frames[static_cast<std::size_t>(k)],
                      gt.frames[static_cast<std::size_t>(k)]);
    const double cp_iou =
        iou_occupancy(cp_pred.frames[static_cast<std::size_t>(k)],
                      gt.frames[static_cast<std::size_t>(k)]);
    if (!(flow_iou > cp_iou)) {
      detail = "horizon " + std::to_string(k + 1) + ": flow " + fmt(flow_iou) +
               " does not beat baseline " + fmt(cp_iou);
      return false;
    }
    if (!(std::abs(cp_iou - expected_baseline[k]) <= 1e-12)) {
      detail = "horizon " + std::to_string(k + 1) + ": baseline IoU " +
               fmt(cp_iou) + " != expected " + fmt(expected_baseline[k]);
      return false;
    }
    if (!(std::abs(flow_iou - expected_flow[k]) <= 1e-12)) {
      detail = "horizon " + std::to_string(k + 1) + ": flow IoU " +
               fmt(flow_iou) + " != expected " + fmt(expected_flow[k]);
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------- 5

std::vector<float> straightline_alpha(const OccGrid& source,
                                      uint32_t num_classes) {
  std::vector<uint64_t> counts(num_classes, 0);
  for (const uint8_t label : source.labels) ++counts[label];
  std::vector<std::pair<uint64_t, uint32_t>> order;
  for (uint32_t c = 0; c < num_classes; ++c) order.push_back({counts[c], c});
  std::stable_sort(order.begin(), order.end());
  std::vector<float> alpha(num_classes, 0.0f);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const double slot = static_cast<double>(rank + 1);
    alpha[order[rank].second] =
        static_cast<float>(slot / static_cast<double>(num_classes));
  }
  return alpha;
}

bool fusion_oracle(std::string& detail) {
  const uint32_t num_classes = 6;
  const IdentityRefiner refiner;
  for (uint64_t trial = 0; trial < 100; ++trial) {
    SplitMix64 rng = stream_for(9001, trial);
    const OccGrid a = testutil::random_grid(rng, 8, 8, 4, num_classes);
    const OccGrid b = testutil::random_grid(rng, 8, 8, 4, num_classes);
    const double w = 0.25 * static_cast<double>(trial % 5);

    const OccGrid fused = quality_fuse(a, b, w, refiner, num_classes);

    const std::vector<float> alpha = straightline_alpha(b, num_classes);
    const float wf = static_cast<float>(w);
    const float one_minus = 1.0f - wf;
    for (std::size_t v = 0; v < a.labels.size(); ++v) {
      float best = -std::numeric_limits<float>::infinity();
      uint8_t best_cls = 0;
      for (uint32_t c = 0; c < num_classes; ++c) {
        const float av = a.labels[v] == c ? 1.0f : 0.0f;
        const float bv = b.labels[v] == c ? 1.0f : 0.0f;
        const float score = alpha[c] * (one_minus * av + wf * bv);
        if (score > best) {
          best = score;
          best_cls = static_cast<uint8_t>(c);
        }
      }
      if (fused.labels[v] != best_cls) {
        detail = "trial " + std::to_string(trial) + " voxel " +
                 std::to_string(v) + ": fused " +
                 std::to_string(fused.labels[v]) + " != oracle " +
                 std::to_string(best_cls);
        return false;
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------- 6

bool lovasz_vertex_identity(std::string& detail) {
  const uint32_t num_classes = 5;
  for (uint64_t trial = 0; trial < 100; ++trial) {
    SplitMix64 rng = stream_for(24601, trial);
    const OccGrid gt = testutil::random_grid(rng, 6, 6, 3, num_classes);
    const OccGrid pred = testutil::random_grid(rng, 6, 6, 3, num_classes);
    const FeatureGrid hard = one_hot(pred, num_classes);
    for (uint32_t cls = 0; cls < num_classes; ++cls) {
      const auto loss = lovasz_class(hard, gt, static_cast<uint8_t>(cls));
      if (!loss) continue;  // class absent from gt
      const MetricReport report =
          miou(pred, gt, {static_cast<uint8_t>(cls)}, num_classes);
      const double expect = 1.0 - report.per_class_iou[cls];
      if (!(std::abs(*loss - expect) <= 1e-12)) {
        detail = "trial " + std::to_string(trial) + " class " +
                 std::to_string(cls) + ": loss " + fmt(*loss) + " != 1-IoU " +
                 fmt(expect);
        return false;
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------- 7

bool metrics_oracle(std::string& detail) {
  const uint32_t num_classes = 6;
  const std::vector<uint8_t> class_set = default_class_set(num_classes);
  for (uint64_t trial = 0; trial < 100; ++trial) {
    SplitMix64 rng = stream_for(1717, trial);
    const OccGrid gt = testutil::random_grid(rng, 8, 8, 4, num_classes);
    const OccGrid pred = testutil::random_grid(rng, 8, 8, 4, num_classes);

    // confusion counts against a plain double loop
    std::vector<uint64_t> tally(num_classes * num_classes, 0);
    uint64_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
      ++tally[static_cast<std::size_t>(gt.labels[i]) * num_classes +
              pred.labels[i]];
      const bool p = pred.labels[i] != 0;
      const bool g = gt.labels[i] != 0;
      if (p && g) ++inter;
      if (p || g) ++uni;
    }
    const ConfusionMatrix m = confusion(pred, gt, num_classes);
    if (m.counts != tally) {
      detail = "trial " + std::to_string(trial) + ": confusion tally differs";
      return false;
    }
    const double expect_occ =
        uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    if (iou_occupancy(pred, gt) != expect_occ) {
      detail = "trial " + std::to_string(trial) + ": occupancy IoU differs";
      return false;
    }

    // per-class IoU and the mean against the same double loop
    const MetricReport report = miou(pred, gt, class_set, num_classes);
    double sum = 0.0;
    std::size_t evaluated = 0;
    for (const uint8_t cls : class_set) {
      uint64_t tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < gt.labels.size(); ++i) {
        const bool p = pred.labels[i] == cls;
        const bool g = gt.labels[i] == cls;
        if (p && g) ++tp;
        if (p && !g) ++fp;
        if (!p && g) ++fn;
      }
      if (tp + fp + fn == 0) {
        if (report.class_evaluated[cls]) {
          detail = "trial " + std::to_string(trial) + ": class " +
                   std::to_string(cls) + " evaluated but absent";
          return false;
        }
        continue;
      }
      const double iou =
          static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
      if (report.per_class_iou[cls] != iou) {
        detail = "trial " + std::to_string(trial) + ": class " +
                 std::to_string(cls) + " IoU differs";
        return false;
      }
      sum += iou;
      ++evaluated;
    }
    const double expect_miou =
        evaluated == 0 ? 0.0 : sum / static_cast<double>(evaluated);
    if (report.miou != expect_miou) {
      detail = "trial " + std::to_string(trial) + ": miou differs";
      return false;
    }

    // BEV metrics against straight column scans
    const MetricReport bev = bev_metrics(pred, gt, class_set, num_classes);
    const auto top_label = [](const OccGrid& g, uint32_t x,
                              uint32_t y) -> int32_t {
      for (int32_t z = static_cast<int32_t>(g.dims_z) - 1; z >= 0; --z) {
        const uint8_t label =
            g.labels[g.linear_index(x, y, static_cast<uint32_t>(z))];
        if (label != 0) return label;
      }
      return -1;  // empty column
    };
    uint64_t binter = 0, buni = 0;
    std::vector<uint64_t> btally(num_classes * num_classes, 0);
    for (uint32_t x = 0; x < gt.dims_x; ++x) {
      for (uint32_t y = 0; y < gt.dims_y; ++y) {
        const int32_t tp_ = top_label(pred, x, y);
        const int32_t tg_ = top_label(gt, x, y);
        const bool p = tp_ >= 0;
        const bool g = tg_ >= 0;
        if (p && g) ++binter;
        if (p || g) ++buni;
        const uint32_t pl = p ? static_cast<uint32_t>(tp_) : 0;
        const uint32_t gl = g ? static_cast<uint32_t>(tg_) : 0;
        ++btally[static_cast<std::size_t>(gl) * num_classes + pl];
      }
    }
    const double expect_bev_occ =
        buni == 0 ? 1.0
                  : static_cast<double>(binter) / static_cast<double>(buni);
    if (bev.iou_occupancy != expect_bev_occ) {
      detail = "trial " + std::to_string(trial) + ": BEV occupancy differs";
      return false;
    }
    double bsum = 0.0;
    std::size_t bevaluated = 0;
    for (const uint8_t cls : class_set) {
      uint64_t tp = 0, fp = 0, fn = 0;
      for (uint32_t gl = 0; gl < num_classes; ++gl) {
        for (uint32_t pl = 0; pl < num_classes; ++pl) {
          const uint64_t n =
              btally[static_cast<std::size_t>(gl) * num_classes + pl];
          if (gl == cls && pl == cls) tp += n;
          if (pl == cls && gl != cls) fp += n;
          if (gl == cls && pl != cls) fn += n;
        }
      }
      if (tp + fp + fn == 0) continue;
      const double iou =
          static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
      if (bev.per_class_iou[cls] != iou) {
        detail = "trial " + std::to_string(trial) + ": BEV class " +
                 std::to_string(cls) + " IoU differs";
        return false;
      }
      bsum += iou;
      ++bevaluated;
    }
    const double expect_bev_miou =
        bevaluated == 0 ? 0.0 : bsum / static_cast<double>(bevaluated);
    if (bev.miou != expect_bev_miou) {
      detail = "trial " + std::to_string(trial) + ": BEV miou differs";
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------- 8

bool format_stability(std::string& detail) {
  SplitMix64 rng(31);
  OccGrid grid = make_grid(9, 7, 5, 0.2f);
  for (auto& label : grid.labels) {
    label = static_cast<uint8_t>(rng.next_below(18));
  }
  const auto grid_bytes = encode_grid(grid);
  const OccGrid grid_back = decode_grid(grid_bytes);
  if (!(grid_back == grid) || encode_grid(grid_back) != grid_bytes) {
    detail = "grid round-trip not byte-identical";
    return false;
  }

  OccSequence seq;
  seq.frame_period_s = 0.25f;
  for (int f = 0; f < 3; ++f) {
    seq.frames.push_back(testutil::random_grid(rng, 6, 5, 4, 18));
  }
  const auto seq_bytes = encode_sequence(seq);
  if (encode_sequence(decode_sequence(seq_bytes)) != seq_bytes) {
    detail = "sequence round-trip not byte-identical";
    return false;
  }

  const FlowField field =
      flow_field(Homography::translation(1.5, -2.25), 6, 4);
  const auto flow_bytes = encode_flow_field(field);
  if (encode_flow_field(decode_flow_field(flow_bytes)) != flow_bytes) {
    detail = "flow round-trip not byte-identical";
    return false;
  }

  FeatureGrid feat;
  feat.dims_x = 3;
  feat.dims_y = 2;
  feat.dims_z = 2;
  feat.num_classes = 4;
  feat.scores.resize(feat.voxel_count() * feat.num_classes);
  for (auto& s : feat.scores) s = static_cast<float>(rng.next_unit());
  const auto feat_bytes = encode_feature_grid(feat);
  if (encode_feature_grid(decode_feature_grid(feat_bytes)) != feat_bytes) {
    detail = "feature round-trip not byte-identical";
    return false;
  }

  const std::filesystem::path golden_dir(OCCFLOW_GOLDEN_DIR);
  const auto artifacts = testutil::golden_artifacts();
  for (const auto& artifact : artifacts) {
    const auto path = golden_dir / artifact.name;
    std::vector<uint8_t> committed;
    try {
      committed = read_file(path.string());
    } catch (const Error& e) {
      detail = "cannot read " + path.string() + ": " + e.what();
      return false;
    }
    if (committed != artifact.bytes) {
      detail = artifact.name + " differs from the committed golden copy";
      return false;
    }
  }
  const std::string hashes =
      read_text_file((golden_dir / "hashes.txt").string());
  if (hashes != testutil::golden_hashes(artifacts)) {
    detail = "hashes.txt does not match the regenerated artifact hashes";
    return false;
  }
  return true;
}

// ---------------------------------------------------------------- 9

std::string sh_quote(const std::filesystem::path& p) {
  return "\"" + p.string() + "\"";
}

bool end_to_end_reproducibility(const std::string& cli, std::string& detail) {
  if (cli.empty()) {
    detail = "CLI path not supplied as argv[1]";
    return false;
  }
  const auto root = testutil::make_temp_dir("acceptance_cli");
  const auto log = root / "cli.log";
  const auto shell = [&](const std::string& args) {
    const std::string cmd = sh_quote(cli) + " " + args + " >> " +
                            sh_quote(log) + " 2>&1";
    return std::system(cmd.c_str()) == 0;
  };

  for (const char* preset :
       {"static", "translating_car", "ego_translation", "ego_rotation",
        "crossing_pair"}) {
    const auto dir = root / preset;
    std::filesystem::create_directories(dir);
    const auto scene = dir / "scene.occs";
    const auto frames = dir / "frames";
    const auto hist = dir / "hist";
    const auto gt = dir / "gt";

    if (!shell("synth --preset " + std::string(preset) + " --seed 42 --out " +
               sh_quote(scene))) {
      detail = std::string(preset) + ": synth failed";
      return false;
    }
    if (!shell("convert unpack --in " + sh_quote(scene) + " --out-dir " +
               sh_quote(frames))) {
      detail = std::string(preset) + ": unpack failed";
      return false;
    }
    std::filesystem::create_directories(hist);
    std::filesystem::create_directories(gt);
    for (int f = 0; f < 12; ++f) {
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%03d.occv", f);
      std::filesystem::rename(frames / name, (f < 8 ? hist : gt) / name);
    }
    if (!shell("convert pack --dir " + sh_quote(hist) + " --out " +
               sh_quote(dir / "history.occs")) ||
        !shell("convert pack --dir " + sh_quote(gt) + " --out " +
               sh_quote(dir / "gt.occs"))) {
      detail = std::string(preset) + ": pack failed";
      return false;
    }

    const auto cfg = dir / "run.cfg";
    write_text_file(cfg.string(),
                    "history = " + (dir / "history.occs").string() +
                        "\ngt = " + (dir / "gt.occs").string() +
                        "\nout_dir = " + (dir / "out").string() +
                        "\nseed = 42\n");

    if (!shell("run --config " + sh_quote(cfg))) {
      detail = std::string(preset) + ": first run failed";
      return false;
    }
    const char* names[] = {"predicted.occs", "flow.txt", "metrics.csv"};
    std::vector<std::vector<uint8_t>> first;
    for (const char* name : names) {
      first.push_back(read_file((dir / "out" / name).string()));
    }
    if (!shell("run --config " + sh_quote(cfg))) {
      detail = std::string(preset) + ": second run failed";
      return false;
    }
    for (int i = 0; i < 3; ++i) {
      if (read_file((dir / "out" / names[i]).string()) !=
          first[static_cast<std::size_t>(i)]) {
        detail = std::string(preset) + ": " + names[i] +
                 " changed between consecutive runs";
        return false;
      }
    }
  }

  const auto t0 = Clock::now();
  if (!shell("self-test")) {
    detail = "self-test exited nonzero";
    return false;
  }
  const double elapsed = seconds_since(t0);
  if (!(elapsed < 30.0)) {
    detail = "self-test took " + fmt(elapsed) + " s (budget 30 s)";
    return false;
  }
  std::filesystem::remove_all(root);
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";

  struct Criterion {
    const char* name;
    std::function<bool(std::string&)> fn;
  };
  const Criterion criteria[] = {
      {"homography_recovery", homography_recovery},
      {"dlt_exact_recovery", dlt_exact_recovery},
      {"static_fixed_point", static_fixed_point},
      {"dynamic_dominance", dynamic_dominance},
      {"fusion_oracle", fusion_oracle},
      {"lovasz_vertex_identity", lovasz_vertex_identity},
      {"metrics_oracle", metrics_oracle},
      {"format_stability", format_stability},
      {"end_to_end_reproducibility",
       [&cli](std::string& detail) {
         return end_to_end_reproducibility(cli, detail);
       }},
  };

  int passed = 0;
  int index = 0;
  for (const Criterion& criterion : criteria) {
    ++index;
    std::string detail;
    bool ok = false;
    try {
      ok = criterion.fn(detail);
    } catch (const Error& e) {
      detail = e.what();
    } catch (const std::exception& e) {
      detail = e.what();
    }
    if (ok) {
      ++passed;
      std::cout << "criterion " << index << " (" << criterion.name
                << "): PASS\n";
    } else {
      std::cout << "criterion " << index << " (" << criterion.name
                << "): FAIL - " << detail << "\n";
    }
  }
  std::cout << passed << "/9 criteria passed\n";
  return passed == 9 ? 0 : 1;
}
