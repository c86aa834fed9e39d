#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "occflow/bev.hpp"
#include "occflow/binio.hpp"
#include "occflow/flow.hpp"
#include "occflow/forecast.hpp"
#include "occflow/fusion.hpp"
#include "occflow/metrics.hpp"
#include "occflow/occ_io.hpp"
#include "occflow/parallel.hpp"
#include "occflow/pipeline.hpp"
#include "occflow/synth.hpp"

namespace {

using namespace occflow;

constexpr const char* kVersion = "occflow 0.1.0";

// "-" writes to stdout, anything else to a file.
void emit(const std::string& path, const std::string& data) {
  if (path == "-") {
    std::fwrite(data.data(), 1, data.size(), stdout);
    return;
  }
  write_text_file(path, data);
}

void parse_dims(const std::string& text, uint32_t& x, uint32_t& y,
                uint32_t& z) {
  unsigned long long vx = 0, vy = 0, vz = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%llu,%llu,%llu%c", &vx, &vy, &vz, &tail) !=
      3) {
    throw Error(ErrorCode::ConfigInvalid,
                "dims must be X,Y,Z, got '" + text + "'");
  }
  x = static_cast<uint32_t>(vx);
  y = static_cast<uint32_t>(vy);
  z = static_cast<uint32_t>(vz);
}

std::vector<uint8_t> parse_class_list(const std::string& text) {
  std::vector<uint8_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const int v = std::stoi(item);
    if (v < 0 || v > 255) {
      throw Error(ErrorCode::ConfigInvalid, "class id out of range: " + item);
    }
    out.push_back(static_cast<uint8_t>(v));
  }
  if (out.empty()) {
    throw Error(ErrorCode::EmptyClassSet, "class set must not be empty");
  }
  return out;
}

std::string format_real(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
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

void add_flow_options(CLI::App* cmd, FlowParams& params) {
  cmd->add_option("--block-size", params.block_size, "Matching block edge")
      ->capture_default_str();
  cmd->add_option("--search-radius", params.search_radius,
                  "Max offset in cells")
      ->capture_default_str();
  cmd->add_option("--min-texture", params.min_texture,
                  "Variance gate for blocks")
      ->capture_default_str();
  cmd->add_option("--ransac-iters", params.ransac_iters, "RANSAC iterations")
      ->capture_default_str();
  cmd->add_option("--inlier-thresh", params.inlier_thresh,
                  "Inlier error bound in cells")
      ->capture_default_str();
  cmd->add_option("--min-inliers", params.min_inliers,
                  "Minimum consensus size")
      ->capture_default_str();
  cmd->add_option("--seed", params.seed, "RANSAC sampling seed")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coarse-to-fine 4D occupancy forecasting toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  int threads = 1;
  app.add_option("--threads", threads, "Worker thread cap")
      ->capture_default_str();

  int exit_code = 0;

  // ---- convert ----------------------------------------------------
  auto* convert = app.add_subcommand("convert", "Voxel grid file utilities");
  convert->require_subcommand(1);
  {
    auto* cmd = convert->add_subcommand(
        "import-raw", "Wrap a raw little-endian label dump as a grid file");
    auto raw = std::make_shared<std::string>();
    auto dims = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto voxel = std::make_shared<double>(0.4);
    cmd->add_option("--raw", *raw, "Raw label bytes, x-major, z fastest")
        ->required();
    cmd->add_option("--dims", *dims, "Grid dims X,Y,Z")->required();
    cmd->add_option("--voxel-size", *voxel, "Voxel edge in meters")
        ->capture_default_str();
    cmd->add_option("--out", *out, "Output grid file")->required();
    cmd->callback([=, &threads] {
      set_max_threads(threads);
      uint32_t x = 0, y = 0, z = 0;
      parse_dims(*dims, x, y, z);
      OccGrid grid = import_raw(*raw, x, y, z);
      grid.voxel_size_m = static_cast<float>(*voxel);
      save_grid(grid, *out);
    });
  }
  {
    auto* cmd = convert->add_subcommand(
        "pack", "Bundle a directory of grid files into one sequence");
    auto dir = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto period = std::make_shared<double>(0.5);
    cmd->add_option("--dir", *dir, "Directory of .occv files")->required();
    cmd->add_option("--period", *period, "Frame period in seconds")
        ->capture_default_str();
    cmd->add_option("--out", *out, "Output sequence file")->required();
    cmd->callback([=, &threads] {
      set_max_threads(threads);
      OccSequence seq = load_sequence(*dir);
      seq.frame_period_s = static_cast<float>(*period);
      save_sequence(seq, *out);
    });
  }
  {
    auto* cmd = convert->add_subcommand(
        "unpack", "Split a sequence file into per-frame grid files");
    auto in = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>();
    cmd->add_option("--in", *in, "Sequence file")->required();
    cmd->add_option("--out-dir", *out_dir, "Directory for frame files")
        ->required();
    cmd->callback([=, &threads] {
      set_max_threads(threads);
      const OccSequence seq = load_sequence(*in);
      std::filesystem::create_directories(*out_dir);
      for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%03zu.occv", i);
        save_grid(seq.frames[i],
                  (std::filesystem::path(*out_dir) / name).string());
      }
    });
  }
  {
    auto* cmd = convert->add_subcommand(
        "slice", "Dump one z layer of a grid as CSV (rows by y)");
    auto in = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>("-");
    auto z = std::make_shared<int>(0);
    cmd->add_option("--in", *in, "Grid file")->required();
    cmd->add_option("--z", *z, "Layer index")->required();
    cmd->add_option("--out", *out, "Output path or - for stdout")
        ->capture_default_str();
    cmd->callback([=, &threads] {
      set_max_threads(threads);
      const OccGrid grid = load_grid(*in);
      if (*z < 0 || static_cast<uint32_t>(*z) >= grid.dims_z) {
        throw Error(ErrorCode::IndexOutOfRange,
                    "z = " + std::to_string(*z) + ", grid has " +
                        std::to_string(grid.dims_z) + " layers");
      }
      std::ostringstream text;
      for (uint32_t y = 0; y < grid.dims_y; ++y) {
        for (uint32_t x = 0; x < grid.dims_x; ++x) {
          if (x) text << ',';
          text << static_cast<int>(
              grid.at(x, y, static_cast<uint32_t>(*z)));
        }
        text << '\n';
      }
      emit(*out, text.str());
    });
  }

  // ---- bev ---------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("bev", "Project a grid to a BEV map");
    auto in = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>("-");
    auto what = std::make_shared<std::string>("height");
    auto format = std::make_shared<std::string>("csv");
    cmd->add_option("--in", *in, "Grid file")->required();
    cmd->add_option("--what", *what, "height or label")
        ->check(CLI::IsMember({"height", "label"}))
        ->capture_default_str();
    cmd->add_option("--format", *format, "csv or pgm (heights only)")
        ->check(CLI::IsMember({"csv", "pgm"}))
        ->capture_default_str();
    cmd->add_option("--out", *out, "Output path or - for stdout")
        ->capture_default_str();
    cmd->callback([=, &threads] {
      set_max_threads(threads);
      const OccGrid grid = load_grid(*in);
      if (*what == "label") {
        if (*format != "csv") {
          throw Error(ErrorCode::ConfigInvalid,
                      "label maps support only csv output");
        }
        emit(*out, to_csv(project_label(grid)));
        return;
      }
      const BevMap map = project_height(grid);
      if (*format == "pgm") {
        if (*out == "-") {
          throw Error(ErrorCode::ConfigInvalid,
                      "pgm output requires a file path");
        }
        write_text_file(*out, to_pgm(map));
        return;
      }
      emit(*out, to_csv(map));
    });
  }

  // ---- flow ----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "flow", "Estimate BEV motion between two grids");
    auto a = std::make_shared<std::string>();
    auto b = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto model_out = std::make_shared<std::string>();
    auto csv_out = std::make_shared<std::string>();
    auto params = std::make_shared<FlowParams>();
    cmd->add_option("--a", *a, "Earlier grid file")->required();
    cmd->add_option("--b", *b, "Later grid file")->required();
    cmd->add_option("--out", *out, "Flow raster output");
    cmd->add_option("--model", *model_out, "Model text output");
    cmd->add_option("--csv", *csv_out, "Correspondence CSV output");
    add_flow_options(cmd, *params);
    cmd->callback([=, &threads] {
      set_max_threads(threads);
      const OccGrid ga = load_grid(*a);
      const OccGrid gb = load_grid(*b);
      const BevMap b0 = project_height(ga);
      const BevMap b1 = project_height(gb);
      const std::vector<Correspondence> corrs = match_blocks(b0, b1, *params);
      const HomographyEstimate est = estimate_homography(corrs, *params);
      std::cout << "correspondences = " << corrs.size() << "\n"
                << "inliers = " << est.inlier_count << "\n"
                << "model = " << homography_line(est.h) << "\n";
      if (!out->empty()) {
        save_flow_field(flow_field(est.h, b0.width, b0.height), *out);
      }
      if (!model_out->empty()) {
        std::ostringstream text;
        text << "correspondences = " << corrs.size() << "\n"
             << "inliers = " << est.inlier_count << "\n"
             << "model = " << homography_line(est.h) << "\n";
        write_text_file(*model_out, text.str());
      }
      if (!csv_out->empty()) {
        write_text_file(*csv_out, correspondences_csv(corrs));
      }
    });
  }

  // ---- forecast -------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "forecast", "Predict future frames by warping the latest frame");
    auto history = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto mode = std::make_shared<std::string>("backward");
    auto horizon = std::make_shared<int>(4);
    auto params = std::make_shared<FlowParams>();
    cmd->add_option("--history", *history, "History sequence file or dir")
        ->required();
    cmd->add_option("--horizon", *horizon, "Frames to predict")
        ->capture_default_str();
    cmd->add_option("--mode", *mode, "backward or forward warping")
        ->check(CLI::IsMember({"backward", "forward"}))
        ->capture_default_str();
    cmd->add_option("--out", *out, "Output sequence file")->required();
    add_flow_options(cmd, *params);
    cmd->callback([=, &threads] {
      set_max_threads(threads);
      ForecastParams fp;
      fp.horizon = *horizon;
      fp.warp = *mode == "forward" ? WarpMode::forward_splat
                                   : WarpMode::backward_nn;
      fp.flow = *params;
      ForecastInfo info;
      const OccSequence pred = forecast(load_sequence(*history), fp, &info);
      if (info.used_fallback) {
        std::cerr << "notice: flow estimation fell back to copy-paste\n";
      }
      save_sequence(pred, *out);
    });
  }

  // ---- baseline --------------------------------------------------------
  {
    auto* baseline = app.add_subcommand("baseline", "Reference predictors");
    baseline->require_subcommand(1);
    auto* cmd = baseline->add_subcommand(
        "copy-paste", "Repeat the last observed frame");
    auto history = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto horizon = std::make_shared<int>(4);
    cmd->add_option("--history", *history, "History sequence file or dir")
        ->required();
    cmd->add_option("--horizon", *horizon, "Frames to predict")
        ->capture_default_str();
    cmd->add_option("--out", *out, "Output sequence file")->required();
    cmd->callback([=, &threads] {
      set_max_threads(threads);
      save_sequence(copy_paste(load_sequence(*history), *horizon), *out);
    });
  }

  // ---- fuse -------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "fuse", "Gated class-weighted fusion of two coarse predictions");
    auto a = std::make_shared<std::string>();
    auto b = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto w = std::make_shared<double>(0.5);
    auto classes = std::make_shared<uint32_t>(kDefaultNumClasses);
    auto order = std::make_shared<std::string>("frequent_high");
    cmd->add_option("--a", *a, "First prediction grid")->required();
    cmd->add_option("--b", *b, "Second prediction grid (weight source)")
        ->required();
    cmd->add_option("--w", *w, "Gate weight in [0,1]")->capture_default_str();
    cmd->add_option("--classes", *classes, "Class count")
        ->capture_default_str();
    cmd->add_option("--weight-order", *order,
                    "frequent_high or rare_high weighting")
        ->check(CLI::IsMember({"frequent_high", "rare_high"}))
        ->capture_default_str();
    cmd->add_option("--out", *out, "Output grid file")->required();
    cmd->callback([=, &threads] {
      set_max_threads(threads);
      const IdentityRefiner refiner;
      const WeightOrder wo = *order == "rare_high" ? WeightOrder::rare_high
                                                   : WeightOrder::frequent_high;
      save_grid(quality_fuse(load_grid(*a), load_grid(*b), *w, refiner,
                             *classes, wo),
                *out);
    });
  }

  // ---- loss -------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "loss", "Evaluate losses of a probability grid against labels");
    auto pred = std::make_shared<std::string>();
    auto gt = std::make_shared<std::string>();
    auto lambda = std::make_shared<double>(1.0);
    auto class_list = std::make_shared<std::string>();
    auto count_free = std::make_shared<bool>(false);
    cmd->add_option("--pred", *pred, "Probability feature grid file")
        ->required();
    cmd->add_option("--gt", *gt, "Ground-truth grid file")->required();
    cmd->add_option("--lambda", *lambda, "Weight of the Lovasz term")
        ->capture_default_str();
    cmd->add_option("--class-set", *class_list,
                    "Comma-separated class ids for the Lovasz term");
    cmd->add_flag("--count-free", *count_free,
                  "Include free-space voxels in the cross entropy");
    cmd->callback([=, &threads] {
      set_max_threads(threads);
      LossOptions opts;
      opts.ignore_free = !*count_free;
      opts.lambda = *lambda;
      if (!class_list->empty()) opts.class_set = parse_class_list(*class_list);
      const LossBreakdown loss =
          evaluate_loss(load_feature_grid(*pred), load_grid(*gt), opts);
      std::cout << "ce = " << format_real(loss.ce) << "\n"
                << "lovasz = " << format_real(loss.lovasz) << "\n"
                << "combined = " << format_real(loss.combined) << "\n";
    });
  }

  // ---- eval -------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "eval", "Per-horizon IoU/mIoU of a predicted sequence");
    auto pred = std::make_shared<std::string>();
    auto gt = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>("-");
    auto classes = std::make_shared<uint32_t>(kDefaultNumClasses);
    auto class_list = std::make_shared<std::string>();
    auto json = std::make_shared<bool>(false);
    cmd->add_option("--pred", *pred, "Predicted sequence file or dir")
        ->required();
    cmd->add_option("--gt", *gt, "Ground-truth sequence file or dir")
        ->required();
    cmd->add_option("--classes", *classes, "Class count")
        ->capture_default_str();
    cmd->add_option("--class-set", *class_list,
                    "Comma-separated class ids (default: all non-free)");
    cmd->add_flag("--json", *json, "Emit JSON instead of CSV");
    cmd->add_option("--out", *out, "Output path or - for stdout")
        ->capture_default_str();
    cmd->callback([=, &threads] {
      set_max_threads(threads);
      const std::vector<uint8_t> class_set =
          class_list->empty() ? default_class_set(*classes)
                              : parse_class_list(*class_list);
      const auto reports = evaluate_horizons(
          load_sequence(*pred), load_sequence(*gt), class_set, *classes);
      emit(*out, *json ? metrics_json(reports, *classes)
                       : metrics_csv(reports, *classes));
    });
  }

  // ---- synth ------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "synth", "Generate a synthetic scene sequence with known motion");
    auto preset = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto motion_out = std::make_shared<std::string>();
    auto seed = std::make_shared<uint64_t>(0);
    auto frames = std::make_shared<uint32_t>(0);
    auto dims = std::make_shared<std::string>();
    cmd->add_option("--preset", *preset,
                    "static, translating_car, ego_translation, ego_rotation, "
                    "or crossing_pair")
        ->required();
    auto* seed_opt = cmd->add_option("--seed", *seed, "Jitter seed override");
    auto* frames_opt =
        cmd->add_option("--frames", *frames, "Frame count override");
    auto* dims_opt = cmd->add_option("--dims", *dims, "Dims override X,Y,Z");
    cmd->add_option("--out", *out, "Output sequence file")->required();
    cmd->add_option("--motion", *motion_out, "Motion sidecar text output");
    cmd->callback([=, &threads] {
      set_max_threads(threads);
      Scenario sc = find_preset(*preset);
      if (seed_opt->count() > 0) sc.seed = *seed;
      if (frames_opt->count() > 0) sc.frames = *frames;
      if (dims_opt->count() > 0) {
        parse_dims(*dims, sc.dims_x, sc.dims_y, sc.dims_z);
      }
      const SynthResult result = generate(sc);
      save_sequence(result.sequence, *out);
      if (!motion_out->empty()) {
        write_text_file(*motion_out, motion_text(result.motion));
      }
    });
  }

  // ---- run ----------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "run", "End-to-end pipeline driven by a config file");
    auto config_path = std::make_shared<std::string>();
    cmd->add_option("--config", *config_path, "Config file (key = value)")
        ->required();
    cmd->callback([=, &threads] {
      RunConfig config = load_run_config(*config_path);
      if (threads > 1) config.threads = threads;
      const RunOutcome outcome = run_pipeline(config);
      for (const std::string& notice : outcome.notices) {
        std::cerr << "notice: " << notice << "\n";
      }
      for (const std::string& path : outcome.artifacts) {
        std::cout << path << "\n";
      }
    });
  }

  // ---- self-test -----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "self-test", "Run the built-in invariant checks on synthetic scenes");
    cmd->callback([&threads, &exit_code] {
      set_max_threads(threads);
      const SelfTestReport report = run_self_test();
      for (const SelfTestCheck& check : report.checks) {
        std::cout << "self-test: " << check.name << ": "
                  << (check.pass ? "PASS" : "FAIL") ;
        if (!check.pass && !check.detail.empty()) {
          std::cout << " (" << check.detail << ")";
        }
        std::cout << "\n";
      }
      std::cout << (report.all_pass ? "self-test: all checks passed"
                                    : "self-test: FAILURES present")
                << "\n";
      if (!report.all_pass) exit_code = 2;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const occflow::Error& e) {
    std::cerr << "error: " << e.code_name() << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: Unexpected: " << e.what() << "\n";
    return 3;
  }
  return exit_code;
}
