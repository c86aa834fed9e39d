#include <algorithm>
#include <string>
#include <vector>

#include "doctest.h"
#include "occflow/forecast.hpp"
#include "occflow/rng.hpp"
#include "occflow/synth.hpp"
#include "test_util.hpp"

using namespace occflow;
using testutil::code_of;

namespace {

// Multiset of column contents, for conservation checks.
std::vector<std::string> column_multiset(const OccGrid& g) {
  std::vector<std::string> cols;
  for (uint32_t x = 0; x < g.dims_x; ++x) {
    for (uint32_t y = 0; y < g.dims_y; ++y) {
      cols.emplace_back(reinterpret_cast<const char*>(g.column_data(x, y)),
                        g.dims_z);
    }
  }
  std::sort(cols.begin(), cols.end());
  return cols;
}

OccSequence history_of(const SynthResult& synth, std::size_t frames) {
  OccSequence h;
  h.frame_period_s = synth.sequence.frame_period_s;
  h.frames.assign(synth.sequence.frames.begin(),
                  synth.sequence.frames.begin() +
                      static_cast<std::ptrdiff_t>(frames));
  return h;
}

}  // namespace

TEST_SUITE("forecast") {

TEST_CASE("identity warp returns the input in both modes") {
  SplitMix64 rng(11);
  OccGrid g = testutil::random_grid(rng, 6, 5, 4, 18, 0.4);
  CHECK(warp_grid(g, Homography::identity(), WarpMode::backward_nn) == g);
  CHECK(warp_grid(g, Homography::identity(), WarpMode::forward_splat) == g);
}

TEST_CASE("unit translation moves a column one cell, labels intact") {
  OccGrid g = make_grid(4, 4, 2);
  g.at(1, 1, 0) = 4;
  g.at(1, 1, 1) = 9;
  OccGrid out =
      warp_grid(g, Homography::translation(1.0, 0.0), WarpMode::backward_nn);
  OccGrid expected = make_grid(4, 4, 2);
  expected.at(2, 1, 0) = 4;
  expected.at(2, 1, 1) = 9;
  CHECK(out == expected);
}

TEST_CASE("backward and forward warps agree on a collision-free translation") {
  SplitMix64 rng(21);
  OccGrid g = testutil::random_grid(rng, 8, 8, 4, 18, 0.4);
  const Homography t = Homography::translation(1.0, 2.0);
  CHECK(warp_grid(g, t, WarpMode::backward_nn) ==
        warp_grid(g, t, WarpMode::forward_splat));
}

TEST_CASE("in-bounds integer translation conserves column contents") {
  SplitMix64 rng(31);
  OccGrid g = make_grid(8, 8, 3);
  for (uint32_t x = 1; x < 5; ++x)
    for (uint32_t y = 1; y < 4; ++y)
      for (uint32_t z = 0; z < 3; ++z)
        if (rng.next_unit() < 0.6)
          g.at(x, y, z) = static_cast<uint8_t>(1 + rng.next_below(17));
  OccGrid out =
      warp_grid(g, Homography::translation(2.0, 1.0), WarpMode::backward_nn);
  CHECK(column_multiset(out) == column_multiset(g));
}

TEST_CASE("warp keeps grid metadata") {
  OccGrid g = make_grid(4, 4, 2, 0.25f);
  g.origin_m = {1.0, 2.0, 3.0};
  OccGrid out =
      warp_grid(g, Homography::translation(1.0, 0.0), WarpMode::backward_nn);
  CHECK(out.voxel_size_m == 0.25f);
  CHECK(out.origin_m == g.origin_m);
}

TEST_CASE("forward splat collisions keep the denser column") {
  // Horizontal shrink by 3 funnels sources 0 and 1 onto target 0 and
  // sources 2 and 3 onto target 1.
  Homography shrink;
  shrink.m(0, 0) = 1.0 / 3.0;
  OccGrid g = make_grid(4, 1, 4);
  g.at(0, 0, 0) = 4;  // density 1
  g.at(1, 0, 0) = 9;  // density 2
  g.at(1, 0, 2) = 9;
  g.at(2, 0, 0) = 10;  // density 2
  g.at(2, 0, 1) = 10;
  g.at(3, 0, 3) = 15;  // density 1
  OccGrid out = warp_grid(g, shrink, WarpMode::forward_splat);
  // target 0: source 1 wins (2 voxels beats 1)
  CHECK(out.at(0, 0, 0) == 9);
  CHECK(out.at(0, 0, 2) == 9);
  // target 1: source 2 arrives first and source 3 is sparser
  CHECK(out.at(1, 0, 0) == 10);
  CHECK(out.at(1, 0, 1) == 10);
  CHECK(out.at(1, 0, 3) == 0);
}

TEST_CASE("forward splat keeps the smaller source index on density ties") {
  Homography shrink;
  shrink.m(0, 0) = 1.0 / 3.0;
  OccGrid g = make_grid(4, 1, 4);
  g.at(0, 0, 1) = 4;  // density 1, smaller x
  g.at(1, 0, 2) = 9;  // density 1, same target cell
  OccGrid out = warp_grid(g, shrink, WarpMode::forward_splat);
  CHECK(out.at(0, 0, 1) == 4);
  CHECK(out.at(0, 0, 2) == 0);
}

TEST_CASE("forward splat backfills untouched targets from the backward map") {
  // Pure translation by (2,0): targets x < 2 have no splatted source; the
  // backward pass leaves them empty because their sources are off-grid.
  OccGrid g = make_grid(4, 1, 2);
  g.at(0, 0, 0) = 4;
  g.at(3, 0, 0) = 9;  // splats off-grid and is dropped
  OccGrid out =
      warp_grid(g, Homography::translation(2.0, 0.0), WarpMode::forward_splat);
  OccGrid expected = make_grid(4, 1, 2);
  expected.at(2, 0, 0) = 4;
  CHECK(out == expected);
}

TEST_CASE("copy_paste repeats the last frame") {
  SplitMix64 rng(41);
  OccSequence history;
  history.frames.push_back(testutil::random_grid(rng, 4, 4, 2, 18));
  history.frames.push_back(testutil::random_grid(rng, 4, 4, 2, 18));
  OccSequence out = copy_paste(history, 4);
  REQUIRE(out.size() == 4);
  for (const OccGrid& f : out.frames) CHECK(f == history.frames.back());
}

TEST_CASE("copy_paste validates its inputs") {
  OccSequence empty;
  CHECK(code_of([&] { copy_paste(empty, 4); }) == ErrorCode::HistoryTooShort);
  OccSequence one;
  one.frames.push_back(make_grid(2, 2, 2));
  CHECK(code_of([&] { copy_paste(one, 0); }) == ErrorCode::ConfigInvalid);
}

TEST_CASE("forecast demands at least two history frames") {
  OccSequence one;
  one.frames.push_back(make_grid(4, 4, 2));
  ForecastParams p;
  CHECK(code_of([&] { forecast(one, p); }) == ErrorCode::HistoryTooShort);
  CHECK(code_of([&] { forecast(OccSequence{}, p); }) ==
        ErrorCode::EmptySequence);
}

TEST_CASE("forecast params reject a non-positive horizon") {
  ForecastParams p;
  p.horizon = 0;
  CHECK(code_of([&] { p.validate(); }) == ErrorCode::ConfigInvalid);
}

TEST_CASE("static scene forecast repeats the last frame exactly") {
  SynthResult synth = generate(find_preset("static"));
  OccSequence history = history_of(synth, 8);
  ForecastParams p;
  ForecastInfo info;
  OccSequence out = forecast(history, p, &info);
  REQUIRE(out.size() == 4);
  CHECK_FALSE(info.used_fallback);
  for (const OccGrid& f : out.frames) CHECK(f == history.frames.back());
}

TEST_CASE("translating car forecast reproduces the future frames") {
  SynthResult synth = generate(find_preset("translating_car"));
  OccSequence history = history_of(synth, 8);
  ForecastParams p;
  p.flow.block_size = 5;
  ForecastInfo info;
  OccSequence out = forecast(history, p, &info);
  REQUIRE(out.size() == 4);
  CHECK_FALSE(info.used_fallback);
  // The estimated motion is the car's (2,0) cells/frame translation.
  CHECK(info.model.m(0, 2) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(info.model.m(1, 2) == doctest::Approx(0.0).epsilon(1e-9));
  for (int k = 0; k < 4; ++k) {
    CHECK(out.frames[static_cast<std::size_t>(k)] ==
          synth.sequence.frames[static_cast<std::size_t>(8 + k)]);
  }
}

TEST_CASE("composed and iterated forecasts agree on integer translation") {
  SynthResult synth = generate(find_preset("translating_car"));
  OccSequence history = history_of(synth, 8);
  ForecastParams p;
  p.flow.block_size = 5;
  OccSequence composed = forecast(history, p);
  OccSequence iterated = forecast_iterated(history, p);
  REQUIRE(composed.size() == iterated.size());
  for (std::size_t i = 0; i < composed.size(); ++i)
    CHECK(composed.frames[i] == iterated.frames[i]);
}

TEST_CASE("textureless history falls back to copy_paste") {
  OccSequence history;
  history.frames.push_back(make_grid(16, 16, 4));
  history.frames.push_back(make_grid(16, 16, 4));
  history.frames.back().at(8, 8, 0) = 4;  // a lone voxel, not enough blocks
  ForecastParams p;
  ForecastInfo info;
  OccSequence out = forecast(history, p, &info);
  CHECK(info.used_fallback);
  CHECK(info.model.m == Eigen::Matrix3d::Identity());
  OccSequence baseline = copy_paste(history, p.horizon);
  REQUIRE(out.size() == baseline.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    CHECK(out.frames[i] == baseline.frames[i]);
}

}  // TEST_SUITE
