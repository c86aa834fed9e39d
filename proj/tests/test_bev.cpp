#include <string>

#include "doctest.h"
#include "occflow/bev.hpp"
#include "occflow/rng.hpp"
#include "test_util.hpp"

using namespace occflow;
using testutil::code_of;

TEST_SUITE("bev") {

TEST_CASE("height is the topmost occupied z") {
  OccGrid g = make_grid(2, 2, 6);
  g.at(0, 0, 0) = 4;
  g.at(0, 0, 2) = 4;
  g.at(0, 0, 5) = 4;
  BevMap map = project_height(g);
  CHECK(map.at(0, 0) == 5);
  CHECK(map.at(1, 0) == kEmptyColumn);
  CHECK(map.depth == 6);
}

TEST_CASE("all-free grid projects to all sentinels") {
  BevMap map = project_height(make_grid(3, 3, 4));
  for (int32_t h : map.heights) CHECK(h == kEmptyColumn);
}

TEST_CASE("z = 0 is a valid height, distinct from the sentinel") {
  OccGrid g = make_grid(2, 2, 4);
  g.at(1, 1, 0) = 3;
  BevMap map = project_height(g);
  CHECK(map.at(1, 1) == 0);
  CHECK(map.at(0, 0) == kEmptyColumn);
}

TEST_CASE("label map takes the topmost label, empty columns map to free") {
  OccGrid g = make_grid(2, 2, 6);
  g.at(0, 1, 1) = 4;   // car below
  g.at(0, 1, 4) = 16;  // vegetation on top
  BevLabelMap labels = project_label(g);
  CHECK(labels.at(0, 1) == 16);
  CHECK(labels.at(0, 0) == 0);
}

TEST_CASE("projections match a brute-force column scan") {
  SplitMix64 rng(31);
  OccGrid g = testutil::random_grid(rng, 8, 8, 4, 18, 0.35);
  BevMap map = project_height(g);
  BevLabelMap labels = project_label(g);
  for (uint32_t x = 0; x < 8; ++x) {
    for (uint32_t y = 0; y < 8; ++y) {
      int32_t top = kEmptyColumn;
      for (uint32_t z = 0; z < 4; ++z) {
        if (g.at(x, y, z) != kFreeClass) top = static_cast<int32_t>(z);
      }
      CHECK(map.at(x, y) == top);
      const uint8_t expect_label =
          top == kEmptyColumn ? kFreeClass
                              : g.at(x, y, static_cast<uint32_t>(top));
      CHECK(labels.at(x, y) == expect_label);
      // consistency: label is free exactly when the column is empty
      CHECK((labels.at(x, y) == kFreeClass) == (map.at(x, y) == kEmptyColumn));
    }
  }
}

TEST_CASE("column lists occupied voxels in ascending z") {
  OccGrid g = make_grid(2, 2, 6);
  g.at(1, 0, 0) = 4;
  g.at(1, 0, 3) = 4;
  auto col = column(g, 1, 0);
  REQUIRE(col.size() == 2);
  CHECK(col[0] == std::pair<uint32_t, uint8_t>{0, 4});
  CHECK(col[1] == std::pair<uint32_t, uint8_t>{3, 4});
  CHECK(column(g, 0, 0).empty());
  CHECK(code_of([&] { column(g, 2, 0); }) == ErrorCode::IndexOutOfRange);
  CHECK(code_of([&] { column(g, 0, 7); }) == ErrorCode::IndexOutOfRange);
}

TEST_CASE("columns reassemble the original grid") {
  SplitMix64 rng(77);
  OccGrid g = testutil::random_grid(rng, 6, 5, 4, 18, 0.4);
  OccGrid rebuilt = make_grid(6, 5, 4);
  for (uint32_t x = 0; x < 6; ++x) {
    for (uint32_t y = 0; y < 5; ++y) {
      for (const auto& [z, label] : column(g, x, y)) {
        rebuilt.at(x, y, z) = label;
      }
    }
  }
  CHECK(rebuilt == g);
}

TEST_CASE("pgm dump stores height plus one in 16-bit big-endian samples") {
  OccGrid g = make_grid(2, 1, 4);
  g.at(1, 0, 2) = 4;
  const std::string pgm = to_pgm(project_height(g));
  CHECK(pgm.rfind("P5\n", 0) == 0);
  CHECK(pgm.find("height+1") != std::string::npos);
  // 2x1 map, maxval line, then 2 samples: sentinel -> 0, height 2 -> 3.
  REQUIRE(pgm.size() >= 4);
  const auto* tail =
      reinterpret_cast<const unsigned char*>(pgm.data() + pgm.size() - 4);
  CHECK(tail[0] == 0);
  CHECK(tail[1] == 0);
  CHECK(tail[2] == 0);
  CHECK(tail[3] == 3);
}

TEST_CASE("csv dumps are rows by y with x-ordered columns") {
  OccGrid g = make_grid(2, 2, 4);
  g.at(0, 1, 2) = 4;
  g.at(1, 0, 0) = 9;
  CHECK(to_csv(project_height(g)) == "-1,0\n2,-1\n");
  CHECK(to_csv(project_label(g)) == "0,9\n4,0\n");
}

}  // TEST_SUITE
