#ifndef OCCFLOW_TESTS_TEST_UTIL_HPP
#define OCCFLOW_TESTS_TEST_UTIL_HPP

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "occflow/errors.hpp"
#include "occflow/occ_grid.hpp"
#include "occflow/rng.hpp"

namespace testutil {

// Runs fn, which must throw occflow::Error, and returns the code thrown.
template <typename Fn>
occflow::ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const occflow::Error& e) {
    return e.code();
  }
  throw std::runtime_error("expected an occflow::Error, none thrown");
}

// FNV-1a over a byte buffer; used to pin golden artifacts.
inline uint64_t fnv1a64(const std::vector<uint8_t>& bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

// Fresh empty directory under the system temp root.
inline std::filesystem::path make_temp_dir(const std::string& tag) {
  static std::atomic<uint64_t> counter{0};
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  const auto dir = std::filesystem::temp_directory_path() /
                   ("occflow_" + tag + "_" + std::to_string(stamp) + "_" +
                    std::to_string(counter.fetch_add(1)));
  std::filesystem::create_directories(dir);
  return dir;
}

// Seeded grid with roughly occupied_prob occupied voxels, labels in
// [1, num_classes).
inline occflow::OccGrid random_grid(occflow::SplitMix64& rng, uint32_t dims_x,
                                    uint32_t dims_y, uint32_t dims_z,
                                    uint32_t num_classes,
                                    double occupied_prob = 0.5) {
  occflow::OccGrid g = occflow::make_grid(dims_x, dims_y, dims_z);
  for (auto& label : g.labels) {
    if (rng.next_unit() < occupied_prob) {
      label = static_cast<uint8_t>(1 + rng.next_below(num_classes - 1));
    }
  }
  return g;
}

}  // namespace testutil

#endif  // OCCFLOW_TESTS_TEST_UTIL_HPP
