#ifndef OCCFLOW_CLASS_TABLE_HPP
#define OCCFLOW_CLASS_TABLE_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace occflow {

inline constexpr int kDefaultNumClasses = 18;
inline constexpr uint8_t kFreeClass = 0;

// Semantic class registry. Id 0 is free space and is excluded from mIoU
// unless a caller opts in via the evaluable flags.
struct ClassTable {
  std::vector<std::string> names;
  std::vector<bool> evaluable;

  int num_classes() const { return static_cast<int>(names.size()); }

  // Ids with evaluable set; this is the default class set for mIoU.
  std::vector<int> evaluable_classes() const;
};

// 18-class convention: 0 = free, 1..16 the named categories, 17 = general
// object. All evaluable except free.
ClassTable default_class_table();

}  // namespace occflow

#endif  // OCCFLOW_CLASS_TABLE_HPP
