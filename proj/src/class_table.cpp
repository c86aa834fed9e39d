#include "occflow/class_table.hpp"

namespace occflow {

std::vector<int> ClassTable::evaluable_classes() const {
  std::vector<int> out;
  for (int c = 0; c < num_classes(); ++c) {
    if (evaluable[static_cast<std::size_t>(c)]) out.push_back(c);
  }
  return out;
}

ClassTable default_class_table() {
  ClassTable t;
  t.names = {
      "free",
      "barrier",
      "bicycle",
      "bus",
      "car",
      "construction_vehicle",
      "motorcycle",
      "pedestrian",
      "traffic_cone",
      "trailer",
      "truck",
      "driveable_surface",
      "other_flat",
      "sidewalk",
      "terrain",
      "manmade",
      "vegetation",
      "general_object",
  };
  t.evaluable.assign(t.names.size(), true);
  t.evaluable[kFreeClass] = false;
  return t;
}

}  // namespace occflow
