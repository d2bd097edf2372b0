#pragma once

#include <cstddef>
#include <vector>

#include "alignlab/linalg.hpp"

namespace alignlab {

// One round of feedback. `slate` holds action indices into the instance's
// action set; `preferred` is the 0-based position within the slate.
struct PreferenceRecord {
  Vector context;
  std::vector<std::size_t> slate;
  std::size_t preferred = 0;

  friend bool operator==(const PreferenceRecord&, const PreferenceRecord&) = default;
};

using Dataset = std::vector<PreferenceRecord>;

}  // namespace alignlab
