#pragma once

#include <vector>

namespace feederopt {

/// One point of the search domain: a phase angle per controllable generator
/// (in model order), the TVR tap position and a 1-based index into the
/// ordered list of admissible configurations.
struct CandidateSolution {
  std::vector<double> phases;
  int n_tap = 0;
  int n_conf = 1;

  bool operator==(const CandidateSolution&) const = default;
};

}  // namespace feederopt
