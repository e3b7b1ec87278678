#pragma once

#include <string>
#include <vector>

namespace hce {

/// One executed invariant: measured value against its tolerance.
struct InvariantRecord {
  std::string name;
  double value = 0.0;
  double tol = 0.0;
  bool pass = false;
  bool soft = false;  // reported, but does not affect the exit status
  std::string note;
};

inline InvariantRecord check_le(std::string name, double value, double tol) {
  return {std::move(name), value, tol, value <= tol, false, {}};
}

inline bool all_hard_pass(const std::vector<InvariantRecord>& records) {
  for (const auto& r : records)
    if (!r.pass && !r.soft) return false;
  return true;
}

}  // namespace hce
