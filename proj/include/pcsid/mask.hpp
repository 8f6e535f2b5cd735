#pragma once

#include <vector>

#include "pcsid/errors.hpp"

namespace pcsid {

// Active/inactive flag per configuration coordinate. Inactive coordinates are
// identically zero together with their time derivatives.
class StrainMask {
 public:
  StrainMask() = default;
  explicit StrainMask(std::vector<bool> active);
  static StrainMask full(int num_coordinates);

  int size() const { return static_cast<int>(active_.size()); }
  bool is_active(int i) const { return active_.at(static_cast<std::size_t>(i)); }
  int num_active() const;
  std::vector<int> active_indices() const;
  const std::vector<bool>& flags() const { return active_; }

  // Returns a copy with coordinate i switched off. Throws InvalidMaskError if
  // that would leave no active coordinate.
  StrainMask without(int i) const;

  bool operator==(const StrainMask&) const = default;

 private:
  std::vector<bool> active_;
};

}  // namespace pcsid
