#include "pcsid/mask.hpp"

#include <algorithm>

namespace pcsid {

StrainMask::StrainMask(std::vector<bool> active) : active_(std::move(active)) {
  if (std::none_of(active_.begin(), active_.end(), [](bool b) { return b; })) {
    throw InvalidMaskError("StrainMask: at least one coordinate must stay active");
  }
}

StrainMask StrainMask::full(int num_coordinates) {
  if (num_coordinates < 1) {
    throw InvalidMaskError("StrainMask: empty mask");
  }
  return StrainMask(std::vector<bool>(static_cast<std::size_t>(num_coordinates), true));
}

int StrainMask::num_active() const {
  return static_cast<int>(std::count(active_.begin(), active_.end(), true));
}

std::vector<int> StrainMask::active_indices() const {
  std::vector<int> idx;
  for (int i = 0; i < size(); ++i) {
    if (active_[static_cast<std::size_t>(i)]) {
      idx.push_back(i);
    }
  }
  return idx;
}

StrainMask StrainMask::without(int i) const {
  if (i < 0 || i >= size()) {
    throw InvalidMaskError("StrainMask: coordinate index out of range");
  }
  std::vector<bool> next = active_;
  next[static_cast<std::size_t>(i)] = false;
  return StrainMask(std::move(next));
}

}  // namespace pcsid
