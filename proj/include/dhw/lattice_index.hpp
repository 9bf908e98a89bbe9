#pragma once

#include <array>
#include <cassert>
#include <compare>
#include <cstddef>
#include <initializer_list>
#include <string>

namespace dhw {

/// Integer coordinates of a dual-lattice point with respect to the dual basis.
/// Dimension is 1, 2 or 3; unused trailing slots are zero so that the default
/// comparison is lexicographic in the used coordinates.
class LatticeIndex {
 public:
  static constexpr int max_dim = 3;

  LatticeIndex() = default;
  explicit LatticeIndex(int dim) : dim_(dim) { assert(dim >= 1 && dim <= max_dim); }
  LatticeIndex(std::initializer_list<int> values) : dim_(static_cast<int>(values.size())) {
    assert(dim_ >= 1 && dim_ <= max_dim);
    std::size_t i = 0;
    for (int v : values) n_[i++] = v;
  }

  static LatticeIndex zero(int dim) { return LatticeIndex(dim); }

  [[nodiscard]] int dim() const { return dim_; }
  int& operator[](int i) { return n_[static_cast<std::size_t>(i)]; }
  int operator[](int i) const { return n_[static_cast<std::size_t>(i)]; }

  [[nodiscard]] bool is_zero() const { return n_[0] == 0 && n_[1] == 0 && n_[2] == 0; }

  LatticeIndex operator-() const {
    LatticeIndex r(dim_);
    for (int i = 0; i < dim_; ++i) r[i] = -(*this)[i];
    return r;
  }
  LatticeIndex operator-(const LatticeIndex& o) const {
    assert(dim_ == o.dim_);
    LatticeIndex r(dim_);
    for (int i = 0; i < dim_; ++i) r[i] = (*this)[i] - o[i];
    return r;
  }
  LatticeIndex operator+(const LatticeIndex& o) const {
    assert(dim_ == o.dim_);
    LatticeIndex r(dim_);
    for (int i = 0; i < dim_; ++i) r[i] = (*this)[i] + o[i];
    return r;
  }
  friend LatticeIndex operator*(int k, const LatticeIndex& v) {
    LatticeIndex r(v.dim_);
    for (int i = 0; i < v.dim_; ++i) r[i] = k * v[i];
    return r;
  }

  auto operator<=>(const LatticeIndex&) const = default;

  [[nodiscard]] std::string str() const {
    std::string s = "(";
    for (int i = 0; i < dim_; ++i) {
      if (i) s += ",";
      s += std::to_string((*this)[i]);
    }
    return s + ")";
  }

 private:
  int dim_ = 1;
  std::array<int, max_dim> n_{};
};

}  // namespace dhw
