#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "pzbeam/error.hpp"

namespace pzbeam {

/// Uniform mesh on (0, L]. Node 0 carries the clamped value and is not stored;
/// unknowns live at x_j = j*dx for j = 1..N.
class Grid {
 public:
  Grid(double length, std::size_t cells) : length_(length), cells_(cells) {
    if (!(length > 0.0) || !std::isfinite(length)) {
      throw Error(ErrorKind::InvalidArgument, "grid length must be positive and finite");
    }
    if (cells < 2) throw Error(ErrorKind::InvalidArgument, "grid needs at least 2 cells");
    dx_ = length / static_cast<double>(cells);
  }

  double length() const noexcept { return length_; }
  std::size_t cells() const noexcept { return cells_; }
  std::size_t size() const noexcept { return cells_; }
  double dx() const noexcept { return dx_; }

  /// Coordinate of stored node i (0-based), i.e. x_{i+1}.
  double x(std::size_t i) const noexcept {
    return length_ * static_cast<double>(i + 1) / static_cast<double>(cells_);
  }

  /// Trapezoid weight of stored node i; the last node sits on the Neumann end.
  double weight(std::size_t i) const noexcept { return i + 1 == cells_ ? 0.5 * dx_ : dx_; }

  friend bool operator==(const Grid& a, const Grid& b) noexcept {
    return a.length_ == b.length_ && a.cells_ == b.cells_;
  }

 private:
  double length_;
  std::size_t cells_;
  double dx_;
};

/// Nodal values of a scalar field at x_1..x_N.
class FieldVec {
 public:
  FieldVec() = default;
  explicit FieldVec(std::size_t n, double value = 0.0) : values_(n, value) {}
  explicit FieldVec(std::vector<double> values) : values_(std::move(values)) {}
  FieldVec(std::initializer_list<double> values) : values_(values) {}

  std::size_t size() const noexcept { return values_.size(); }
  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  const std::vector<double>& vector() const noexcept { return values_; }

  bool all_finite() const noexcept {
    for (double v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  FieldVec& operator+=(const FieldVec& other) {
    check_same(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
  }
  FieldVec& operator-=(const FieldVec& other) {
    check_same(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
  }
  FieldVec& operator*=(double s) noexcept {
    for (double& v : values_) v *= s;
    return *this;
  }

  friend FieldVec operator+(FieldVec a, const FieldVec& b) { return a += b; }
  friend FieldVec operator-(FieldVec a, const FieldVec& b) { return a -= b; }
  friend FieldVec operator*(double s, FieldVec a) { return a *= s; }
  friend bool operator==(const FieldVec&, const FieldVec&) = default;

 private:
  void check_same(const FieldVec& other) const {
    if (other.size() != size()) {
      throw Error(ErrorKind::DimensionMismatch, "field sizes differ: " + std::to_string(size()) +
                                                    " vs " + std::to_string(other.size()));
    }
  }

  std::vector<double> values_;
};

inline void require_conforming(const Grid& grid, const FieldVec& u, const char* what = "field") {
  if (u.size() != grid.size()) {
    throw Error(ErrorKind::DimensionMismatch, std::string(what) + " has " + std::to_string(u.size()) +
                                                  " nodes, grid has " + std::to_string(grid.size()));
  }
}

/// Samples `fn(x)` at the stored nodes.
template <class Fn>
FieldVec sample(const Grid& grid, Fn&& fn) {
  FieldVec out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = fn(grid.x(i));
  return out;
}

}  // namespace pzbeam
