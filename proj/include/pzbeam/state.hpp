#pragma once

#include <cmath>

#include "pzbeam/grid.hpp"

namespace pzbeam {

/// Phase-space element (v, p, v_t, p_t) at time t.
struct State {
  FieldVec v, p, vt, pt;
  double t = 0.0;

  static State zero(const Grid& grid, double t = 0.0) {
    const FieldVec z(grid.size());
    return {z, z, z, z, t};
  }

  void require_conforming(const Grid& grid) const {
    pzbeam::require_conforming(grid, v, "v");
    pzbeam::require_conforming(grid, p, "p");
    pzbeam::require_conforming(grid, vt, "v_t");
    pzbeam::require_conforming(grid, pt, "p_t");
  }

  bool all_finite() const noexcept {
    return v.all_finite() && p.all_finite() && vt.all_finite() && pt.all_finite() && std::isfinite(t);
  }
};

/// Field-wise difference a - b; the time stamp of `a` is kept.
inline State difference(const State& a, const State& b) {
  return {a.v - b.v, a.p - b.p, a.vt - b.vt, a.pt - b.pt, a.t};
}

}  // namespace pzbeam
