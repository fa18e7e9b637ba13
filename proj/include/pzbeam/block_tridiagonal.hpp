#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "pzbeam/error.hpp"

namespace pzbeam {

/// Row-major 2x2 block [[a, b], [c, d]].
struct Mat2 {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
};

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline Vec2 operator*(const Mat2& m, const Vec2& v) { return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y}; }
inline Mat2 operator*(const Mat2& m, const Mat2& n) {
  return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d, m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
}

/// Block tridiagonal system with 2x2 blocks, solved by block elimination
/// without pivoting across blocks.
class BlockTridiagonal {
 public:
  explicit BlockTridiagonal(std::size_t n = 0) { resize(n); }

  void resize(std::size_t n) {
    lower.assign(n, Mat2{});
    diag.assign(n, Mat2{});
    upper.assign(n, Mat2{});
    work_.assign(n, Mat2{});
  }
  std::size_t size() const noexcept { return diag.size(); }

  /// Overwrites rhs with the solution. Throws SingularJacobian on a vanishing
  /// pivot block.
  void solve(std::vector<Vec2>& rhs) {
    const std::size_t n = size();
    Mat2 pivot = diag[0];
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) {
        // work_ holds the inverted previous pivot; rhs[i-1] is already scaled by it.
        const Mat2 m = lower[i] * work_[i - 1];
        pivot = diag[i];
        pivot.a -= m.a * upper[i - 1].a + m.b * upper[i - 1].c;
        pivot.b -= m.a * upper[i - 1].b + m.b * upper[i - 1].d;
        pivot.c -= m.c * upper[i - 1].a + m.d * upper[i - 1].c;
        pivot.d -= m.c * upper[i - 1].b + m.d * upper[i - 1].d;
        const Vec2 corr = lower[i] * rhs[i - 1];
        rhs[i].x -= corr.x;
        rhs[i].y -= corr.y;
      }
      const double det = pivot.a * pivot.d - pivot.b * pivot.c;
      const double scale = std::abs(pivot.a * pivot.d) + std::abs(pivot.b * pivot.c);
      if (!(std::abs(det) > 1e-14 * scale) || !std::isfinite(det)) {
        throw Error(ErrorKind::SingularJacobian, "vanishing pivot at block " + std::to_string(i));
      }
      const Mat2 inv{pivot.d / det, -pivot.b / det, -pivot.c / det, pivot.a / det};
      work_[i] = inv;
      rhs[i] = inv * rhs[i];
    }
    // rhs[i] now holds inv(pivot_i) * modified rhs; back substitute.
    for (std::size_t i = n - 1; i-- > 0;) {
      const Vec2 u = upper[i] * rhs[i + 1];
      const Vec2 corr = work_[i] * u;
      rhs[i].x -= corr.x;
      rhs[i].y -= corr.y;
    }
  }

  std::vector<Mat2> lower, diag, upper;

 private:
  std::vector<Mat2> work_;
};

}  // namespace pzbeam
