#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "toricmirror/rational.hpp"

namespace toricmirror {

using RatMatrix = std::vector<std::vector<Rational>>;

// Row echelon form in place; returns the pivot columns.
inline std::vector<int> row_reduce(RatMatrix& a) {
  std::vector<int> pivots;
  if (a.empty()) return pivots;
  const size_t rows = a.size(), cols = a[0].size();
  size_t r = 0;
  for (size_t c = 0; c < cols && r < rows; ++c) {
    size_t p = r;
    while (p < rows && a[p][c] == 0) ++p;
    if (p == rows) continue;
    std::swap(a[p], a[r]);
    Rational inv = 1 / a[r][c];
    for (size_t j = c; j < cols; ++j) a[r][j] *= inv;
    for (size_t i = 0; i < rows; ++i) {
      if (i == r || a[i][c] == 0) continue;
      Rational f = a[i][c];
      for (size_t j = c; j < cols; ++j) a[i][j] -= f * a[r][j];
    }
    pivots.push_back(static_cast<int>(c));
    ++r;
  }
  return pivots;
}

inline int rank(RatMatrix a) { return static_cast<int>(row_reduce(a).size()); }

inline Rational determinant(RatMatrix a) {
  const size_t n = a.size();
  Rational det = 1;
  for (size_t c = 0; c < n; ++c) {
    size_t p = c;
    while (p < n && a[p][c] == 0) ++p;
    if (p == n) return 0;
    if (p != c) {
      std::swap(a[p], a[c]);
      det = -det;
    }
    det *= a[c][c];
    for (size_t i = c + 1; i < n; ++i) {
      if (a[i][c] == 0) continue;
      Rational f = a[i][c] / a[c][c];
      for (size_t j = c; j < n; ++j) a[i][j] -= f * a[c][j];
    }
  }
  return det;
}

inline std::optional<RatMatrix> inverse(const RatMatrix& a) {
  const size_t n = a.size();
  RatMatrix aug(n, std::vector<Rational>(2 * n));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) aug[i][j] = a[i][j];
    aug[i][n + i] = 1;
  }
  auto piv = row_reduce(aug);
  if (piv.size() < n || piv[n - 1] != static_cast<int>(n - 1)) return std::nullopt;
  RatMatrix inv(n, std::vector<Rational>(n));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) inv[i][j] = aug[i][n + j];
  return inv;
}

// Basis of the kernel of a (columns are unknowns).
inline RatMatrix kernel(RatMatrix a, size_t cols) {
  auto piv = row_reduce(a);
  std::vector<bool> is_pivot(cols, false);
  for (int p : piv) is_pivot[p] = true;
  RatMatrix basis;
  for (size_t f = 0; f < cols; ++f) {
    if (is_pivot[f]) continue;
    std::vector<Rational> v(cols);
    v[f] = 1;
    for (size_t r = 0; r < piv.size(); ++r) v[piv[r]] = -a[r][f];
    basis.push_back(std::move(v));
  }
  return basis;
}

// Exact simplex for: maximize c.x subject to A x <= b, x >= 0.
// Two-phase tableau method with Bland's rule, so it always terminates.
struct LPResult {
  enum Status { Optimal, Infeasible, Unbounded } status;
  std::vector<Rational> x;
  Rational value;
};

inline LPResult solve_lp(const RatMatrix& A, const std::vector<Rational>& b,
                         const std::vector<Rational>& c) {
  const size_t m = A.size(), n = c.size();
  // Columns: n structural, m slack, m artificial, then rhs.
  const size_t cols = n + 2 * m + 1;
  RatMatrix t(m, std::vector<Rational>(cols));
  std::vector<size_t> basis(m);
  for (size_t i = 0; i < m; ++i) {
    Rational sign = b[i] < 0 ? -1 : 1;
    for (size_t j = 0; j < n; ++j) t[i][j] = sign * A[i][j];
    t[i][n + i] = sign;
    t[i][n + m + i] = 1;
    t[i][cols - 1] = sign * b[i];
    basis[i] = n + m + i;
  }

  auto pivot = [&](size_t r, size_t col) {
    Rational inv = 1 / t[r][col];
    for (auto& v : t[r]) v *= inv;
    for (size_t i = 0; i < m; ++i) {
      if (i == r || t[i][col] == 0) continue;
      Rational f = t[i][col];
      for (size_t j = 0; j < cols; ++j)
        if (t[r][j] != 0) t[i][j] -= f * t[r][j];
    }
    basis[r] = col;
  };

  // Runs the simplex for objective `obj` (maximize) over allowed columns.
  auto run = [&](const std::vector<Rational>& obj, size_t allowed) -> bool {
    for (;;) {
      // reduced cost of column j: obj_j - sum_i obj_{basis i} t[i][j]
      size_t enter = allowed;
      for (size_t j = 0; j < allowed; ++j) {
        Rational rc = obj[j];
        for (size_t i = 0; i < m; ++i)
          if (t[i][j] != 0) rc -= obj[basis[i]] * t[i][j];
        if (rc > 0) {
          enter = j;
          break;
        }
      }
      if (enter == allowed) return true;
      size_t leave = m;
      Rational best;
      for (size_t i = 0; i < m; ++i) {
        if (t[i][enter] <= 0) continue;
        Rational ratio = t[i][cols - 1] / t[i][enter];
        if (leave == m || ratio < best || (ratio == best && basis[i] < basis[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave == m) return false;
      pivot(leave, enter);
    }
  };

  std::vector<Rational> phase1(cols - 1);
  for (size_t i = 0; i < m; ++i) phase1[n + m + i] = -1;
  run(phase1, cols - 1);
  Rational infeas = 0;
  for (size_t i = 0; i < m; ++i)
    if (basis[i] >= n + m) infeas += t[i][cols - 1];
  if (infeas != 0) return {LPResult::Infeasible, {}, 0};
  // Drive remaining zero-level artificials out of the basis where possible.
  for (size_t i = 0; i < m; ++i) {
    if (basis[i] < n + m) continue;
    for (size_t j = 0; j < n + m; ++j)
      if (t[i][j] != 0) {
        pivot(i, j);
        break;
      }
  }
  std::vector<Rational> phase2(cols - 1);
  for (size_t j = 0; j < n; ++j) phase2[j] = c[j];
  for (size_t i = 0; i < m; ++i) phase2[n + m + i] = 0;
  // Artificial columns are excluded from entering in phase two.
  if (!run(phase2, n + m)) return {LPResult::Unbounded, {}, 0};
  LPResult res{LPResult::Optimal, std::vector<Rational>(n), 0};
  for (size_t i = 0; i < m; ++i)
    if (basis[i] < n) res.x[basis[i]] = t[i][cols - 1];
  for (size_t j = 0; j < n; ++j) res.value += c[j] * res.x[j];
  return res;
}

}  // namespace toricmirror
