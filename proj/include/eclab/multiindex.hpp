#pragma once
// Increasing multi-index bookkeeping for differential forms on the n-torus.
//
// A degree-k form is stored as one scalar coefficient per increasing
// multi-index I = (i_1 < ... < i_k) drawn from {0, ..., n-1}, and the
// component list is ordered lexicographically.  All wedge/derivative sign
// conventions live here so the field code never reasons about permutations.

#include <algorithm>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

namespace eclab {

using MultiIndex = std::vector<int>;  // strictly increasing, 0-based axes

inline long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// All increasing multi-indices of length k from {0..n-1}, lexicographic.
inline std::vector<MultiIndex> increasing_multi_indices(int n, int k) {
  std::vector<MultiIndex> out;
  if (k < 0 || k > n) return out;
  MultiIndex cur(k);
  for (int i = 0; i < k; ++i) cur[i] = i;
  while (true) {
    out.push_back(cur);
    if (k == 0) break;
    int pos = k - 1;
    while (pos >= 0 && cur[pos] == n - k + pos) --pos;
    if (pos < 0) break;
    ++cur[pos];
    for (int i = pos + 1; i < k; ++i) cur[i] = cur[i - 1] + 1;
  }
  return out;
}

inline int index_position(const std::vector<MultiIndex>& table, const MultiIndex& I) {
  for (std::size_t c = 0; c < table.size(); ++c)
    if (table[c] == I) return static_cast<int>(c);
  throw std::logic_error("multi-index not present in component table");
}

// Sign of the shuffle sorting the concatenation (I, J) of disjoint increasing
// multi-indices into increasing order; 0 if they share an axis.
inline int shuffle_sign(const MultiIndex& I, const MultiIndex& J) {
  int inversions = 0;
  for (int i : I)
    for (int j : J) {
      if (i == j) return 0;
      if (j < i) ++inversions;
    }
  return (inversions % 2 == 0) ? 1 : -1;
}

inline MultiIndex merge_indices(const MultiIndex& I, const MultiIndex& J) {
  MultiIndex K;
  K.reserve(I.size() + J.size());
  K.insert(K.end(), I.begin(), I.end());
  K.insert(K.end(), J.begin(), J.end());
  std::sort(K.begin(), K.end());
  return K;
}

// dx_a ^ dx_I = sign * dx_K with K = sorted(I u {a}); sign 0 if a is in I.
inline std::pair<int, MultiIndex> insert_axis(int a, const MultiIndex& I) {
  int before = 0;
  for (int i : I) {
    if (i == a) return {0, {}};
    if (i < a) ++before;
  }
  MultiIndex K = I;
  K.insert(K.begin() + before, a);
  return {(before % 2 == 0) ? 1 : -1, K};
}

namespace detail {
template <typename Mat>
inline auto minor_det(const Mat& A, const MultiIndex& rows, const MultiIndex& cols)
    -> std::decay_t<decltype(A(0, 0) + A(0, 0))> {
  using Scalar = std::decay_t<decltype(A(0, 0) + A(0, 0))>;
  const int k = static_cast<int>(rows.size());
  if (k == 0) return Scalar(1);
  if (k == 1) return A(rows[0], cols[0]);
  if (k == 2)
    return A(rows[0], cols[0]) * A(rows[1], cols[1]) -
           A(rows[0], cols[1]) * A(rows[1], cols[0]);
  // Laplace expansion along the first row; k stays tiny in practice.
  Scalar det(0);
  int sign = 1;
  for (int c = 0; c < k; ++c) {
    MultiIndex sub_rows(rows.begin() + 1, rows.end());
    MultiIndex sub_cols;
    for (int j = 0; j < k; ++j)
      if (j != c) sub_cols.push_back(cols[j]);
    det += Scalar(sign) * A(rows[0], cols[c]) * minor_det(A, sub_rows, sub_cols);
    sign = -sign;
  }
  return det;
}
}  // namespace detail

// k-th compound matrix in the lexicographic increasing multi-index basis:
// C[R,S] = det A[R,S].  Works for any scalar type with matrix-like (i,j)
// access and a resize(rows, cols) member (Eigen dense matrices qualify).
template <typename Mat>
inline Mat compound_matrix(const Mat& A, int k) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n) throw std::invalid_argument("compound_matrix: matrix must be square");
  if (k < 0 || k > n) throw std::invalid_argument("compound_matrix: degree out of range");
  const auto table = increasing_multi_indices(n, k);
  Mat C;
  C.resize(static_cast<long>(table.size()), static_cast<long>(table.size()));
  for (std::size_t r = 0; r < table.size(); ++r)
    for (std::size_t s = 0; s < table.size(); ++s)
      C(static_cast<long>(r), static_cast<long>(s)) = detail::minor_det(A, table[r], table[s]);
  return C;
}

}  // namespace eclab
