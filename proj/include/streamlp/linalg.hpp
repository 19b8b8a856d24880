#pragma once

#include <array>
#include <cmath>
#include <cstring>
#include <cstddef>
#include <span>

#include "streamlp/types.hpp"

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace streamlp::linalg {

using Lanes = double __attribute__((vector_size(64)));

inline Lanes load_lanes(const double* p) {
  Lanes v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

// acc + x * y lane by lane with a single rounding per lane.
inline Lanes fma_lanes(const Lanes& x, const Lanes& y, const Lanes& acc) {
#if defined(__AVX512F__)
  return _mm512_fmadd_pd(x, y, acc);
#else
  Lanes out;
  for (int k = 0; k < 8; ++k) out[k] = std::fma(x[k], y[k], acc[k]);
  return out;
#endif
}

inline double reduce_lanes(const Lanes& acc, const double* a, const double* b, std::size_t i,
                           std::size_t n) {
  double l[8];
  std::memcpy(l, &acc, sizeof l);
  for (std::size_t k = 0; i < n; ++i, ++k) l[k] = std::fma(a[i], b[i], l[k]);
  return ((l[0] + l[4]) + (l[2] + l[6])) + ((l[1] + l[5]) + (l[3] + l[7]));
}

/// Inner product with a fixed eight-lane fused multiply-add accumulation
/// order and a fixed reduction tree. Every similarity
/// in the engine goes through this routine, so the same pair of vectors always
/// produces the same bits no matter which code path asks (and dot(a, b) is
/// bitwise equal to dot(b, a)).
inline double dot(const double* a, const double* b, std::size_t n) {
  Lanes acc = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) acc = fma_lanes(load_lanes(a + i), load_lanes(b + i), acc);
  return reduce_lanes(acc, a, b, i, n);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  return dot(a.data(), b.data(), a.size());
}

#if defined(__AVX512F__)
// Four accumulators (one query against four rows) reduced to four results.
inline void reduce4_avx512(__m512d a0, __m512d a1, __m512d a2, __m512d a3, double* out) {
  const __m512d x = _mm512_add_pd(_mm512_shuffle_f64x2(a0, a1, 0x44),
                                  _mm512_shuffle_f64x2(a0, a1, 0xEE));
  const __m512d y = _mm512_add_pd(_mm512_shuffle_f64x2(a2, a3, 0x44),
                                  _mm512_shuffle_f64x2(a2, a3, 0xEE));
  const __m512d z =
      _mm512_add_pd(_mm512_shuffle_f64x2(x, y, 0x88), _mm512_shuffle_f64x2(x, y, 0xDD));
  const __m512d r = _mm512_add_pd(_mm512_unpacklo_pd(z, z), _mm512_unpackhi_pd(z, z));
  alignas(64) double lanes[8];
  _mm512_store_pd(lanes, r);
  out[0] = lanes[0];
  out[1] = lanes[2];
  out[2] = lanes[4];
  out[3] = lanes[6];
}
#endif

#if defined(__AVX512F__)
// Four dot products of length 8 * chunks, reduced with the same tree as
// reduce_lanes() so each result matches dot() bit for bit.
inline void dot4_avx512(const double* q, const double* r0, const double* r1, const double* r2,
                        const double* r3, std::size_t n, double* out) {
  __m512d a0 = _mm512_setzero_pd(), a1 = a0, a2 = a0, a3 = a0;
  for (std::size_t i = 0; i < n; i += 8) {
    const __m512d x = _mm512_loadu_pd(q + i);
    a0 = _mm512_fmadd_pd(x, _mm512_loadu_pd(r0 + i), a0);
    a1 = _mm512_fmadd_pd(x, _mm512_loadu_pd(r1 + i), a1);
    a2 = _mm512_fmadd_pd(x, _mm512_loadu_pd(r2 + i), a2);
    a3 = _mm512_fmadd_pd(x, _mm512_loadu_pd(r3 + i), a3);
  }
  reduce4_avx512(a0, a1, a2, a3, out);
}
#endif

/// out[j] = dot(v, rows.row(j)) for the first `count` rows. Four rows share
/// each load of `v`; every result is bitwise equal to dot().
inline void dot_rows(std::span<const double> v, const Matrix& rows, std::size_t count,
                     std::span<double> out) {
  const std::size_t d = rows.cols();
  const double* q = v.data();
  const double* base = rows.data().data();
  const std::size_t body = d - d % 8;
  std::size_t j = 0;
  for (; j + 4 <= count; j += 4) {
    const double* r0 = base + j * d;
    const double* r1 = r0 + d;
    const double* r2 = r1 + d;
    const double* r3 = r2 + d;
#if defined(__AVX512F__)
    if (body == d) {
      dot4_avx512(q, r0, r1, r2, r3, d, out.data() + j);
      continue;
    }
#endif
    Lanes a0 = {}, a1 = {}, a2 = {}, a3 = {};
    for (std::size_t i = 0; i < body; i += 8) {
      const Lanes x = load_lanes(q + i);
      a0 = fma_lanes(x, load_lanes(r0 + i), a0);
      a1 = fma_lanes(x, load_lanes(r1 + i), a1);
      a2 = fma_lanes(x, load_lanes(r2 + i), a2);
      a3 = fma_lanes(x, load_lanes(r3 + i), a3);
    }
    out[j] = reduce_lanes(a0, q, r0, body, d);
    out[j + 1] = reduce_lanes(a1, q, r1, body, d);
    out[j + 2] = reduce_lanes(a2, q, r2, body, d);
    out[j + 3] = reduce_lanes(a3, q, r3, body, d);
  }
  for (; j < count; ++j) out[j] = dot(q, base + j * d, d);
}

/// True when any of s[0..8) is >= threshold.
inline bool any_at_least8(const double* s, double threshold) {
#if defined(__AVX512F__)
  return _mm512_cmp_pd_mask(_mm512_loadu_pd(s), _mm512_set1_pd(threshold), _CMP_GE_OQ) != 0;
#else
  bool any = false;
  for (std::size_t t = 0; t < 8; ++t) any |= s[t] >= threshold;
  return any;
#endif
}

/// Four queries against `count` contiguous rows of length d starting at `base`:
/// out[k][j] = dot(queries[k], base + j * d). Each row load is shared by the
/// four queries; results match dot() bitwise.
inline void dot_rows4(const std::array<const double*, 4>& queries, const double* base,
                      std::size_t d, std::size_t count, const std::array<double*, 4>& out) {
  std::size_t j = 0;
#if defined(__AVX512F__)
  if (d % 8 == 0) {
    const double *q0 = queries[0], *q1 = queries[1], *q2 = queries[2], *q3 = queries[3];
    for (; j + 4 <= count; j += 4) {
      const double* r0 = base + j * d;
      const double* r1 = r0 + d;
      const double* r2 = r1 + d;
      const double* r3 = r2 + d;
      __m512d acc[4][4];
      for (auto& row : acc)
        for (auto& a : row) a = _mm512_setzero_pd();
      for (std::size_t i = 0; i < d; i += 8) {
        const __m512d y0 = _mm512_loadu_pd(r0 + i);
        const __m512d y1 = _mm512_loadu_pd(r1 + i);
        const __m512d y2 = _mm512_loadu_pd(r2 + i);
        const __m512d y3 = _mm512_loadu_pd(r3 + i);
        const double* qs[4] = {q0, q1, q2, q3};
        for (int k = 0; k < 4; ++k) {
          const __m512d x = _mm512_loadu_pd(qs[k] + i);
          acc[k][0] = _mm512_fmadd_pd(x, y0, acc[k][0]);
          acc[k][1] = _mm512_fmadd_pd(x, y1, acc[k][1]);
          acc[k][2] = _mm512_fmadd_pd(x, y2, acc[k][2]);
          acc[k][3] = _mm512_fmadd_pd(x, y3, acc[k][3]);
        }
      }
      for (int k = 0; k < 4; ++k) {
        reduce4_avx512(acc[k][0], acc[k][1], acc[k][2], acc[k][3], out[k] + j);
      }
    }
  }
#endif
  for (int k = 0; k < 4; ++k) {
    for (std::size_t jj = j; jj < count; ++jj) out[k][jj] = dot(queries[k], base + jj * d, d);
  }
}

inline void dot_rows4(const std::array<const double*, 4>& queries, const Matrix& rows,
                      std::size_t count, const std::array<double*, 4>& out) {
  dot_rows4(queries, rows.data().data(), rows.cols(), count, out);
}

inline void dot_rows(std::span<const double> v, const Matrix& rows, std::span<double> out) {
  dot_rows(v, rows, rows.rows(), out);
}

inline double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

/// Scales `v` to unit length in place. A zero vector is left as zero and the
/// function returns false.
inline bool normalize_in_place(std::span<double> v) {
  const double n = norm(v);
  if (!(n > 0.0)) {
    for (double& x : v) x = 0.0;
    return false;
  }
  for (double& x : v) x /= n;
  return true;
}

}  // namespace streamlp::linalg
