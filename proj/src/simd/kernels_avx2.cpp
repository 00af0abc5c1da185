// Compiled with -mavx2 -mfma; only reached through dispatch after a CPU check.

#include <immintrin.h>

#include <algorithm>

#include "kernels_internal.hpp"

namespace bbis::simd::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void row_sums(const double* data, std::size_t rows, std::size_t cols, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = data + r * cols;
    __m256d acc = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(row + c));
    double s = hsum(acc);
    for (; c < cols; ++c) s += row[c];
    out[r] = s;
  }
}

void relu_forward(const double* x, std::size_t rows, std::size_t d, const double* w1t, const double* b1,
                  const double* w2, std::size_t hidden, double b2, double* out) {
  const __m256d zero = _mm256_setzero_pd();
  const std::size_t blocked = hidden - hidden % 4;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * d;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < blocked; j += 4) {
      __m256d pre = _mm256_loadu_pd(b1 + j);
      for (std::size_t k = 0; k < d; ++k) {
        pre = _mm256_fmadd_pd(_mm256_set1_pd(xr[k]), _mm256_loadu_pd(w1t + k * hidden + j), pre);
      }
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(w2 + j), _mm256_max_pd(pre, zero), acc);
    }
    double s = hsum(acc);
    for (std::size_t j = blocked; j < hidden; ++j) {
      double pre = b1[j];
      for (std::size_t k = 0; k < d; ++k) pre += xr[k] * w1t[k * hidden + j];
      s += w2[j] * std::max(pre, 0.0);
    }
    out[r] = s + b2;
  }
}

double tail_weight_sum(const double* loss, const double* w, std::size_t n, double u) {
  const __m256d threshold = _mm256_set1_pd(u);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d m0 = _mm256_cmp_pd(_mm256_loadu_pd(loss + i), threshold, _CMP_GT_OQ);
    const __m256d m1 = _mm256_cmp_pd(_mm256_loadu_pd(loss + i + 4), threshold, _CMP_GT_OQ);
    acc0 = _mm256_add_pd(acc0, _mm256_and_pd(m0, _mm256_loadu_pd(w + i)));
    acc1 = _mm256_add_pd(acc1, _mm256_and_pd(m1, _mm256_loadu_pd(w + i + 4)));
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i)
    if (loss[i] > u) s += w[i];
  return s;
}

double excess_weighted_sum(const double* loss, const double* w, std::size_t n, double v) {
  const __m256d level = _mm256_set1_pd(v);
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d excess = _mm256_max_pd(_mm256_sub_pd(_mm256_loadu_pd(loss + i), level), zero);
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), excess, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * std::max(loss[i] - v, 0.0);
  return s;
}

double excess_centered_sq_sum(const double* loss, const double* w, std::size_t n, double v, double mean) {
  const __m256d level = _mm256_set1_pd(v);
  const __m256d centre = _mm256_set1_pd(mean);
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d excess = _mm256_max_pd(_mm256_sub_pd(_mm256_loadu_pd(loss + i), level), zero);
    const __m256d dev = _mm256_sub_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i), excess), centre);
    acc = _mm256_fmadd_pd(dev, dev, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double dev = w[i] * std::max(loss[i] - v, 0.0) - mean;
    s += dev * dev;
  }
  return s;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{Isa::Avx2,          row_sums,           relu_forward,
                                 tail_weight_sum,    excess_weighted_sum, excess_centered_sq_sum};
  return table;
}

}  // namespace bbis::simd::detail
