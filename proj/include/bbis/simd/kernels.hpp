#pragma once

// Data-parallel inner loops behind a runtime-selected function table.
//
// Every kernel has a scalar reference implementation; an AVX2/FMA variant is
// compiled in its own translation unit and picked at first use when the CPU
// supports it. The variants agree to rounding (summation order and FMA
// contraction differ), which the equivalence tests pin down. Set
// BBIS_SIMD=scalar in the environment to force the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace bbis::simd {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

struct KernelTable {
  Isa isa;

  // out[r] = sum_c data[r*cols + c]
  void (*row_sums)(const double* data, std::size_t rows, std::size_t cols, double* out);

  // One-hidden-layer ReLU network on each row of x (rows x d, row-major).
  // w1t is the transposed first-layer weight matrix (d x hidden, row-major).
  // out[r] = sum_j w2[j] * max(b1[j] + sum_k x[r,k] * w1t[k,j], 0) + b2
  void (*relu_forward)(const double* x, std::size_t rows, std::size_t d, const double* w1t, const double* b1,
                       const double* w2, std::size_t hidden, double b2, double* out);

  // sum_i w[i] * I(loss[i] > u)
  double (*tail_weight_sum)(const double* loss, const double* w, std::size_t n, double u);

  // sum_i w[i] * max(loss[i] - v, 0)
  double (*excess_weighted_sum)(const double* loss, const double* w, std::size_t n, double v);

  // sum_i (w[i] * max(loss[i] - v, 0) - mean)^2
  double (*excess_centered_sq_sum)(const double* loss, const double* w, std::size_t n, double v, double mean);
};

const KernelTable& scalar_kernels();

/// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels();

/// The table used by the library. Chosen once: AVX2 when available, unless
/// BBIS_SIMD=scalar is set.
const KernelTable& active();

/// Overrides the active table; returns false (and changes nothing) when the
/// requested ISA is unavailable. Not meant to be flipped while estimators run.
bool select(Isa isa);

// Span front-ends over the active table.

inline void row_sums(std::span<const double> data, std::size_t cols, std::span<double> out) {
  active().row_sums(data.data(), out.size(), cols, out.data());
}

inline double tail_weight_sum(std::span<const double> loss, std::span<const double> w, double u) {
  return active().tail_weight_sum(loss.data(), w.data(), loss.size(), u);
}

inline double excess_weighted_sum(std::span<const double> loss, std::span<const double> w, double v) {
  return active().excess_weighted_sum(loss.data(), w.data(), loss.size(), v);
}

inline double excess_centered_sq_sum(std::span<const double> loss, std::span<const double> w, double v,
                                     double mean) {
  return active().excess_centered_sq_sum(loss.data(), w.data(), loss.size(), v, mean);
}

}  // namespace bbis::simd
