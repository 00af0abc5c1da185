#include <algorithm>

#include "kernels_internal.hpp"

namespace bbis::simd::detail {
namespace {

void row_sums(const double* data, std::size_t rows, std::size_t cols, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = data + r * cols;
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += row[c];
    out[r] = s;
  }
}

void relu_forward(const double* x, std::size_t rows, std::size_t d, const double* w1t, const double* b1,
                  const double* w2, std::size_t hidden, double b2, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * d;
    double acc = 0.0;
    for (std::size_t j = 0; j < hidden; ++j) {
      double pre = b1[j];
      for (std::size_t k = 0; k < d; ++k) pre += xr[k] * w1t[k * hidden + j];
      acc += w2[j] * std::max(pre, 0.0);
    }
    out[r] = acc + b2;
  }
}

double tail_weight_sum(const double* loss, const double* w, std::size_t n, double u) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (loss[i] > u) s += w[i];
  return s;
}

double excess_weighted_sum(const double* loss, const double* w, std::size_t n, double v) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * std::max(loss[i] - v, 0.0);
  return s;
}

double excess_centered_sq_sum(const double* loss, const double* w, std::size_t n, double v, double mean) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dev = w[i] * std::max(loss[i] - v, 0.0) - mean;
    s += dev * dev;
  }
  return s;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::Scalar,        row_sums,           relu_forward,
                                 tail_weight_sum,    excess_weighted_sum, excess_centered_sq_sum};
  return table;
}

}  // namespace bbis::simd::detail
