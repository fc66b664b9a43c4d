#include "undermine/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace undermine::kernels {

namespace {

inline bool worth_threading(std::size_t m, std::size_t k, std::size_t n) {
  return m * k * n >= kParallelThreshold;
}

inline void softmax_row(double* row, std::size_t width) {
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < width; ++c) peak = std::max(peak, row[c]);
  double total = 0.0;
  for (std::size_t c = 0; c < width; ++c) {
    row[c] = std::exp(row[c] - peak);
    total += row[c];
  }
  for (std::size_t c = 0; c < width; ++c) row[c] /= total;
}

}  // namespace

void matmul(ConstView a, ConstView b, MutView out, bool accumulate) {
  assert(a.cols == b.rows && out.rows == a.rows && out.cols == b.cols);
  const std::size_t m = a.rows, k = a.cols, n = b.cols;
  const double* pa = a.data.data();
  const double* pb = b.data.data();
  double* pc = out.data.data();
#pragma omp parallel for schedule(static) if (worth_threading(m, k, n))
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* crow = pc + i * n;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt(ConstView a, ConstView b, MutView out, bool accumulate) {
  assert(a.cols == b.cols && out.rows == a.rows && out.cols == b.rows);
  const std::size_t m = a.rows, k = a.cols, n = b.rows;
  const double* pa = a.data.data();
  const double* pb = b.data.data();
  double* pc = out.data.data();
#pragma omp parallel for schedule(static) if (worth_threading(m, k, n))
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* arow = pa + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = pb + j * k;
      double acc = 0.0;
#pragma omp simd reduction(+ : acc)
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      pc[i * n + j] = accumulate ? pc[i * n + j] + acc : acc;
    }
  }
}

void matmul_tn(ConstView a, ConstView b, MutView out, bool accumulate) {
  assert(a.rows == b.rows && out.rows == a.cols && out.cols == b.cols);
  const std::size_t m = a.cols, k = a.rows, n = b.cols;
  const double* pa = a.data.data();
  const double* pb = b.data.data();
  double* pc = out.data.data();
#pragma omp parallel for schedule(static) if (worth_threading(m, k, n))
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* crow = pc + i * n;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[p * m + i];
      if (av == 0.0) continue;
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void softmax_rows(MutView x, bool causal) {
  const std::size_t rows = x.rows, cols = x.cols;
  double* px = x.data.data();
#pragma omp parallel for schedule(static) if (worth_threading(rows, cols, 8))
  for (std::ptrdiff_t rr = 0; rr < static_cast<std::ptrdiff_t>(rows); ++rr) {
    const auto r = static_cast<std::size_t>(rr);
    double* row = px + r * cols;
    const std::size_t width = causal ? std::min(cols, r + 1) : cols;
    softmax_row(row, width);
    std::fill(row + width, row + cols, 0.0);
  }
}

namespace serial {

void matmul(ConstView a, ConstView b, MutView out, bool accumulate) {
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < a.cols; ++p) acc += a(i, p) * b(p, j);
      out(i, j) = accumulate ? out(i, j) + acc : acc;
    }
}

void matmul_nt(ConstView a, ConstView b, MutView out, bool accumulate) {
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < a.cols; ++p) acc += a(i, p) * b(j, p);
      out(i, j) = accumulate ? out(i, j) + acc : acc;
    }
}

void matmul_tn(ConstView a, ConstView b, MutView out, bool accumulate) {
  for (std::size_t i = 0; i < a.cols; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < a.rows; ++p) acc += a(p, i) * b(p, j);
      out(i, j) = accumulate ? out(i, j) + acc : acc;
    }
}

void softmax_rows(MutView x, bool causal) {
  for (std::size_t r = 0; r < x.rows; ++r) {
    const std::size_t width = causal ? std::min(x.cols, r + 1) : x.cols;
    softmax_row(&x(r, 0), width);
    for (std::size_t c = width; c < x.cols; ++c) x(r, c) = 0.0;
  }
}

}  // namespace serial

}  // namespace undermine::kernels
