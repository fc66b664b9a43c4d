#pragma once

#include <cstddef>
#include <span>

namespace undermine::kernels {

/// Non-owning row-major view over a dense matrix.
struct ConstView {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct MutView {
  std::span<double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  double& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  operator ConstView() const { return {data, rows, cols}; }
};

// Dense products used by the autograd tape. With `accumulate` the result is
// added into `out`, otherwise `out` is overwritten. Shapes are checked with
// assertions only; callers own the shape contract.
//
//   matmul     out(m,n)  = a(m,k)  * b(k,n)
//   matmul_nt  out(m,n)  = a(m,k)  * b(n,k)^T
//   matmul_tn  out(m,n)  = a(k,m)^T * b(k,n)

void matmul(ConstView a, ConstView b, MutView out, bool accumulate = false);
void matmul_nt(ConstView a, ConstView b, MutView out, bool accumulate = false);
void matmul_tn(ConstView a, ConstView b, MutView out, bool accumulate = false);

// Row-wise softmax in place. With `causal`, entries above the diagonal are
// masked to zero probability (row r attends to columns 0..r).
void softmax_rows(MutView x, bool causal);

/// Straightforward single-threaded loops. Kept as the reference the parallel
/// kernels are tested against and as the baseline for the benchmark.
namespace serial {
void matmul(ConstView a, ConstView b, MutView out, bool accumulate = false);
void matmul_nt(ConstView a, ConstView b, MutView out, bool accumulate = false);
void matmul_tn(ConstView a, ConstView b, MutView out, bool accumulate = false);
void softmax_rows(MutView x, bool causal);
}  // namespace serial

/// Number of multiply-adds below which the parallel kernels stay on one thread.
inline constexpr std::size_t kParallelThreshold = 1u << 15;

}  // namespace undermine::kernels
