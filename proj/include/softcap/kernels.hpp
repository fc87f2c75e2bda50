#pragma once

// Dense batched affine kernels behind the MLP. Two implementations share one
// interface: `kernels::` (cache-blocked, OpenMP over rows or output units)
// and `kernels::reference::` (plain serial loops, kept for tests and the
// benchmark). Every parallel loop writes disjoint outputs and sums in a
// fixed order, so results do not depend on the thread count.

#include <cstddef>
#include <span>
#include <vector>

namespace softcap::nn {

/// Row-major matrix of doubles. Batches are rows.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  void resize(std::size_t r, std::size_t c) {
    rows = r;
    cols = c;
    data.assign(r * c, 0.0);
  }
  friend bool operator==(const Matrix&, const Matrix&) = default;
};

namespace kernels {

/// y = x * w^T + b, with x: B x in, w: out x in, y: B x out.
void affine_forward(const Matrix& x, const Matrix& w, std::span<const double> b, Matrix& y);
/// dx = dy * w.
void affine_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx);
/// dw = dy^T * x, db = column sums of dy.
void affine_backward_params(const Matrix& dy, const Matrix& x, Matrix& dw, std::span<double> db);

/// Threads the parallel kernels will use (1 without OpenMP).
int max_threads();

namespace reference {
void affine_forward(const Matrix& x, const Matrix& w, std::span<const double> b, Matrix& y);
void affine_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx);
void affine_backward_params(const Matrix& dy, const Matrix& x, Matrix& dw, std::span<double> db);
}  // namespace reference

}  // namespace kernels
}  // namespace softcap::nn
