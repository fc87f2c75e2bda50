#include "softcap/kernels.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace softcap::nn::kernels {

namespace {

constexpr std::size_t kRowBlock = 4;

// Column-major copy of w (in x out) so the inner loop runs over outputs.
void transpose_into(const Matrix& w, std::vector<double>& wt) {
  wt.resize(w.rows * w.cols);
  for (std::size_t o = 0; o < w.rows; ++o)
    for (std::size_t k = 0; k < w.cols; ++k) wt[k * w.rows + o] = w(o, k);
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void affine_forward(const Matrix& x, const Matrix& w, std::span<const double> b, Matrix& y) {
  const std::size_t n = x.rows, in = x.cols, out = w.rows;
  y.resize(n, out);
  static thread_local std::vector<double> wt;
  transpose_into(w, wt);
  const double* wt_p = wt.data();
  const double* x_p = x.data.data();
  double* y_p = y.data.data();
  const std::ptrdiff_t blocks = static_cast<std::ptrdiff_t>((n + kRowBlock - 1) / kRowBlock);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::size_t i0 = static_cast<std::size_t>(blk) * kRowBlock;
    const std::size_t rows = std::min(kRowBlock, n - i0);
    for (std::size_t r = 0; r < rows; ++r) std::copy(b.begin(), b.end(), y_p + (i0 + r) * out);
    if (rows == kRowBlock) {
      double* y0 = y_p + i0 * out;
      double* y1 = y0 + out;
      double* y2 = y1 + out;
      double* y3 = y2 + out;
      const double* x0 = x_p + i0 * in;
      for (std::size_t k = 0; k < in; ++k) {
        const double a0 = x0[k], a1 = x0[in + k], a2 = x0[2 * in + k], a3 = x0[3 * in + k];
        const double* wk = wt_p + k * out;
#pragma omp simd
        for (std::size_t o = 0; o < out; ++o) {
          const double wv = wk[o];
          y0[o] += a0 * wv;
          y1[o] += a1 * wv;
          y2[o] += a2 * wv;
          y3[o] += a3 * wv;
        }
      }
    } else {
      for (std::size_t r = 0; r < rows; ++r) {
        double* yr = y_p + (i0 + r) * out;
        const double* xr = x_p + (i0 + r) * in;
        for (std::size_t k = 0; k < in; ++k) {
          const double a = xr[k];
          const double* wk = wt_p + k * out;
#pragma omp simd
          for (std::size_t o = 0; o < out; ++o) yr[o] += a * wk[o];
        }
      }
    }
  }
}

void affine_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx) {
  const std::size_t n = dy.rows, out = w.rows, in = w.cols;
  dx.resize(n, in);
  const double* w_p = w.data.data();
  const double* dy_p = dy.data.data();
  double* dx_p = dx.data.data();
  const std::ptrdiff_t blocks = static_cast<std::ptrdiff_t>((n + kRowBlock - 1) / kRowBlock);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::size_t i0 = static_cast<std::size_t>(blk) * kRowBlock;
    const std::size_t rows = std::min(kRowBlock, n - i0);
    if (rows == kRowBlock) {
      double* d0 = dx_p + i0 * in;
      double* d1 = d0 + in;
      double* d2 = d1 + in;
      double* d3 = d2 + in;
      const double* g = dy_p + i0 * out;
      for (std::size_t o = 0; o < out; ++o) {
        const double g0 = g[o], g1 = g[out + o], g2 = g[2 * out + o], g3 = g[3 * out + o];
        const double* wo = w_p + o * in;
#pragma omp simd
        for (std::size_t k = 0; k < in; ++k) {
          const double wv = wo[k];
          d0[k] += g0 * wv;
          d1[k] += g1 * wv;
          d2[k] += g2 * wv;
          d3[k] += g3 * wv;
        }
      }
    } else {
      for (std::size_t r = 0; r < rows; ++r) {
        double* dr = dx_p + (i0 + r) * in;
        const double* gr = dy_p + (i0 + r) * out;
        for (std::size_t o = 0; o < out; ++o) {
          const double gv = gr[o];
          const double* wo = w_p + o * in;
#pragma omp simd
          for (std::size_t k = 0; k < in; ++k) dr[k] += gv * wo[k];
        }
      }
    }
  }
}

void affine_backward_params(const Matrix& dy, const Matrix& x, Matrix& dw, std::span<double> db) {
  const std::size_t n = dy.rows, out = dy.cols, in = x.cols;
  dw.resize(out, in);
  // dy^T so the per-output gradient column is contiguous.
  static thread_local std::vector<double> gt;
  gt.resize(out * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t o = 0; o < out; ++o) gt[o * n + i] = dy(i, o);
  const double* gt_p = gt.data();
  const double* x_p = x.data.data();
  double* dw_p = dw.data.data();
  const std::ptrdiff_t blocks = static_cast<std::ptrdiff_t>((out + kRowBlock - 1) / kRowBlock);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::size_t o0 = static_cast<std::size_t>(blk) * kRowBlock;
    const std::size_t units = std::min(kRowBlock, out - o0);
    for (std::size_t u = 0; u < units; ++u) {
      double acc = 0.0;
      const double* g = gt_p + (o0 + u) * n;
      for (std::size_t i = 0; i < n; ++i) acc += g[i];
      db[o0 + u] = acc;
    }
    if (units == kRowBlock) {
      double* w0 = dw_p + o0 * in;
      double* w1 = w0 + in;
      double* w2 = w1 + in;
      double* w3 = w2 + in;
      const double* g = gt_p + o0 * n;
      for (std::size_t i = 0; i < n; ++i) {
        const double g0 = g[i], g1 = g[n + i], g2 = g[2 * n + i], g3 = g[3 * n + i];
        const double* xi = x_p + i * in;
#pragma omp simd
        for (std::size_t k = 0; k < in; ++k) {
          const double xv = xi[k];
          w0[k] += g0 * xv;
          w1[k] += g1 * xv;
          w2[k] += g2 * xv;
          w3[k] += g3 * xv;
        }
      }
    } else {
      for (std::size_t u = 0; u < units; ++u) {
        double* wr = dw_p + (o0 + u) * in;
        const double* g = gt_p + (o0 + u) * n;
        for (std::size_t i = 0; i < n; ++i) {
          const double gv = g[i];
          const double* xi = x_p + i * in;
#pragma omp simd
          for (std::size_t k = 0; k < in; ++k) wr[k] += gv * xi[k];
        }
      }
    }
  }
}

}  // namespace softcap::nn::kernels
