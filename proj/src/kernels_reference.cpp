#include "softcap/kernels.hpp"

namespace softcap::nn::kernels::reference {

void affine_forward(const Matrix& x, const Matrix& w, std::span<const double> b, Matrix& y) {
  y.resize(x.rows, w.rows);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t o = 0; o < w.rows; ++o) {
      double acc = b[o];
      for (std::size_t k = 0; k < x.cols; ++k) acc += x(i, k) * w(o, k);
      y(i, o) = acc;
    }
}

void affine_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx) {
  dx.resize(dy.rows, w.cols);
  for (std::size_t i = 0; i < dy.rows; ++i)
    for (std::size_t k = 0; k < w.cols; ++k) {
      double acc = 0.0;
      for (std::size_t o = 0; o < w.rows; ++o) acc += dy(i, o) * w(o, k);
      dx(i, k) = acc;
    }
}

void affine_backward_params(const Matrix& dy, const Matrix& x, Matrix& dw, std::span<double> db) {
  dw.resize(dy.cols, x.cols);
  for (std::size_t o = 0; o < dy.cols; ++o) {
    double bias_acc = 0.0;
    for (std::size_t i = 0; i < dy.rows; ++i) bias_acc += dy(i, o);
    db[o] = bias_acc;
    for (std::size_t k = 0; k < x.cols; ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < dy.rows; ++i) acc += dy(i, o) * x(i, k);
      dw(o, k) = acc;
    }
  }
}

}  // namespace softcap::nn::kernels::reference
