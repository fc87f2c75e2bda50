#include <doctest.h>

#include <random>

#include "softcap/kernels.hpp"

using softcap::nn::Matrix;
namespace kernels = softcap::nn::kernels;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix m(r, c);
  for (double& v : m.data) v = u(rng);
  return m;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

struct Shape {
  std::size_t batch, in, out;
};

// Odd sizes exercise the remainder paths of the blocked loops.
const Shape kShapes[] = {{1, 1, 1}, {3, 5, 7}, {4, 4, 4}, {9, 45, 13}, {64, 39, 256}, {257, 46, 1}, {130, 256, 12}};

}  // namespace

TEST_CASE("parallel kernels agree with the serial reference") {
  std::mt19937_64 rng(43);
  for (const auto& s : kShapes) {
    CAPTURE(s.batch);
    CAPTURE(s.in);
    CAPTURE(s.out);
    const Matrix x = random_matrix(s.batch, s.in, rng);
    const Matrix w = random_matrix(s.out, s.in, rng);
    const Matrix dy = random_matrix(s.batch, s.out, rng);
    std::vector<double> b(s.out);
    for (double& v : b) v = std::uniform_real_distribution<double>(-1, 1)(rng);

    Matrix y_ref, y_par;
    kernels::reference::affine_forward(x, w, b, y_ref);
    kernels::affine_forward(x, w, b, y_par);
    CHECK(y_par.rows == s.batch);
    CHECK(y_par.cols == s.out);
    CHECK(max_abs_diff(y_ref.data, y_par.data) < 1e-12);

    Matrix dx_ref, dx_par;
    kernels::reference::affine_backward_input(dy, w, dx_ref);
    kernels::affine_backward_input(dy, w, dx_par);
    CHECK(max_abs_diff(dx_ref.data, dx_par.data) < 1e-12);

    Matrix dw_ref, dw_par;
    std::vector<double> db_ref(s.out), db_par(s.out);
    kernels::reference::affine_backward_params(dy, x, dw_ref, db_ref);
    kernels::affine_backward_params(dy, x, dw_par, db_par);
    CHECK(max_abs_diff(dw_ref.data, dw_par.data) < 1e-11);
    CHECK(max_abs_diff(db_ref, db_par) < 1e-12);
  }
}

TEST_CASE("reference kernels compute the textbook sums") {
  Matrix x(2, 3), w(2, 3);
  x.data = {1, 2, 3, 4, 5, 6};
  w.data = {1, 0, -1, 0.5, 0.5, 0.5};
  const std::vector<double> b{10, 20};
  Matrix y;
  kernels::reference::affine_forward(x, w, b, y);
  CHECK(y.data == std::vector<double>{8, 23, 8, 27.5});

  Matrix dx;
  kernels::reference::affine_backward_input(y, w, dx);
  CHECK(dx.data == std::vector<double>{8 + 11.5, 11.5, -8 + 11.5, 8 + 13.75, 13.75, -8 + 13.75});

  Matrix dw;
  std::vector<double> db(2);
  kernels::reference::affine_backward_params(y, x, dw, db);
  CHECK(dw.data == std::vector<double>{8 + 32, 16 + 40, 24 + 48, 23 + 110, 46 + 137.5, 69 + 165});
  CHECK(db == std::vector<double>{16, 50.5});
}

TEST_CASE("parallel kernels are bit-reproducible") {
  std::mt19937_64 rng(47);
  const Matrix x = random_matrix(200, 64, rng);
  const Matrix w = random_matrix(96, 64, rng);
  const Matrix dy = random_matrix(200, 96, rng);
  const std::vector<double> b(96, 0.25);
  Matrix y1, y2, dw1, dw2;
  std::vector<double> db1(96), db2(96);
  kernels::affine_forward(x, w, b, y1);
  kernels::affine_forward(x, w, b, y2);
  kernels::affine_backward_params(dy, x, dw1, db1);
  kernels::affine_backward_params(dy, x, dw2, db2);
  CHECK(y1 == y2);
  CHECK(dw1 == dw2);
  CHECK(db1 == db2);
  CHECK(kernels::max_threads() >= 1);
}
