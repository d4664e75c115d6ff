#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "acr/errors.hpp"
#include "acr/krylov.hpp"
#include "acr/problems.hpp"
#include "test_util.hpp"

using namespace acr;
using namespace acr::testing;

namespace {

LinearOperator matrix_op(const Matrix& a) {
  return [a](const Vector& v) -> Vector { return a * v; };
}

}  // namespace

TEST_CASE("cg solves the identity in one iteration") {
  Vector b = random_vector(30, 1);
  KrylovResult r = cg(identity_preconditioner, identity_preconditioner, b,
                      {1e-10, 50, 30});
  CHECK(r.converged);
  CHECK(r.iterations == 1);
  CHECK((r.x - b).norm() <= 1e-10 * b.norm());
  CHECK(r.history.size() == std::size_t(r.iterations) + 1);
}

TEST_CASE("cg with the exact inverse preconditioner needs one iteration") {
  Matrix a = Vector::LinSpaced(20, 1.0, 2.0).asDiagonal();
  Matrix ainv = a.inverse();
  Vector b = random_vector(20, 2);
  KrylovResult r = cg(matrix_op(a), matrix_op(ainv), b, {1e-10, 50, 30});
  CHECK(r.converged);
  CHECK(r.iterations <= 1);
}

TEST_CASE("unpreconditioned cg iteration count grows about linearly in n") {
  std::vector<int> iters;
  for (int n : {7, 15, 31}) {
    Grid3D grid{n};
    CoefficientField unit = gaussian_random_field(grid, 0.1, 0.0, 0);
    BlockTridiagonalSystem sys = poisson_system(grid, unit);
    auto apply_a = [&sys](const Vector& v) { return sys.matvec(v); };
    KrylovResult r = cg(apply_a, identity_preconditioner, sys.rhs,
                        {1e-8, 1000, 30});
    REQUIRE(r.converged);
    iters.push_back(r.iterations);
  }
  CHECK(iters[1] > iters[0]);
  CHECK(iters[2] > iters[1]);
  // roughly linear: doubling n roughly doubles the count
  const double g1 = double(iters[1]) / iters[0];
  const double g2 = double(iters[2]) / iters[1];
  CHECK(g1 > 1.2);
  CHECK(g1 < 3.5);
  CHECK(g2 > 1.2);
  CHECK(g2 < 3.5);
}

TEST_CASE("cg reports breakdown on indefinite operators") {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = -1.0;
  Vector b(2);
  b << 0.0, 1.0;
  CHECK_THROWS_AS(
      cg(matrix_op(a), identity_preconditioner, b, {1e-10, 10, 30}),
      BreakdownError);
}

TEST_CASE("converged cg satisfies its reported residual") {
  Matrix a = Matrix::Identity(40, 40) * 4.0;
  a += random_matrix(40, 40, 3) * 0.05;
  Matrix spd = a * a.transpose();
  Vector b = random_vector(40, 4);
  KrylovResult r = cg(matrix_op(spd), identity_preconditioner, b,
                      {1e-9, 200, 30});
  REQUIRE(r.converged);
  const double true_res = (b - spd * r.x).norm() / b.norm();
  CHECK(true_res <= 10.0 * r.history.back() + 1e-15);
  CHECK(true_res <= 1e-9);
}

TEST_CASE("gmres solves the identity in one iteration") {
  Vector b = random_vector(25, 5);
  KrylovResult r = gmres(identity_preconditioner, identity_preconditioner, b,
                         {1e-10, 50, 30});
  CHECK(r.converged);
  CHECK(r.iterations == 1);
}

TEST_CASE("gmres finishes in as many iterations as distinct eigenvalues") {
  Vector d(30);
  for (int i = 0; i < 30; ++i) d(i) = 1.0 + (i % 3);  // eigenvalues 1, 2, 3
  Matrix a = d.asDiagonal();
  Vector b = random_vector(30, 6);
  KrylovResult r = gmres(matrix_op(a), identity_preconditioner, b,
                         {1e-12, 50, 30});
  CHECK(r.converged);
  CHECK(r.iterations <= 3);
}

TEST_CASE("gmres solves a random nonsymmetric well-conditioned system") {
  Matrix a = Matrix::Identity(100, 100) * 6.0 +
             0.3 * random_matrix(100, 100, 7);
  Vector b = random_vector(100, 8);
  KrylovOptions opts{1e-10, 400, 100};
  KrylovResult r = gmres(matrix_op(a), identity_preconditioner, b, opts);
  REQUIRE(r.converged);
  Vector exact = a.partialPivLu().solve(b);
  CHECK((r.x - exact).norm() <= 1e-8 * exact.norm());
}

TEST_CASE("restarted gmres still converges, just more slowly") {
  Matrix a = Matrix::Identity(80, 80) * 5.0 + 0.3 * random_matrix(80, 80, 9);
  Vector b = random_vector(80, 10);
  KrylovResult full = gmres(matrix_op(a), identity_preconditioner, b,
                            {1e-10, 500, 80});
  KrylovResult restarted = gmres(matrix_op(a), identity_preconditioner, b,
                                 {1e-10, 500, 10});
  CHECK(full.converged);
  CHECK(restarted.converged);
  CHECK(restarted.iterations >= full.iterations);
}

TEST_CASE("full-memory gmres history is nonincreasing") {
  Matrix a = Matrix::Identity(60, 60) * 4.0 + 0.3 * random_matrix(60, 60, 11);
  Vector b = random_vector(60, 12);
  KrylovResult r = gmres(matrix_op(a), identity_preconditioner, b,
                         {1e-12, 60, 60});
  for (std::size_t i = 1; i < r.history.size(); ++i) {
    CHECK(r.history[i] <= r.history[i - 1] + 1e-14);
  }
}

TEST_CASE("gmres with the exact inverse preconditioner needs two iterations") {
  Matrix a = Matrix::Identity(50, 50) * 3.0 + random_matrix(50, 50, 13) * 0.1;
  Matrix ainv = a.inverse();
  Vector b = random_vector(50, 14);
  KrylovResult r = gmres(matrix_op(a), matrix_op(ainv), b, {1e-10, 50, 30});
  CHECK(r.converged);
  CHECK(r.iterations <= 2);
}

TEST_CASE("nonconvergence is reported, not thrown") {
  Matrix a = Matrix::Identity(50, 50) * 1e-8;
  a += random_matrix(50, 50, 15) * 1e-9;
  Vector b = random_vector(50, 16);
  KrylovResult r = gmres(matrix_op(a), identity_preconditioner, b,
                         {1e-14, 3, 2});
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 3);
}

TEST_CASE("zero right-hand sides return zero immediately") {
  Vector b = Vector::Zero(10);
  KrylovResult rc = cg(identity_preconditioner, identity_preconditioner, b,
                       {1e-10, 10, 5});
  CHECK(rc.converged);
  CHECK(rc.x.norm() == 0.0);
  KrylovResult rg = gmres(identity_preconditioner, identity_preconditioner, b,
                          {1e-10, 10, 5});
  CHECK(rg.converged);
  CHECK(rg.x.norm() == 0.0);
}

TEST_CASE("invalid options are rejected") {
  Vector b = Vector::Ones(4);
  CHECK_THROWS_AS(cg(identity_preconditioner, identity_preconditioner, b,
                     {0.0, 10, 5}),
                  InvalidInputError);
  CHECK_THROWS_AS(gmres(identity_preconditioner, identity_preconditioner, b,
                        {1e-8, 0, 5}),
                  InvalidInputError);
  CHECK_THROWS_AS(gmres(identity_preconditioner, identity_preconditioner, b,
                        {1e-8, 10, 0}),
                  InvalidInputError);
}
