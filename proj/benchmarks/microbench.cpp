// Microbenchmarks for the numerical kernels: truncation, H-matrix assembly,
// matvec, inversion, and the factorization/apply pipeline.

#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "acr/cluster.hpp"
#include "acr/cr.hpp"
#include "acr/hmatrix.hpp"
#include "acr/krylov.hpp"
#include "acr/problems.hpp"

namespace {

using namespace acr;

Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  Matrix a(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) a(i, j) = dist(rng);
  return a;
}

std::vector<Eigen::Vector2d> grid_points(int n) {
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(std::size_t(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) pts.push_back({double(i), double(j)});
  return pts;
}

void bm_truncated_svd(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Matrix low = random_matrix(n, 16, 1) * random_matrix(16, n, 2);
  Matrix a = low + 1e-6 * random_matrix(n, n, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(truncated_svd(a, 1e-4));
  }
}
BENCHMARK(bm_truncated_svd)->Arg(64)->Arg(128)->Arg(256);

void bm_plane_assembly(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Grid3D grid{n};
  CoefficientField unit = gaussian_random_field(grid, 0.1, 0.0, 0);
  BlockTridiagonalSystem sys = poisson_system(grid, unit);
  HOptions opts{1e-4, 2.0, 32};
  auto tree = std::make_shared<const ClusterTree>(
      build_cluster_tree(sys.plane_points, opts.n_min));
  auto structure = build_block_tree(tree, tree, opts);
  for (auto _ : state) {
    benchmark::DoNotOptimize(assemble_sparse(sys.diag[0], structure));
  }
}
BENCHMARK(bm_plane_assembly)->Arg(15)->Arg(31);

void bm_h_matvec(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  HOptions opts{1e-4, 2.0, 32};
  auto tree = std::make_shared<const ClusterTree>(
      build_cluster_tree(grid_points(n), opts.n_min));
  auto structure = build_block_tree(tree, tree, opts);
  Grid3D grid{n};
  CoefficientField unit = gaussian_random_field(grid, 0.1, 0.0, 0);
  BlockTridiagonalSystem sys = poisson_system(grid, unit);
  HMatrix inv = h_invert(assemble_sparse(sys.diag[0], structure), 1e-4);
  Vector x = Vector::Ones(n * n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(h_matvec(inv, x));
  }
}
BENCHMARK(bm_h_matvec)->Arg(15)->Arg(31);

void bm_h_invert(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  HOptions opts{1e-4, 2.0, 32};
  auto tree = std::make_shared<const ClusterTree>(
      build_cluster_tree(grid_points(n), opts.n_min));
  auto structure = build_block_tree(tree, tree, opts);
  Grid3D grid{n};
  CoefficientField unit = gaussian_random_field(grid, 0.1, 0.0, 0);
  BlockTridiagonalSystem sys = poisson_system(grid, unit);
  HMatrix h = assemble_sparse(sys.diag[0], structure);
  for (auto _ : state) {
    benchmark::DoNotOptimize(h_invert(h, 1e-4));
  }
}
BENCHMARK(bm_h_invert)->Arg(15)->Arg(31);

void bm_acr_setup(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Grid3D grid{n};
  CoefficientField unit = gaussian_random_field(grid, 0.1, 0.0, 0);
  BlockTridiagonalSystem sys = poisson_system(grid, unit);
  for (auto _ : state) {
    benchmark::DoNotOptimize(acr_setup(sys, {1e-2, 2.0, 32}));
  }
}
BENCHMARK(bm_acr_setup)->Arg(15)->Arg(31)->Unit(benchmark::kMillisecond);

void bm_acr_apply(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Grid3D grid{n};
  CoefficientField unit = gaussian_random_field(grid, 0.1, 0.0, 0);
  BlockTridiagonalSystem sys = poisson_system(grid, unit);
  ACRPreconditioner prec = acr_setup(sys, {1e-2, 2.0, 32});
  for (auto _ : state) {
    benchmark::DoNotOptimize(prec.apply(sys.rhs));
  }
}
BENCHMARK(bm_acr_apply)->Arg(15)->Arg(31)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
