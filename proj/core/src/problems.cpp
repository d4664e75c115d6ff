#include "acr/problems.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <random>

#include "acr/errors.hpp"

namespace acr {

std::vector<Eigen::Vector2d> Grid3D::plane_coords() const {
  // in-plane ordering is i + j*n, x fastest
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(plane_size());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      pts.push_back({(i + 1) * h(), (j + 1) * h()});
  return pts;
}

Vector BlockTridiagonalSystem::matvec(const Vector& x) const {
  if (x.size() != size())
    throw ShapeMismatchError("BlockTridiagonalSystem::matvec: length");
  Vector y(size());
  for (int r = 0; r < nrows; ++r) {
    auto xr = x.segment(static_cast<std::int64_t>(r) * block, block);
    Vector yr = diag[r] * xr;
    if (r > 0)
      yr += sub[r - 1].cwiseProduct(
          x.segment(static_cast<std::int64_t>(r - 1) * block, block));
    if (r + 1 < nrows)
      yr += sup[r].cwiseProduct(
          x.segment(static_cast<std::int64_t>(r + 1) * block, block));
    y.segment(static_cast<std::int64_t>(r) * block, block) = yr;
  }
  return y;
}

SparseMatrix BlockTridiagonalSystem::to_sparse() const {
  std::vector<Eigen::Triplet<double>> trips;
  for (int r = 0; r < nrows; ++r) {
    const std::int64_t off = static_cast<std::int64_t>(r) * block;
    for (int c = 0; c < diag[r].outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(diag[r], c); it; ++it)
        trips.emplace_back(off + it.row(), off + it.col(), it.value());
    if (r > 0)
      for (int q = 0; q < block; ++q)
        if (sub[r - 1](q) != 0.0)
          trips.emplace_back(off + q, off - block + q, sub[r - 1](q));
    if (r + 1 < nrows)
      for (int q = 0; q < block; ++q)
        if (sup[r](q) != 0.0)
          trips.emplace_back(off + q, off + block + q, sup[r](q));
  }
  SparseMatrix a(size(), size());
  a.setFromTriplets(trips.begin(), trips.end());
  a.makeCompressed();
  return a;
}

Matrix BlockTridiagonalSystem::to_dense() const { return Matrix(to_sparse()); }

double harmonic_mean(double k1, double k2) {
  if (!(k1 > 0.0) || !(k2 > 0.0))
    throw InvalidInputError("harmonic_mean: nonpositive input");
  return 2.0 * k1 * k2 / (k1 + k2);
}

namespace {

struct Assembler {
  const Grid3D& grid;
  const CoefficientField* kappa = nullptr;  // null -> constant 1
  double alpha = 0.0;                       // convection strength
  double vortex = 0.0;                      // vortex parameter a
  double freq = -1.0;                       // Helmholtz frequency, <0 -> none

  double kap(int i, int j, int k) const {
    return kappa ? kappa->values(grid.index(i, j, k)) : 1.0;
  }

  // Face coefficient between a node and its neighbor; boundary faces mirror
  // the node value.
  double face(int i, int j, int k, int di, int dj, int dk) const {
    const int ni = i + di, nj = j + dj, nk = k + dk;
    const double here = kap(i, j, k);
    if (ni < 0 || nj < 0 || nk < 0 || ni >= grid.n || nj >= grid.n ||
        nk >= grid.n)
      return here;
    return harmonic_mean(here, kap(ni, nj, nk));
  }

  BlockTridiagonalSystem run() const {
    const int n = grid.n;
    const int m = grid.plane_size();
    const double h = grid.h();
    const double ih2 = 1.0 / (h * h);

    BlockTridiagonalSystem sys;
    sys.nrows = n;
    sys.block = m;
    sys.diag.resize(n);
    sys.sub.assign(n - 1, Vector::Zero(m));
    sys.sup.assign(n - 1, Vector::Zero(m));
    sys.rhs.resize(sys.size());
    sys.symmetric = alpha == 0.0;
    sys.plane_points = grid.plane_coords();

    const double omega2 =
        freq >= 0.0 ? std::pow(2.0 * std::numbers::pi * freq, 2) : 0.0;

    for (int k = 0; k < n; ++k) {
      std::vector<Eigen::Triplet<double>> trips;
      trips.reserve(static_cast<std::size_t>(m) * 5);
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
          const int q = i + j * n;
          const Eigen::Vector3d x = grid.coord(i, j, k);
          double dg = 0.0;

          // diffusion: 7-point with harmonic face averages
          const double fw = face(i, j, k, -1, 0, 0) * ih2;
          const double fe = face(i, j, k, +1, 0, 0) * ih2;
          const double fs = face(i, j, k, 0, -1, 0) * ih2;
          const double fn = face(i, j, k, 0, +1, 0) * ih2;
          const double fd = face(i, j, k, 0, 0, -1) * ih2;
          const double fu = face(i, j, k, 0, 0, +1) * ih2;
          dg = fw + fe + fs + fn + fd + fu;
          if (i > 0) trips.emplace_back(q, q - 1, -fw);
          if (i + 1 < n) trips.emplace_back(q, q + 1, -fe);
          if (j > 0) trips.emplace_back(q, q - n, -fs);
          if (j + 1 < n) trips.emplace_back(q, q + n, -fn);
          if (k > 0) sys.sub[k - 1](q) = -fd;
          if (k + 1 < n) sys.sup[k](q) = -fu;

          double rhs = 1.0;

          if (alpha != 0.0) {
            const Eigen::Vector3d b = flow_eval(x, vortex);
            // first-order upwind per component sign
            auto upwind = [&](double bc, int lo_ok, int hi_ok, auto couple_lo,
                              auto couple_hi) {
              const double c = alpha * bc / h;
              if (bc > 0.0) {
                dg += c;
                if (lo_ok) couple_lo(-c);
              } else if (bc < 0.0) {
                dg -= c;
                if (hi_ok) couple_hi(c);
              }
            };
            upwind(
                b(0), i > 0, i + 1 < n,
                [&](double v) { trips.emplace_back(q, q - 1, v); },
                [&](double v) { trips.emplace_back(q, q + 1, v); });
            upwind(
                b(1), j > 0, j + 1 < n,
                [&](double v) { trips.emplace_back(q, q - n, v); },
                [&](double v) { trips.emplace_back(q, q + n, v); });
            upwind(
                b(2), k > 0, k + 1 < n,
                [&](double v) { sys.sub[k - 1](q) += v; },
                [&](double v) { sys.sup[k](q) += v; });
          }

          if (freq >= 0.0) {
            const double c = velocity_eval(x);
            dg -= omega2 / (c * c);
            const double u = std::sin(std::numbers::pi * x(0)) *
                             std::sin(std::numbers::pi * x(1)) *
                             std::sin(std::numbers::pi * x(2));
            rhs = 3.0 * std::numbers::pi * std::numbers::pi * u -
                  omega2 * u / (c * c);
          }

          trips.emplace_back(q, q, dg);
          sys.rhs(grid.index(i, j, k)) = rhs;
        }
      }
      sys.diag[k].resize(m, m);
      sys.diag[k].setFromTriplets(trips.begin(), trips.end());
      sys.diag[k].makeCompressed();
    }
    return sys;
  }
};

}  // namespace

BlockTridiagonalSystem poisson_system(const Grid3D& grid,
                                      const CoefficientField& kappa) {
  if (kappa.values.size() != grid.num_nodes())
    throw ShapeMismatchError("poisson_system: field size mismatch");
  Assembler a{grid};
  a.kappa = &kappa;
  return a.run();
}

Eigen::Vector3d flow_eval(const Eigen::Vector3d& x, double a) {
  const double t = a * 2.0 * std::numbers::pi;
  const double xs = t * x(0);
  const double ys = t * (0.125 + x(1));
  const double zsy = t * (0.125 + x(2));
  const double zs = t * x(2);
  Eigen::Vector3d b;
  b(0) = std::sin(xs) * std::sin(ys) + std::sin(zsy) * std::sin(xs);
  b(1) = std::cos(xs) * std::cos(ys) + std::cos(ys) * std::cos(zs);
  b(2) = std::cos(xs) * std::cos(zsy) + std::sin(ys) * std::sin(zs);
  return b;
}

BlockTridiagonalSystem convdiff_system(const Grid3D& grid,
                                       const CoefficientField& kappa,
                                       double alpha, double a) {
  if (alpha < 0.0) throw InvalidInputError("convdiff_system: alpha < 0");
  if (kappa.values.size() != grid.num_nodes())
    throw ShapeMismatchError("convdiff_system: field size mismatch");
  Assembler asmb{grid};
  asmb.kappa = &kappa;
  asmb.alpha = alpha;
  asmb.vortex = a;
  return asmb.run();
}

double velocity_eval(const Eigen::Vector3d& x) {
  const double dx = x(0) - 0.5, dy = x(1) - 0.5;
  return 1.25 * (1.0 - 0.4 * std::exp(-32.0 * (dx * dx + dy * dy)));
}

BlockTridiagonalSystem helmholtz_system(const Grid3D& grid, double freq) {
  if (freq < 0.0) throw InvalidInputError("helmholtz_system: negative frequency");
  Assembler a{grid};
  a.freq = freq;
  return a.run();
}

Vector manufactured_solution(const Grid3D& grid) {
  Vector u(grid.num_nodes());
  for (int k = 0; k < grid.n; ++k)
    for (int j = 0; j < grid.n; ++j)
      for (int i = 0; i < grid.n; ++i) {
        const Eigen::Vector3d x = grid.coord(i, j, k);
        u(grid.index(i, j, k)) = std::sin(std::numbers::pi * x(0)) *
                                 std::sin(std::numbers::pi * x(1)) *
                                 std::sin(std::numbers::pi * x(2));
      }
  return u;
}

double points_per_wavelength(const Grid3D& grid, double freq) {
  if (freq <= 0.0) return std::numeric_limits<double>::infinity();
  return kWaveguideMinVelocity / (freq * grid.h());
}

namespace {

// One stationary Gaussian sample on the n^3 grid via circulant embedding of
// the covariance exp(-|d|_2 / lambda) on a torus of size M per dimension.
// Returns false if the embedding has a non-negligible negative part.
bool sample_gaussian(const Grid3D& grid, double lambda, std::uint64_t seed,
                     int pad_factor, Vector& out) {
  const int n = grid.n;
  const int m = pad_factor * n;
  const double h = grid.h();
  const std::size_t total = static_cast<std::size_t>(m) * m * m;

  std::vector<std::complex<double>> buf(total);
  auto at = [&](int i, int j, int k) -> std::complex<double>& {
    return buf[(static_cast<std::size_t>(i) * m + j) * m + k];
  };

  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k) {
        const double di = std::min(i, m - i) * h;
        const double dj = std::min(j, m - j) * h;
        const double dk = std::min(k, m - k) * h;
        const double d = std::sqrt(di * di + dj * dj + dk * dk);
        at(i, j, k) = std::exp(-d / lambda);
      }

  fftw_plan fwd = fftw_plan_dft_3d(
      m, m, m, reinterpret_cast<fftw_complex*>(buf.data()),
      reinterpret_cast<fftw_complex*>(buf.data()), FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(fwd);
  fftw_destroy_plan(fwd);

  double neg = 0.0, pos = 0.0;
  for (auto& v : buf) {
    const double ev = v.real();
    if (ev < 0.0)
      neg -= ev;
    else
      pos += ev;
    v = ev > 0.0 ? ev : 0.0;
  }
  if (neg > 1e-8 * pos) return false;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (auto& v : buf) {
    const std::complex<double> w(normal(rng) * inv_sqrt2,
                                 normal(rng) * inv_sqrt2);
    v = std::sqrt(v.real()) * w;
  }

  fftw_plan bwd = fftw_plan_dft_3d(
      m, m, m, reinterpret_cast<fftw_complex*>(buf.data()),
      reinterpret_cast<fftw_complex*>(buf.data()), FFTW_BACKWARD,
      FFTW_ESTIMATE);
  fftw_execute(bwd);
  fftw_destroy_plan(bwd);

  const double scale = std::sqrt(2.0) / std::pow(static_cast<double>(m), 1.5);
  out.resize(grid.num_nodes());
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        out(grid.index(i, j, k)) = scale * at(i, j, k).real();
  return true;
}

}  // namespace

CoefficientField gaussian_random_field(const Grid3D& grid, double lambda,
                                       double contrast_orders,
                                       std::uint64_t seed) {
  if (contrast_orders < 0.0)
    throw InvalidInputError("gaussian_random_field: negative contrast");
  if (!(lambda > 0.0))
    throw InvalidInputError("gaussian_random_field: nonpositive lambda");

  CoefficientField field;
  field.grid = grid;
  field.kind = FieldKind::Permeability;
  field.seed = seed;
  field.contrast_orders = contrast_orders;

  if (contrast_orders == 0.0) {
    field.values = Vector::Ones(grid.num_nodes());
    return field;
  }

  Vector z;
  if (!sample_gaussian(grid, lambda, seed, 2, z) &&
      !sample_gaussian(grid, lambda, seed, 4, z))
    throw Error("gaussian_random_field: covariance embedding not positive");

  const double zmin = z.minCoeff(), zmax = z.maxCoeff();
  if (zmax == zmin) {
    field.values = Vector::Ones(grid.num_nodes());
    return field;
  }
  // Affine rescale of the log-field: exact contrast in orders of magnitude,
  // geometric mean pinned near 1.
  const double s = contrast_orders * std::numbers::ln10 / (zmax - zmin);
  const double mid = 0.5 * (zmax + zmin);
  field.values = ((z.array() - mid) * s).exp();
  return field;
}

void write_field(const CoefficientField& field, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("write_field: cannot open " + path);
  const char magic[4] = {'A', 'C', 'R', 'F'};
  os.write(magic, 4);
  const std::int32_t n = field.grid.n;
  const std::int32_t kind = static_cast<std::int32_t>(field.kind);
  const std::uint64_t seed = field.seed;
  const double contrast = field.contrast_orders;
  os.write(reinterpret_cast<const char*>(&n), sizeof n);
  os.write(reinterpret_cast<const char*>(&kind), sizeof kind);
  os.write(reinterpret_cast<const char*>(&seed), sizeof seed);
  os.write(reinterpret_cast<const char*>(&contrast), sizeof contrast);
  os.write(reinterpret_cast<const char*>(field.values.data()),
           static_cast<std::streamsize>(sizeof(double) * field.values.size()));
  if (!os) throw Error("write_field: write failed for " + path);
}

CoefficientField read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("read_field: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "ACRF")
    throw InvalidInputError("read_field: bad magic in " + path);
  std::int32_t n = 0, kind = 0;
  std::uint64_t seed = 0;
  double contrast = 0.0;
  is.read(reinterpret_cast<char*>(&n), sizeof n);
  is.read(reinterpret_cast<char*>(&kind), sizeof kind);
  is.read(reinterpret_cast<char*>(&seed), sizeof seed);
  is.read(reinterpret_cast<char*>(&contrast), sizeof contrast);
  CoefficientField field;
  field.grid.n = n;
  field.kind = static_cast<FieldKind>(kind);
  field.seed = seed;
  field.contrast_orders = contrast;
  field.values.resize(field.grid.num_nodes());
  is.read(reinterpret_cast<char*>(field.values.data()),
          static_cast<std::streamsize>(sizeof(double) * field.values.size()));
  if (!is) throw InvalidInputError("read_field: truncated file " + path);
  return field;
}

void write_matrix_market(const BlockTridiagonalSystem& sys,
                         const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("write_matrix_market: cannot open " + path);
  const SparseMatrix a = sys.to_sparse();
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
  os.precision(17);
  for (int c = 0; c < a.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(a, c); it; ++it)
      os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
  if (!os) throw Error("write_matrix_market: write failed for " + path);
}

}  // namespace acr
