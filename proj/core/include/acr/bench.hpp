#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acr/cr.hpp"
#include "acr/krylov.hpp"
#include "acr/problems.hpp"

namespace acr {

enum class ProblemKind { Poisson, ConvDiff, Helmholtz };
enum class SolverKind { CG, GMRES };

std::string to_string(ProblemKind kind);
std::string to_string(SolverKind kind);
ProblemKind problem_kind_from_string(const std::string& s);
SolverKind solver_kind_from_string(const std::string& s);

/// One sweep of benchmark runs over H-matrix options on a fixed problem.
struct BenchConfig {
  ProblemKind problem = ProblemKind::Poisson;
  int n = 15;
  std::vector<HOptions> sweep;

  // Coefficient field (poisson, convdiff)
  double contrast_orders = 0.0;
  double correlation_length = 0.1;
  std::uint64_t seed = 0;
  // Convection (convdiff)
  double alpha = 0.0;
  double vortices = 1.0;
  // Helmholtz
  double freq = 1.0;

  SolverKind solver = SolverKind::CG;
  bool cg_fallback = true;  ///< retry with GMRES if CG breaks down
  KrylovOptions krylov;
  std::string output_path;  ///< CSV destination; empty keeps results in memory

  void validate() const;
};

/// Result of one sweep point. `error` is empty on success; a failed point
/// keeps its config echo and the error text.
struct BenchRecord {
  // config echo
  ProblemKind problem = ProblemKind::Poisson;
  int n = 0;
  double epsilon = 0.0;
  double eta = 0.0;
  int n_min = 0;
  double contrast_orders = 0.0;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  double vortices = 0.0;
  double freq = 0.0;
  SolverKind solver = SolverKind::CG;
  // measurements
  double setup_seconds = 0.0;
  double apply_seconds = 0.0;  ///< median of 3 single applications
  int iterations = 0;
  bool converged = false;
  int max_rank = 0;
  double avg_rank = 0.0;
  std::size_t bytes = 0;
  double residual = 0.0;  ///< true relative residual of the recorded solution
  std::string error;
  Vector solution;  ///< not serialized; used for residual re-checks
};

/// Distribution model of the cyclic reduction levels over p nodes holding
/// contiguous plane blocks (analytic estimator; nothing is executed in
/// parallel).
struct ParallelPlan {
  int n = 0;  ///< planes, power of two
  int p = 0;  ///< nodes, power of two, p <= n
  int c_level = 0;  ///< log2(n/p): last level with >= 1 plane on every node
  std::vector<std::vector<int>> planes_per_node;  ///< [level][node]
  std::vector<int> surviving;  ///< planes alive entering each level
  std::vector<int> messages;   ///< modeled neighbor exchanges per level
  double total_volume = 0.0;   ///< comm_volume(n, p, 1)
};

ParallelPlan plane_assignment(int n, int p);

/// Communication volume model k * p * n^2 * log2(n) * (log2(n/p) + 1) with
/// unit constants.
double comm_volume(double n, double p, double k);

BlockTridiagonalSystem generate_problem(const BenchConfig& config);

std::vector<BenchRecord> run_benchmark(const BenchConfig& config);

/// Fixed-column CSV; see README for the column list.
void write_records_csv(const std::vector<BenchRecord>& records,
                       const std::string& path);
std::string records_csv_header();
std::string record_csv_row(const BenchRecord& r);

/// JSON echo of a config, for reproducing a sweep.
std::string config_to_json(const BenchConfig& config);

/// "weak" for the weak-admissibility sentinel, the number otherwise.
std::string format_eta(double eta);
double parse_eta(const std::string& s);

}  // namespace acr
