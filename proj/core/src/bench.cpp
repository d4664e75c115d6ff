#include "acr/bench.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "acr/errors.hpp"

namespace acr {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Poisson: return "poisson";
    case ProblemKind::ConvDiff: return "convdiff";
    case ProblemKind::Helmholtz: return "helmholtz";
  }
  return "poisson";
}

std::string to_string(SolverKind kind) {
  return kind == SolverKind::CG ? "cg" : "gmres";
}

ProblemKind problem_kind_from_string(const std::string& s) {
  if (s == "poisson") return ProblemKind::Poisson;
  if (s == "convdiff") return ProblemKind::ConvDiff;
  if (s == "helmholtz") return ProblemKind::Helmholtz;
  throw InvalidInputError("unknown problem kind: " + s);
}

SolverKind solver_kind_from_string(const std::string& s) {
  if (s == "cg") return SolverKind::CG;
  if (s == "gmres") return SolverKind::GMRES;
  throw InvalidInputError("unknown solver kind: " + s);
}

std::string format_eta(double eta) {
  if (eta == kWeakAdmissibility) return "weak";
  std::ostringstream os;
  os << eta;
  return os.str();
}

double parse_eta(const std::string& s) {
  if (s == "weak") return kWeakAdmissibility;
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw InvalidInputError("eta must be a number or 'weak': " + s);
  }
  if (pos != s.size() || !(v >= 0.0)) {
    throw InvalidInputError("eta must be a number or 'weak': " + s);
  }
  return v;
}

void BenchConfig::validate() const {
  if (sweep.empty()) throw InvalidInputError("BenchConfig: empty sweep");
  if (n < 1) throw InvalidInputError("BenchConfig: n < 1");
  for (const auto& h : sweep) h.validate();
  krylov.validate();
  if (contrast_orders < 0.0) {
    throw InvalidInputError("BenchConfig: negative contrast");
  }
  if (!(correlation_length > 0.0)) {
    throw InvalidInputError("BenchConfig: correlation length must be positive");
  }
  if (problem == ProblemKind::ConvDiff && alpha < 0.0) {
    throw InvalidInputError("BenchConfig: negative alpha");
  }
  if (problem == ProblemKind::Helmholtz && freq < 0.0) {
    throw InvalidInputError("BenchConfig: negative frequency");
  }
}

ParallelPlan plane_assignment(int n, int p) {
  if (!is_power_of_two(n) || !is_power_of_two(p)) {
    throw InvalidInputError("plane_assignment: n and p must be powers of two");
  }
  if (p > n) throw InvalidInputError("plane_assignment: p > n");

  ParallelPlan plan;
  plan.n = n;
  plan.p = p;
  plan.c_level = static_cast<int>(std::lround(std::log2(double(n) / p)));
  plan.total_volume = comm_volume(n, p, 1.0);

  const int block = n / p;  // contiguous planes per node at level 0
  // Survivors entering level r are the 0-based plane indices congruent to
  // 2^r - 1 modulo 2^r (red rows are the odd 1-based positions each level).
  for (int r = 0; (n >> r) >= 1; ++r) {
    const int stride = 1 << r;
    plan.surviving.push_back(n / stride);
    std::vector<int> per_node(p, 0);
    for (int idx = stride - 1; idx < n; idx += stride) {
      per_node[idx / block] += 1;
    }
    int active = 0;
    for (int count : per_node) active += count > 0 ? 1 : 0;
    // Model: each active node exchanges one boundary plane with each of its
    // (up to) two active neighbors per level.
    plan.messages.push_back(active > 1 ? 2 * active - 2 : 0);
    plan.planes_per_node.push_back(std::move(per_node));
    if (stride == n) break;
  }
  return plan;
}

double comm_volume(double n, double p, double k) {
  if (!(n > 0.0) || !(p > 0.0) || !(k > 0.0) || p > n) {
    throw InvalidInputError("comm_volume: need 0 < p <= n and k > 0");
  }
  return k * p * n * n * std::log2(n) * (std::log2(n / p) + 1.0);
}

BlockTridiagonalSystem generate_problem(const BenchConfig& config) {
  Grid3D grid{config.n};
  switch (config.problem) {
    case ProblemKind::Poisson: {
      CoefficientField kappa = gaussian_random_field(
          grid, config.correlation_length, config.contrast_orders, config.seed);
      return poisson_system(grid, kappa);
    }
    case ProblemKind::ConvDiff: {
      CoefficientField kappa = gaussian_random_field(
          grid, config.correlation_length, config.contrast_orders, config.seed);
      return convdiff_system(grid, kappa, config.alpha, config.vortices);
    }
    case ProblemKind::Helmholtz:
      return helmholtz_system(grid, config.freq);
  }
  throw InvalidInputError("generate_problem: unknown problem kind");
}

std::vector<BenchRecord> run_benchmark(const BenchConfig& config) {
  config.validate();
  const BlockTridiagonalSystem sys = generate_problem(config);

  std::vector<BenchRecord> records;
  for (const HOptions& hopts : config.sweep) {
    BenchRecord rec;
    rec.problem = config.problem;
    rec.n = config.n;
    rec.epsilon = hopts.epsilon;
    rec.eta = hopts.eta;
    rec.n_min = hopts.n_min;
    rec.contrast_orders = config.contrast_orders;
    rec.seed = config.seed;
    rec.alpha = config.alpha;
    rec.vortices = config.vortices;
    rec.freq = config.freq;
    rec.solver = config.solver;

    try {
      const double t0 = now_seconds();
      ACRPreconditioner prec = acr_setup(sys, hopts);
      rec.setup_seconds = now_seconds() - t0;
      rec.bytes = prec.footprint_bytes();
      std::int64_t leaves = 0;
      double rank_sum = 0.0;
      for (const auto& ls : prec.stats.levels) {
        rec.max_rank = std::max(rec.max_rank, ls.max_rank);
        leaves += ls.low_rank_leaves;
        rank_sum += ls.avg_rank * ls.low_rank_leaves;
      }
      rec.avg_rank = leaves > 0 ? rank_sum / leaves : 0.0;

      std::array<double, 3> times{};
      for (double& t : times) {
        const double ta = now_seconds();
        Vector y = prec.apply(sys.rhs);
        t = now_seconds() - ta;
        (void)y;
      }
      std::sort(times.begin(), times.end());
      rec.apply_seconds = times[1];

      auto apply_a = [&sys](const Vector& v) { return sys.matvec(v); };
      auto apply_m = [&prec](const Vector& v) { return prec.apply(v); };
      KrylovResult res;
      if (config.solver == SolverKind::CG) {
        try {
          res = cg(apply_a, apply_m, sys.rhs, config.krylov);
        } catch (const BreakdownError& e) {
          if (!config.cg_fallback) throw;
          rec.error = std::string("cg breakdown, retried with gmres: ") +
                      e.what();
          res = gmres(apply_a, apply_m, sys.rhs, config.krylov);
          rec.solver = SolverKind::GMRES;
        }
      } else {
        res = gmres(apply_a, apply_m, sys.rhs, config.krylov);
      }
      rec.iterations = res.iterations;
      rec.converged = res.converged;
      rec.solution = std::move(res.x);
      const double bnorm = sys.rhs.norm();
      rec.residual = bnorm > 0.0
                         ? (sys.rhs - sys.matvec(rec.solution)).norm() / bnorm
                         : 0.0;
    } catch (const Error& e) {
      rec.error = e.what();
    }
    records.push_back(std::move(rec));
  }

  if (!config.output_path.empty()) {
    write_records_csv(records, config.output_path);
    std::ofstream js(config.output_path + ".json");
    if (!js) throw Error("cannot open " + config.output_path + ".json");
    js << config_to_json(config) << '\n';
  }
  return records;
}

std::string records_csv_header() {
  return "problem,n,epsilon,eta,n_min,contrast,seed,alpha,vortices,freq,"
         "solver,setup_seconds,apply_seconds,iterations,converged,max_rank,"
         "avg_rank,bytes,residual,error";
}

std::string record_csv_row(const BenchRecord& r) {
  std::ostringstream os;
  os.precision(12);
  std::string err = r.error;
  std::replace(err.begin(), err.end(), ',', ';');
  os << to_string(r.problem) << ',' << r.n << ',' << r.epsilon << ','
     << format_eta(r.eta) << ',' << r.n_min << ',' << r.contrast_orders << ','
     << r.seed << ',' << r.alpha << ',' << r.vortices << ',' << r.freq << ','
     << to_string(r.solver) << ',' << r.setup_seconds << ','
     << r.apply_seconds << ',' << r.iterations << ','
     << (r.converged ? 1 : 0) << ',' << r.max_rank << ',' << r.avg_rank << ','
     << r.bytes << ',' << r.residual << ',' << err;
  return os.str();
}

void write_records_csv(const std::vector<BenchRecord>& records,
                       const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  os << records_csv_header() << '\n';
  for (const auto& r : records) os << record_csv_row(r) << '\n';
}

std::string config_to_json(const BenchConfig& config) {
  nlohmann::json j;
  j["problem"] = to_string(config.problem);
  j["n"] = config.n;
  auto& sweep = j["sweep"];
  for (const auto& h : config.sweep) {
    sweep.push_back({{"epsilon", h.epsilon},
                     {"eta", format_eta(h.eta)},
                     {"n_min", h.n_min}});
  }
  j["contrast"] = config.contrast_orders;
  j["correlation_length"] = config.correlation_length;
  j["seed"] = config.seed;
  j["alpha"] = config.alpha;
  j["vortices"] = config.vortices;
  j["freq"] = config.freq;
  j["solver"] = to_string(config.solver);
  j["cg_fallback"] = config.cg_fallback;
  j["tol"] = config.krylov.tol;
  j["max_iters"] = config.krylov.max_iters;
  j["restart"] = config.krylov.restart;
  j["output"] = config.output_path;
  return j.dump(2);
}

}  // namespace acr
