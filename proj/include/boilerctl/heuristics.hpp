#pragma once

#include <optional>
#include <string>
#include <vector>

#include "boilerctl/qp_solver.hpp"

namespace boilerctl {

enum class HeuristicAlgo { DE, PSO, GA };

std::string to_string(HeuristicAlgo a);
HeuristicAlgo heuristic_from_string(const std::string& s);

struct HeuristicConfig {
    HeuristicAlgo algorithm = HeuristicAlgo::DE;
    int population = 0;        // 0 -> 10 * n
    long max_evals = 200000;
    double time_budget_s = 5.0;  // <= 0 disables the wall clock cap
    std::uint64_t seed = 1;
    double penalty_coeff = 0.0;  // 0 -> 1e3 * |H|_inf
    // optional early exit once the best penalized value reaches this level;
    // the benchmark uses it to stop runs that have already converged
    std::optional<double> stop_below;

    void validate() const;
};

struct HeuristicTracePoint {
    long evals = 0;
    double elapsed_s = 0.0;
    double best_penalized = 0.0;
    double best_raw = 0.0;
};

struct HeuristicResult {
    Solution solution;  // status is always MaxIter: heuristics never prove optimality
    long evals_used = 0;
    double penalty_at_best = 0.0;
    std::vector<HeuristicTracePoint> trace;  // one point per generation
};

// Minimizes the penalized objective
//   V(x) + mu * (sum max(0, Aq x - bq)^2 + sum (Ae x - be)^2)
// with every candidate clipped to the box. DE is rand/1/bin (F=0.5, CR=0.9);
// PSO uses the constriction factor (chi=0.7298, c1=c2=2.05); GA is
// real-coded with tournament-2 selection, blend crossover (alpha=0.5),
// Gaussian mutation (sigma = 5% of range) and one elite. The reported
// objective is the raw V at the best penalized candidate.
HeuristicResult optimize_heuristic(const QpProblem& p, const HeuristicConfig& cfg);

struct BenchmarkRow {
    std::string algorithm;
    double mean_time_s = 0.0;
    bool converged_within_interval = true;  // printed as N/C when false
    double mean_obj = 0.0, min_obj = 0.0, max_obj = 0.0, std_obj = 0.0;
    std::vector<double> objectives;  // per problem
    std::vector<double> times_s;     // per problem: IPC solve time, or time to converge
};

struct BenchmarkOptions {
    double real_time_interval_s = 5.0;  // desk-scale stand-in for the control period
    double convergence_epsilon = 5e-2;  // |raw V - IPC optimum| to count as converged
};

struct BenchmarkReport {
    std::vector<BenchmarkRow> rows;  // IPC first, then one row per heuristic config
    BenchmarkOptions options;
};

// Runs the interior-point solver and every heuristic config on every
// problem. A heuristic converges on a problem when its best raw objective
// comes within convergence_epsilon of the IPC optimum inside the real-time
// interval; an algorithm failing that on more than half the problems is
// marked not-converged.
BenchmarkReport run_benchmark(const std::vector<QpProblem>& problems,
                              const std::vector<HeuristicConfig>& configs,
                              const SolverOptions& baseline, const BenchmarkOptions& opts = {});

// Aligned text table: algorithm, time (or N/C), mean/min/max/std objective.
std::string benchmark_table(const BenchmarkReport& report);

}  // namespace boilerctl
