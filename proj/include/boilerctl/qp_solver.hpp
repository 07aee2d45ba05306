#pragma once

#include <string>
#include <utility>
#include <vector>

#include "boilerctl/qp_problem.hpp"

namespace boilerctl {

struct SolverOptions {
    double tol_kkt = 1e-8;
    int max_iter = 100;
    int max_centrality_corrections = 2;
    bool presolve = true;

    void validate() const;
};

enum class SolveStatus { Optimal, MaxIter, Infeasible, Unbounded };

std::string to_string(SolveStatus s);

// Multipliers for a QpProblem: equality rows, inequality rows, lower and
// upper bound duals (full-length vectors, zero where the bound is infinite).
struct KktPoint {
    Eigen::VectorXd eq_multipliers;
    Eigen::VectorXd ineq_multipliers;
    Eigen::VectorXd lower_duals;
    Eigen::VectorXd upper_duals;
};

struct KktResiduals {
    double primal = 0.0;          // max raw constraint violation
    double dual = 0.0;            // stationarity residual / (1 + |f|_inf)
    double complementarity = 0.0; // max |slack_i * mult_i| / (1 + |f|_inf)
};

struct Solution {
    Eigen::VectorXd x;
    double objective = 0.0;
    SolveStatus status = SolveStatus::MaxIter;
    int iterations = 0;
    KktResiduals kkt;
    double solve_time_s = 0.0;
    KktPoint multipliers;
    std::vector<double> mu_trace;  // complementarity measure per iteration
    bool factorization_perturbed = false;
};

struct PresolveReport {
    std::vector<std::pair<Eigen::Index, double>> fixed_variables;
    int removed_empty_rows = 0;
    int removed_duplicate_rows = 0;
    int removed_forcing_rows = 0;  // single-variable rows absorbed into bounds
    int tightened_bounds = 0;
    bool detected_infeasible = false;
    std::string infeasible_reason;
};

// Lifts a reduced solution back to the original variable space.
struct PostsolveMap {
    Eigen::Index original_n = 0;
    std::vector<std::pair<Eigen::Index, double>> fixed;
    std::vector<Eigen::Index> kept;       // reduced index -> original index
    std::vector<Eigen::Index> ineq_kept;  // reduced row -> original row
    std::vector<Eigen::Index> eq_kept;

    [[nodiscard]] Eigen::VectorXd lift(const Eigen::VectorXd& reduced) const;
};

struct PresolveResult {
    QpProblem reduced;
    PresolveReport report;
    PostsolveMap map;
};

// Fixes equal-bound variables, drops empty and duplicate rows, absorbs
// single-variable rows into bounds, and flags trivially infeasible bound
// pairs. Value-preserving: the reduced optimum equals the original one.
PresolveResult presolve(const QpProblem& p);

KktResiduals kkt_residuals(const QpProblem& p, const Eigen::VectorXd& x, const KktPoint& mult);

// Primal-dual path following with a Mehrotra predictor-corrector step and
// Gondzio-style extra centrality corrections. One dense factorization of the
// augmented KKT system per iteration.
Solution solve_qp(const QpProblem& p, const SolverOptions& opts = {});

}  // namespace boilerctl
