#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>

#include "boilerctl/common.hpp"

namespace boilerctl {

// Linear constraints on the control vector: element bounds, inequality rows
// a.x <= b, equality rows a.x = b. Infinite bounds are allowed.
struct ControlConstraints {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    Eigen::MatrixXd ineq_a;  // rows x n
    Eigen::VectorXd ineq_b;
    Eigen::MatrixXd eq_a;
    Eigen::VectorXd eq_b;

    [[nodiscard]] Eigen::Index n_variables() const { return lower.size(); }
    void validate() const;

    static ControlConstraints box(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);
};

struct QpProvenance {
    std::uint64_t context_hash = 0;
    std::uint64_t bundle_hash = 0;
    double lambda_var = 0, lambda_diff = 0, lambda_temp = 0, lambda_o2 = 0;
    double ridge_delta = 0.0;
};

// min over x of 1/2 x'Hx + f'x + c subject to the constraints.
struct QpProblem {
    Eigen::MatrixXd h;
    Eigen::VectorXd f;
    double c = 0.0;
    ControlConstraints constraints;
    QpProvenance provenance;

    [[nodiscard]] Eigen::Index n() const { return f.size(); }
    [[nodiscard]] double objective_at(const Eigen::VectorXd& x) const;
    // Checks dimensions, symmetry (1e-8 tolerance) and positive
    // semidefiniteness (min eigenvalue >= -1e-9 |h|).
    void validate() const;
};

// Adds delta to every diagonal entry of h; used when the KKT system turns
// out singular. Records delta in provenance.
void add_ridge(QpProblem& p, double delta);

// Plain-text QP file, round-trip exact, for solver-in-isolation testing.
void write_qp_file(const std::filesystem::path& path, const QpProblem& p);
QpProblem read_qp_file(const std::filesystem::path& path);

}  // namespace boilerctl
