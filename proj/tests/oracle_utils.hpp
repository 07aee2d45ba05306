// Test-only reference implementations, deliberately written along different
// algorithmic routes than the library code they check.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "boilerctl/common.hpp"
#include "boilerctl/qp_problem.hpp"

namespace oracle {

// Ordinary least squares through the normal equations, with an intercept.
struct LsFit {
    Eigen::VectorXd weights;
    double intercept = 0.0;

    [[nodiscard]] double predict(const Eigen::VectorXd& f) const {
        return weights.dot(f) + intercept;
    }
};

inline LsFit least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    Eigen::MatrixXd xa(n, d + 1);
    xa.leftCols(d) = x;
    xa.col(d).setOnes();
    const Eigen::MatrixXd gram = xa.transpose() * xa;
    const Eigen::VectorXd rhs = xa.transpose() * y;
    const Eigen::VectorXd sol = gram.ldlt().solve(rhs);
    LsFit fit;
    fit.weights = sol.head(d);
    fit.intercept = sol[d];
    return fit;
}

// Standard errors of the least-squares coefficients (including intercept as
// the last entry).
inline Eigen::VectorXd least_squares_stderr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    Eigen::MatrixXd xa(n, d + 1);
    xa.leftCols(d) = x;
    xa.col(d).setOnes();
    const Eigen::MatrixXd gram = xa.transpose() * xa;
    const Eigen::VectorXd beta = gram.ldlt().solve(xa.transpose() * y);
    const double dof = static_cast<double>(n - d - 1);
    const double sigma2 = (y - xa * beta).squaredNorm() / dof;
    const Eigen::MatrixXd cov = sigma2 * gram.inverse();
    return cov.diagonal().cwiseSqrt();
}

// Exhaustive active-set enumeration for small strictly convex QPs. Every
// subset of {inequality rows, finite bounds} is tried as the active set;
// equality rows are always active. The best feasible KKT point is the
// global optimum.
struct EnumResult {
    Eigen::VectorXd x;
    double objective = std::numeric_limits<double>::infinity();
    Eigen::VectorXd eq_mult;
    Eigen::VectorXd ineq_mult;   // full-length
    Eigen::VectorXd lower_mult;  // full-length
    Eigen::VectorXd upper_mult;
    bool found = false;
};

inline EnumResult enumerate_qp(const boilerctl::QpProblem& p) {
    using boilerctl::QpProblem;
    const Eigen::Index n = p.n();
    const Eigen::Index m = p.constraints.ineq_a.rows();
    const Eigen::Index q = p.constraints.eq_a.rows();

    // candidate active constraints: each inequality row, each finite bound
    struct Cand {
        Eigen::VectorXd row;
        double rhs;
        int kind;  // 0 ineq, 1 lower, 2 upper
        Eigen::Index id;
    };
    std::vector<Cand> cands;
    for (Eigen::Index r = 0; r < m; ++r)
        cands.push_back({p.constraints.ineq_a.row(r).transpose(), p.constraints.ineq_b[r], 0, r});
    for (Eigen::Index j = 0; j < n; ++j) {
        if (std::isfinite(p.constraints.lower[j])) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
            e[j] = -1.0;
            cands.push_back({e, -p.constraints.lower[j], 1, j});  // -x_j <= -l
        }
        if (std::isfinite(p.constraints.upper[j])) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
            e[j] = 1.0;
            cands.push_back({e, p.constraints.upper[j], 2, j});
        }
    }

    const auto nc = cands.size();
    if (nc > 22) throw std::runtime_error("enumerate_qp: too many candidate constraints");

    EnumResult best;
    const double feas_tol = 1e-7;
    for (std::uint64_t mask = 0; mask < (1ull << nc); ++mask) {
        const int active = __builtin_popcountll(mask);
        if (active > static_cast<int>(n - q)) continue;

        const Eigen::Index rows = q + active;
        Eigen::MatrixXd a(rows, n);
        Eigen::VectorXd b(rows);
        a.topRows(q) = p.constraints.eq_a;
        b.head(q) = p.constraints.eq_b;
        Eigen::Index r = q;
        bool lower_and_upper = false;
        for (std::size_t k = 0; k < nc; ++k) {
            if (!(mask & (1ull << k))) continue;
            // both bounds of one variable cannot be simultaneously active
            for (std::size_t k2 = 0; k2 < k; ++k2)
                if ((mask & (1ull << k2)) && cands[k].kind + cands[k2].kind == 3 &&
                    cands[k].id == cands[k2].id)
                    lower_and_upper = true;
            a.row(r) = cands[k].row.transpose();
            b[r] = cands[k].rhs;
            ++r;
        }
        if (lower_and_upper) continue;

        // KKT system: [H A'; A 0] [x; nu] = [-f; b]
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + rows, n + rows);
        kkt.topLeftCorner(n, n) = p.h;
        kkt.topRightCorner(n, rows) = a.transpose();
        kkt.bottomLeftCorner(rows, n) = a;
        Eigen::VectorXd rhs(n + rows);
        rhs.head(n) = -p.f;
        rhs.tail(rows) = b;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
        if (!lu.isInvertible()) continue;
        const Eigen::VectorXd sol = lu.solve(rhs);
        const Eigen::VectorXd x = sol.head(n);
        const Eigen::VectorXd nu = sol.tail(rows);

        // multipliers of active inequalities must be non-negative
        bool ok = true;
        for (Eigen::Index i = q; i < rows && ok; ++i)
            if (nu[i] < -1e-9) ok = false;
        if (!ok) continue;

        // feasibility of inactive constraints
        for (std::size_t k = 0; k < nc && ok; ++k)
            if (cands[k].row.dot(x) > cands[k].rhs + feas_tol) ok = false;
        if (q > 0 && (p.constraints.eq_a * x - p.constraints.eq_b).cwiseAbs().maxCoeff() > feas_tol)
            ok = false;
        if (!ok) continue;

        const double obj = p.objective_at(x);
        if (obj < best.objective) {
            best.found = true;
            best.objective = obj;
            best.x = x;
            best.eq_mult = nu.head(q);
            best.ineq_mult = Eigen::VectorXd::Zero(m);
            best.lower_mult = Eigen::VectorXd::Zero(n);
            best.upper_mult = Eigen::VectorXd::Zero(n);
            Eigen::Index i = q;
            for (std::size_t k = 0; k < nc; ++k) {
                if (!(mask & (1ull << k))) continue;
                const double mult = std::max(0.0, nu[i]);
                if (cands[k].kind == 0) best.ineq_mult[cands[k].id] = mult;
                if (cands[k].kind == 1) best.lower_mult[cands[k].id] = mult;
                if (cands[k].kind == 2) best.upper_mult[cands[k].id] = mult;
                ++i;
            }
        }
    }
    return best;
}

// Accelerated projected gradient (FISTA) for box-constrained QPs, capped at
// 1e6 iterations.
inline Eigen::VectorXd projected_gradient_box(const boilerctl::QpProblem& p,
                                              long max_iter = 1000000) {
    const Eigen::Index n = p.n();
    auto clip = [&](Eigen::VectorXd v) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (std::isfinite(p.constraints.lower[j])) v[j] = std::max(v[j], p.constraints.lower[j]);
            if (std::isfinite(p.constraints.upper[j])) v[j] = std::min(v[j], p.constraints.upper[j]);
        }
        return v;
    };
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.h, Eigen::EigenvaluesOnly);
    const double lmax = std::max(1e-12, es.eigenvalues().maxCoeff());
    const double step = 1.0 / lmax;

    Eigen::VectorXd x = clip(Eigen::VectorXd::Zero(n));
    Eigen::VectorXd z = x;
    double t = 1.0;
    for (long k = 0; k < max_iter; ++k) {
        const Eigen::VectorXd x_new = clip(z - step * (p.h * z + p.f));
        const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = x_new + ((t - 1.0) / t_new) * (x_new - x);
        const double move = (x_new - x).cwiseAbs().maxCoeff();
        x = x_new;
        t = t_new;
        if (move < 1e-14 * (1.0 + x.cwiseAbs().maxCoeff())) break;
    }
    return x;
}

// Straightforward re-implementation of the four-term control objective from
// per-model affine pieces (weights over controls, constant part).
inline double naive_objective(const std::vector<Eigen::VectorXd>& temp_w,
                              const std::vector<double>& temp_k,
                              const std::vector<Eigen::VectorXd>& o2_w,
                              const std::vector<double>& o2_k, double l_var, double l_diff,
                              double l_temp, double l_o2, const Eigen::VectorXd& x) {
    std::vector<double> t;
    t.reserve(temp_w.size());
    for (std::size_t i = 0; i < temp_w.size(); ++i) t.push_back(temp_w[i].dot(x) + temp_k[i]);
    std::vector<double> o;
    for (std::size_t j = 0; j < o2_w.size(); ++j) o.push_back(o2_w[j].dot(x) + o2_k[j]);
    double tm = 0.0;
    for (double v : t) tm += v;
    tm /= static_cast<double>(t.size());
    double tv = 0.0;
    for (double v : t) tv += (v - tm) * (v - tm);
    tv /= static_cast<double>(t.size());
    const double om = 0.5 * (o[0] + o[1]);
    const double od = o[0] - o[1];
    return l_var * tv + l_diff * od * od - l_temp * tm + l_o2 * om;
}

}  // namespace oracle
