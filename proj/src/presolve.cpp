#include <cmath>
#include <limits>

#include "boilerctl/qp_solver.hpp"

namespace boilerctl {

namespace {

constexpr double kZeroTol = 1e-12;
constexpr double kFeasTol = 1e-9;

struct WorkingProblem {
    Eigen::MatrixXd h;
    Eigen::VectorXd f;
    double c;
    Eigen::VectorXd lower, upper;
    Eigen::MatrixXd ineq_a;
    Eigen::VectorXd ineq_b;
    Eigen::MatrixXd eq_a;
    Eigen::VectorXd eq_b;
    std::vector<Eigen::Index> var_ids;   // current column -> original variable
    std::vector<Eigen::Index> ineq_ids;  // current row -> original row
    std::vector<Eigen::Index> eq_ids;
};

void drop_rows(Eigen::MatrixXd& a, Eigen::VectorXd& b, std::vector<Eigen::Index>& ids,
               const std::vector<bool>& drop) {
    Eigen::Index keep = 0;
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        if (drop[static_cast<std::size_t>(r)]) continue;
        a.row(keep) = a.row(r);
        b[keep] = b[r];
        ids[static_cast<std::size_t>(keep)] = ids[static_cast<std::size_t>(r)];
        ++keep;
    }
    a.conservativeResize(keep, a.cols());
    b.conservativeResize(keep);
    ids.resize(static_cast<std::size_t>(keep));
}

// Substitutes x_j = value everywhere and removes column j.
void fix_variable(WorkingProblem& w, Eigen::Index j, double value) {
    const Eigen::Index n = w.f.size();
    w.c += 0.5 * w.h(j, j) * value * value + w.f[j] * value;
    for (Eigen::Index i = 0; i < n; ++i)
        if (i != j) w.f[i] += w.h(i, j) * value;
    w.ineq_b -= w.ineq_a.col(j) * value;
    w.eq_b -= w.eq_a.col(j) * value;

    auto drop_col = [&](Eigen::MatrixXd& m) {
        for (Eigen::Index col = j; col + 1 < m.cols(); ++col) m.col(col) = m.col(col + 1);
        m.conservativeResize(m.rows(), m.cols() - 1);
    };
    // remove row/col j of H
    for (Eigen::Index r = j; r + 1 < n; ++r) w.h.row(r) = w.h.row(r + 1);
    w.h.conservativeResize(n - 1, n);
    drop_col(w.h);
    drop_col(w.ineq_a);
    drop_col(w.eq_a);

    auto drop_entry = [&](Eigen::VectorXd& v) {
        for (Eigen::Index i = j; i + 1 < v.size(); ++i) v[i] = v[i + 1];
        v.conservativeResize(v.size() - 1);
    };
    drop_entry(w.f);
    drop_entry(w.lower);
    drop_entry(w.upper);
    w.var_ids.erase(w.var_ids.begin() + j);
}

}  // namespace

Eigen::VectorXd PostsolveMap::lift(const Eigen::VectorXd& reduced) const {
    if (reduced.size() != static_cast<Eigen::Index>(kept.size()))
        throw DataError("postsolve: reduced solution has wrong dimension");
    Eigen::VectorXd full = Eigen::VectorXd::Zero(original_n);
    for (const auto& [idx, value] : fixed) full[idx] = value;
    for (std::size_t i = 0; i < kept.size(); ++i)
        full[kept[i]] = reduced[static_cast<Eigen::Index>(i)];
    return full;
}

namespace {

PresolveResult presolve_impl(const QpProblem& p, bool reduce_rows) {
    p.constraints.validate();
    const Eigen::Index n0 = p.n();

    WorkingProblem w{p.h,
                     p.f,
                     p.c,
                     p.constraints.lower,
                     p.constraints.upper,
                     p.constraints.ineq_a,
                     p.constraints.ineq_b,
                     p.constraints.eq_a,
                     p.constraints.eq_b,
                     {},
                     {},
                     {}};
    for (Eigen::Index i = 0; i < n0; ++i) w.var_ids.push_back(i);
    for (Eigen::Index r = 0; r < p.constraints.ineq_a.rows(); ++r) w.ineq_ids.push_back(r);
    for (Eigen::Index r = 0; r < p.constraints.eq_a.rows(); ++r) w.eq_ids.push_back(r);

    PresolveResult out;
    auto& rep = out.report;
    auto infeasible = [&](const std::string& why) {
        rep.detected_infeasible = true;
        rep.infeasible_reason = why;
    };

    auto fix_equal_bounds = [&]() {
        for (Eigen::Index j = 0; j < w.f.size();) {
            if (w.lower[j] == w.upper[j]) {
                rep.fixed_variables.emplace_back(w.var_ids[static_cast<std::size_t>(j)],
                                                 w.lower[j]);
                fix_variable(w, j, rep.fixed_variables.back().second);
            } else {
                ++j;
            }
        }
    };

    // 1. variables pinned by their bounds
    fix_equal_bounds();

    // 2. all-zero rows: drop, or flag infeasibility if the rhs forbids them
    if (reduce_rows) {
        const double row_scale = 1.0;
        std::vector<bool> drop(static_cast<std::size_t>(w.ineq_a.rows()), false);
        for (Eigen::Index r = 0; r < w.ineq_a.rows(); ++r) {
            if (w.ineq_a.cols() == 0 || w.ineq_a.row(r).cwiseAbs().maxCoeff() <= kZeroTol) {
                if (w.ineq_b[r] < -kFeasTol * row_scale)
                    infeasible("inequality row " + std::to_string(w.ineq_ids[static_cast<std::size_t>(r)]) +
                               " reads 0 <= " + std::to_string(w.ineq_b[r]));
                drop[static_cast<std::size_t>(r)] = true;
                ++rep.removed_empty_rows;
            }
        }
        drop_rows(w.ineq_a, w.ineq_b, w.ineq_ids, drop);
        std::vector<bool> drop_eq(static_cast<std::size_t>(w.eq_a.rows()), false);
        for (Eigen::Index r = 0; r < w.eq_a.rows(); ++r) {
            if (w.eq_a.cols() == 0 || w.eq_a.row(r).cwiseAbs().maxCoeff() <= kZeroTol) {
                if (std::abs(w.eq_b[r]) > kFeasTol)
                    infeasible("equality row " + std::to_string(w.eq_ids[static_cast<std::size_t>(r)]) +
                               " reads 0 = " + std::to_string(w.eq_b[r]));
                drop_eq[static_cast<std::size_t>(r)] = true;
                ++rep.removed_empty_rows;
            }
        }
        drop_rows(w.eq_a, w.eq_b, w.eq_ids, drop_eq);
    }

    // 3. duplicate rows: identical coefficients; inequalities keep the
    //    tighter rhs, equalities with different rhs are infeasible
    if (reduce_rows) {
        std::vector<bool> drop(static_cast<std::size_t>(w.ineq_a.rows()), false);
        for (Eigen::Index r = 0; r < w.ineq_a.rows(); ++r) {
            if (drop[static_cast<std::size_t>(r)]) continue;
            for (Eigen::Index s = r + 1; s < w.ineq_a.rows(); ++s) {
                if (drop[static_cast<std::size_t>(s)]) continue;
                if ((w.ineq_a.row(r) - w.ineq_a.row(s)).cwiseAbs().maxCoeff() <= kZeroTol) {
                    if (w.ineq_b[s] < w.ineq_b[r]) {
                        // keep the identity of the tighter row so its
                        // multiplier maps back to a binding constraint
                        w.ineq_b[r] = w.ineq_b[s];
                        w.ineq_ids[static_cast<std::size_t>(r)] =
                            w.ineq_ids[static_cast<std::size_t>(s)];
                    }
                    drop[static_cast<std::size_t>(s)] = true;
                    ++rep.removed_duplicate_rows;
                }
            }
        }
        drop_rows(w.ineq_a, w.ineq_b, w.ineq_ids, drop);
        std::vector<bool> drop_eq(static_cast<std::size_t>(w.eq_a.rows()), false);
        for (Eigen::Index r = 0; r < w.eq_a.rows(); ++r) {
            if (drop_eq[static_cast<std::size_t>(r)]) continue;
            for (Eigen::Index s = r + 1; s < w.eq_a.rows(); ++s) {
                if (drop_eq[static_cast<std::size_t>(s)]) continue;
                if ((w.eq_a.row(r) - w.eq_a.row(s)).cwiseAbs().maxCoeff() <= kZeroTol) {
                    if (std::abs(w.eq_b[r] - w.eq_b[s]) > kFeasTol)
                        infeasible("duplicate equality rows with different right-hand sides");
                    drop_eq[static_cast<std::size_t>(s)] = true;
                    ++rep.removed_duplicate_rows;
                }
            }
        }
        drop_rows(w.eq_a, w.eq_b, w.eq_ids, drop_eq);
    }

    // 4. single-variable rows become bound updates
    if (reduce_rows) {
        std::vector<bool> drop(static_cast<std::size_t>(w.ineq_a.rows()), false);
        for (Eigen::Index r = 0; r < w.ineq_a.rows(); ++r) {
            Eigen::Index nz = -1;
            int count = 0;
            for (Eigen::Index j = 0; j < w.ineq_a.cols(); ++j)
                if (std::abs(w.ineq_a(r, j)) > kZeroTol) {
                    nz = j;
                    ++count;
                }
            if (count != 1) continue;
            const double a = w.ineq_a(r, nz);
            const double rhs = w.ineq_b[r] / a;
            if (a > 0 && rhs < w.upper[nz]) {
                w.upper[nz] = rhs;
                ++rep.tightened_bounds;
            } else if (a < 0 && rhs > w.lower[nz]) {
                w.lower[nz] = rhs;
                ++rep.tightened_bounds;
            }
            drop[static_cast<std::size_t>(r)] = true;
            ++rep.removed_forcing_rows;
        }
        drop_rows(w.ineq_a, w.ineq_b, w.ineq_ids, drop);
        std::vector<bool> drop_eq(static_cast<std::size_t>(w.eq_a.rows()), false);
        for (Eigen::Index r = 0; r < w.eq_a.rows(); ++r) {
            Eigen::Index nz = -1;
            int count = 0;
            for (Eigen::Index j = 0; j < w.eq_a.cols(); ++j)
                if (std::abs(w.eq_a(r, j)) > kZeroTol) {
                    nz = j;
                    ++count;
                }
            if (count != 1) continue;
            const double value = w.eq_b[r] / w.eq_a(r, nz);
            if (value < w.lower[nz] - kFeasTol || value > w.upper[nz] + kFeasTol)
                infeasible("single-variable equality pins a variable outside its bounds");
            w.lower[nz] = w.upper[nz] = value;
            rep.tightened_bounds += 2;
            drop_eq[static_cast<std::size_t>(r)] = true;
            ++rep.removed_forcing_rows;
        }
        drop_rows(w.eq_a, w.eq_b, w.eq_ids, drop_eq);
    }

    // 5. crossed bounds
    for (Eigen::Index j = 0; j < w.f.size(); ++j)
        if (w.lower[j] > w.upper[j] + kFeasTol)
            infeasible("variable " + std::to_string(w.var_ids[static_cast<std::size_t>(j)]) +
                       " has lower bound above upper bound");

    // tightening may have produced new equal-bound variables
    if (!rep.detected_infeasible) fix_equal_bounds();

    out.reduced.h = std::move(w.h);
    out.reduced.f = std::move(w.f);
    out.reduced.c = w.c;
    out.reduced.constraints.lower = std::move(w.lower);
    out.reduced.constraints.upper = std::move(w.upper);
    out.reduced.constraints.ineq_a = std::move(w.ineq_a);
    out.reduced.constraints.ineq_b = std::move(w.ineq_b);
    out.reduced.constraints.eq_a = std::move(w.eq_a);
    out.reduced.constraints.eq_b = std::move(w.eq_b);
    out.reduced.provenance = p.provenance;

    out.map.original_n = n0;
    out.map.fixed = rep.fixed_variables;
    out.map.kept = std::move(w.var_ids);
    out.map.ineq_kept = std::move(w.ineq_ids);
    out.map.eq_kept = std::move(w.eq_ids);
    return out;
}

}  // namespace

PresolveResult presolve(const QpProblem& p) { return presolve_impl(p, true); }

namespace detail {
// Equal-bound variables would leave the interior-point iterates with no
// strictly feasible slack, so they are substituted out even when presolve
// is disabled.
PresolveResult presolve_fix_variables_only(const QpProblem& p) {
    return presolve_impl(p, false);
}
}  // namespace detail

}  // namespace boilerctl
