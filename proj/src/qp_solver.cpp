#include "boilerctl/qp_solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace boilerctl {

void SolverOptions::validate() const {
    if (!(tol_kkt > 0.0)) throw ConfigError("solver: tol_kkt must be positive");
    if (max_iter < 1) throw ConfigError("solver: max_iter must be >= 1");
    if (max_centrality_corrections < 0)
        throw ConfigError("solver: max_centrality_corrections must be >= 0");
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "Optimal";
        case SolveStatus::MaxIter: return "MaxIter";
        case SolveStatus::Infeasible: return "Infeasible";
        case SolveStatus::Unbounded: return "Unbounded";
    }
    return "?";
}

namespace detail {
PresolveResult presolve_fix_variables_only(const QpProblem& p);
}

namespace {

constexpr double kPivotFloor = 1e-12;
constexpr double kStaticPrimalReg = 1e-10;
constexpr double kGondzioBetaMin = 0.1;
constexpr double kGondzioBetaMax = 10.0;
constexpr double kStepFraction = 0.99;
constexpr double kDivergenceLimit = 1e10;

// LDL^T of the augmented matrix [M Ae'; Ae 0] without pivoting. The matrix
// is quasi-definite once regularized, so in-order elimination is stable:
// pivots are positive in the primal block and negative in the equality
// block. When a pivot degenerates, the block diagonal gets the static
// perturbation and the factorization restarts once.
class KktFactor {
public:
    // m: primal block (n x n), ae: equality rows (p x n)
    bool factor(const Eigen::MatrixXd& m, const Eigen::MatrixXd& ae, bool* perturbed) {
        n_ = m.rows();
        p_ = ae.rows();
        const Eigen::Index size = n_ + p_;
        k_.resize(size, size);
        k_.topLeftCorner(n_, n_) = m;
        k_.topRightCorner(n_, p_) = ae.transpose();
        k_.bottomLeftCorner(p_, n_) = ae;
        k_.bottomRightCorner(p_, p_).setZero();

        const double scale = std::max(1.0, k_.cwiseAbs().maxCoeff());
        double reg_primal = 0.0;
        double reg_dual = 0.0;
        for (int attempt = 0; attempt < 3; ++attempt) {
            if (try_factor(scale, reg_primal, reg_dual)) {
                if (perturbed && (reg_primal > 0.0 || reg_dual > 0.0)) *perturbed = true;
                return true;
            }
            reg_primal = reg_primal == 0.0 ? kStaticPrimalReg * scale : reg_primal * 1e3;
            reg_dual = reg_dual == 0.0 ? kStaticPrimalReg * scale : reg_dual * 1e3;
        }
        return false;
    }

    // One backsolve plus one round of iterative refinement against the
    // unregularized matrix.
    [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
        Eigen::VectorXd x = solve_once(rhs);
        const Eigen::VectorXd r = rhs - k_ * x;
        x += solve_once(r);
        return x;
    }

private:
    bool try_factor(double scale, double reg_primal, double reg_dual) {
        const Eigen::Index size = n_ + p_;
        l_ = k_;
        for (Eigen::Index j = 0; j < size; ++j) {
            if (j < n_) l_(j, j) += reg_primal;
            else l_(j, j) -= reg_dual;
        }
        d_.resize(size);
        for (Eigen::Index j = 0; j < size; ++j) {
            double dj = l_(j, j);
            for (Eigen::Index k = 0; k < j; ++k) dj -= l_(j, k) * l_(j, k) * d_[k];
            const bool primal_block = j < n_;
            if (primal_block && dj < kPivotFloor * scale) return false;
            if (!primal_block && dj > -kPivotFloor * scale) return false;
            d_[j] = dj;
            for (Eigen::Index i = j + 1; i < size; ++i) {
                double v = l_(i, j);
                for (Eigen::Index k = 0; k < j; ++k) v -= l_(i, k) * l_(j, k) * d_[k];
                l_(i, j) = v / dj;
            }
        }
        return true;
    }

    [[nodiscard]] Eigen::VectorXd solve_once(const Eigen::VectorXd& rhs) const {
        const Eigen::Index size = n_ + p_;
        Eigen::VectorXd x = rhs;
        for (Eigen::Index i = 0; i < size; ++i)
            for (Eigen::Index k = 0; k < i; ++k) x[i] -= l_(i, k) * x[k];
        for (Eigen::Index i = 0; i < size; ++i) x[i] /= d_[i];
        for (Eigen::Index i = size; i-- > 0;)
            for (Eigen::Index k = i + 1; k < size; ++k) x[i] -= l_(k, i) * x[k];
        return x;
    }

    Eigen::MatrixXd k_;
    Eigen::MatrixXd l_;
    Eigen::VectorXd d_;
    Eigen::Index n_ = 0, p_ = 0;
};

struct Direction {
    Eigen::VectorXd dx, dy, dlam, dsq;
    Eigen::VectorXd dzl, dsl, dzu, dsu;  // full-length, zero off the bound sets
};

struct IpmState {
    Eigen::VectorXd x, y, lam, sq;
    Eigen::VectorXd zl, sl, zu, su;  // full-length
};

void finalize(Solution& sol, const QpProblem& p, const IpmState& s,
              const std::vector<Eigen::Index>& lo, const std::vector<Eigen::Index>& up);

double max_feasible_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv,
                         const std::vector<Eigen::Index>& idx) {
    double alpha = 1.0 / kStepFraction;  // so the capped step can reach 1.0
    for (Eigen::Index i : idx)
        if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
    return alpha;
}

double max_feasible_step_all(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
    double alpha = 1.0 / kStepFraction;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
    return alpha;
}

// Interior-point core for a problem with at least one inequality or finite
// bound. Equality-only problems take the direct path in solve_qp.
Solution run_ipm(const QpProblem& p, const SolverOptions& opts) {
    const Eigen::Index n = p.n();
    const Eigen::Index neq = p.constraints.eq_a.rows();
    const Eigen::Index nin = p.constraints.ineq_a.rows();
    const auto& lo_b = p.constraints.lower;
    const auto& up_b = p.constraints.upper;

    std::vector<Eigen::Index> lo, up;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (std::isfinite(lo_b[j])) lo.push_back(j);
        if (std::isfinite(up_b[j])) up.push_back(j);
    }
    const double n_comp = static_cast<double>(nin + static_cast<Eigen::Index>(lo.size() + up.size()));

    double bound_scale = 0.0;
    for (Eigen::Index j : lo) bound_scale = std::max(bound_scale, std::abs(lo_b[j]));
    for (Eigen::Index j : up) bound_scale = std::max(bound_scale, std::abs(up_b[j]));
    const double prim_scale =
        1.0 + std::max({neq > 0 ? p.constraints.eq_b.cwiseAbs().maxCoeff() : 0.0,
                        nin > 0 ? p.constraints.ineq_b.cwiseAbs().maxCoeff() : 0.0, bound_scale});
    const double dual_scale = 1.0 + (n > 0 ? p.f.cwiseAbs().maxCoeff() : 0.0);

    // starting point: bound midpoints nudged strictly interior
    IpmState s;
    s.x.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const bool has_lo = std::isfinite(lo_b[j]);
        const bool has_up = std::isfinite(up_b[j]);
        double v;
        double range = 1.0;
        if (has_lo && has_up) {
            v = 0.5 * (lo_b[j] + up_b[j]);
            range = up_b[j] - lo_b[j];
        } else if (has_lo) {
            v = lo_b[j] + 1.0;
        } else if (has_up) {
            v = up_b[j] - 1.0;
        } else {
            v = 0.0;
        }
        const double margin = 1e-4 * range;
        if (has_lo) v = std::max(v, lo_b[j] + margin);
        if (has_up) v = std::min(v, up_b[j] - margin);
        s.x[j] = v;
    }
    s.y = Eigen::VectorXd::Zero(neq);
    s.sq.resize(nin);
    s.lam.resize(nin);
    if (nin > 0) {
        const Eigen::VectorXd r0 = p.constraints.ineq_b - p.constraints.ineq_a * s.x;
        for (Eigen::Index i = 0; i < nin; ++i) {
            s.sq[i] = std::max(1.0, std::abs(r0[i]));
            s.lam[i] = std::max(1.0, std::abs(r0[i]) / prim_scale);
        }
    }
    s.sl = Eigen::VectorXd::Zero(n);
    s.zl = Eigen::VectorXd::Zero(n);
    s.su = Eigen::VectorXd::Zero(n);
    s.zu = Eigen::VectorXd::Zero(n);
    for (Eigen::Index j : lo) {
        s.sl[j] = s.x[j] - lo_b[j];
        s.zl[j] = 1.0;
    }
    for (Eigen::Index j : up) {
        s.su[j] = up_b[j] - s.x[j];
        s.zu[j] = 1.0;
    }

    Solution sol;
    sol.x = s.x;

    auto mu_of = [&](const IpmState& st) {
        double acc = st.lam.dot(st.sq);
        for (Eigen::Index j : lo) acc += st.zl[j] * st.sl[j];
        for (Eigen::Index j : up) acc += st.zu[j] * st.su[j];
        return acc / n_comp;
    };

    KktFactor factor;
    Eigen::VectorXd rd(n), re(neq), rq(nin);
    Eigen::VectorXd rl = Eigen::VectorXd::Zero(n), ru = Eigen::VectorXd::Zero(n);

    bool converged = false;
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        // residuals
        rd = p.h * s.x + p.f;
        if (neq > 0) rd += p.constraints.eq_a.transpose() * s.y;
        if (nin > 0) rd += p.constraints.ineq_a.transpose() * s.lam;
        rd -= s.zl;
        rd += s.zu;
        if (neq > 0) re = p.constraints.eq_a * s.x - p.constraints.eq_b;
        if (nin > 0) rq = p.constraints.ineq_a * s.x + s.sq - p.constraints.ineq_b;
        for (Eigen::Index j : lo) rl[j] = s.x[j] - s.sl[j] - lo_b[j];
        for (Eigen::Index j : up) ru[j] = s.x[j] + s.su[j] - up_b[j];

        double prim_norm = 0.0;
        if (neq > 0) prim_norm = re.cwiseAbs().maxCoeff();
        if (nin > 0) prim_norm = std::max(prim_norm, rq.cwiseAbs().maxCoeff());
        for (Eigen::Index j : lo) prim_norm = std::max(prim_norm, std::abs(rl[j]));
        for (Eigen::Index j : up) prim_norm = std::max(prim_norm, std::abs(ru[j]));
        const double dual_norm = n > 0 ? rd.cwiseAbs().maxCoeff() : 0.0;
        const double mu = mu_of(s);
        double comp_norm = 0.0;
        for (Eigen::Index i = 0; i < nin; ++i)
            comp_norm = std::max(comp_norm, std::abs(s.sq[i] * s.lam[i]));
        for (Eigen::Index j : lo) comp_norm = std::max(comp_norm, std::abs(s.sl[j] * s.zl[j]));
        for (Eigen::Index j : up) comp_norm = std::max(comp_norm, std::abs(s.su[j] * s.zu[j]));

        sol.mu_trace.push_back(mu);
        sol.iterations = iter;

        if (prim_norm <= opts.tol_kkt * prim_scale && dual_norm <= opts.tol_kkt * dual_scale &&
            comp_norm <= opts.tol_kkt * dual_scale) {
            converged = true;
            break;
        }

        // divergence: dual blow-up with stuck primal residual means primal
        // infeasible; primal blow-up means unbounded below
        double dual_mag = nin > 0 ? s.lam.cwiseAbs().maxCoeff() : 0.0;
        for (Eigen::Index j : lo) dual_mag = std::max(dual_mag, s.zl[j]);
        for (Eigen::Index j : up) dual_mag = std::max(dual_mag, s.zu[j]);
        if (dual_mag > kDivergenceLimit * dual_scale &&
            prim_norm > 10.0 * opts.tol_kkt * prim_scale) {
            sol.status = SolveStatus::Infeasible;
            sol.x = s.x;
            sol.iterations = iter;
            finalize(sol, p, s, lo, up);
            return sol;
        }
        if (s.x.cwiseAbs().maxCoeff() > kDivergenceLimit * prim_scale) {
            sol.status = SolveStatus::Unbounded;
            sol.x = s.x;
            finalize(sol, p, s, lo, up);
            return sol;
        }

        // KKT matrix for this iteration
        Eigen::MatrixXd m = p.h;
        if (nin > 0) {
            Eigen::VectorXd dq = s.lam.array() / s.sq.array();
            m += p.constraints.ineq_a.transpose() * dq.asDiagonal() * p.constraints.ineq_a;
        }
        for (Eigen::Index j : lo) m(j, j) += s.zl[j] / s.sl[j];
        for (Eigen::Index j : up) m(j, j) += s.zu[j] / s.su[j];
        if (!factor.factor(m, p.constraints.eq_a, &sol.factorization_perturbed)) {
            sol.status = SolveStatus::MaxIter;
            sol.x = s.x;
            finalize(sol, p, s, lo, up);
            return sol;
        }

        // direction for given complementarity targets; with_residuals=false
        // solves the pure centrality-correction system
        auto solve_direction = [&](const Eigen::VectorXd& tq, const Eigen::VectorXd& tl,
                                   const Eigen::VectorXd& tu, bool with_residuals) {
            Direction d;
            Eigen::VectorXd rhs(n + neq);
            Eigen::VectorXd rx = with_residuals ? (-rd).eval() : Eigen::VectorXd::Zero(n);
            if (nin > 0) {
                Eigen::VectorXd w = tq.array() / s.sq.array();
                if (with_residuals) w += (s.lam.array() / s.sq.array() * rq.array()).matrix();
                rx -= p.constraints.ineq_a.transpose() * w;
            }
            for (Eigen::Index j : lo) {
                rx[j] += tl[j] / s.sl[j];
                if (with_residuals) rx[j] -= s.zl[j] / s.sl[j] * rl[j];
            }
            for (Eigen::Index j : up) {
                rx[j] -= tu[j] / s.su[j];
                if (with_residuals) rx[j] -= s.zu[j] / s.su[j] * ru[j];
            }
            rhs.head(n) = rx;
            if (neq > 0) rhs.tail(neq) = with_residuals ? (-re).eval() : Eigen::VectorXd::Zero(neq);

            const Eigen::VectorXd sol_xy = factor.solve(rhs);
            d.dx = sol_xy.head(n);
            d.dy = sol_xy.tail(neq);
            if (nin > 0) {
                d.dsq = -p.constraints.ineq_a * d.dx;
                if (with_residuals) d.dsq -= rq;
                d.dlam = (tq - s.lam.cwiseProduct(d.dsq)).array() / s.sq.array();
            } else {
                d.dsq.resize(0);
                d.dlam.resize(0);
            }
            d.dsl = Eigen::VectorXd::Zero(n);
            d.dzl = Eigen::VectorXd::Zero(n);
            d.dsu = Eigen::VectorXd::Zero(n);
            d.dzu = Eigen::VectorXd::Zero(n);
            for (Eigen::Index j : lo) {
                d.dsl[j] = d.dx[j] + (with_residuals ? rl[j] : 0.0);
                d.dzl[j] = (tl[j] - s.zl[j] * d.dsl[j]) / s.sl[j];
            }
            for (Eigen::Index j : up) {
                d.dsu[j] = -d.dx[j] - (with_residuals ? ru[j] : 0.0);
                d.dzu[j] = (tu[j] - s.zu[j] * d.dsu[j]) / s.su[j];
            }
            return d;
        };

        auto primal_step = [&](const Direction& d) {
            double a = nin > 0 ? max_feasible_step_all(s.sq, d.dsq) : 1.0 / kStepFraction;
            a = std::min(a, max_feasible_step(s.sl, d.dsl, lo));
            a = std::min(a, max_feasible_step(s.su, d.dsu, up));
            return a;
        };
        auto dual_step = [&](const Direction& d) {
            double a = nin > 0 ? max_feasible_step_all(s.lam, d.dlam) : 1.0 / kStepFraction;
            a = std::min(a, max_feasible_step(s.zl, d.dzl, lo));
            a = std::min(a, max_feasible_step(s.zu, d.dzu, up));
            return a;
        };

        // predictor: pure Newton step on the complementarity products
        Eigen::VectorXd tq_aff = nin > 0 ? (-s.sq.cwiseProduct(s.lam)).eval() : Eigen::VectorXd();
        Eigen::VectorXd tl_aff = Eigen::VectorXd::Zero(n), tu_aff = Eigen::VectorXd::Zero(n);
        for (Eigen::Index j : lo) tl_aff[j] = -s.sl[j] * s.zl[j];
        for (Eigen::Index j : up) tu_aff[j] = -s.su[j] * s.zu[j];
        const Direction aff = solve_direction(tq_aff, tl_aff, tu_aff, true);

        const double ap_aff = std::min(1.0, primal_step(aff));
        const double ad_aff = std::min(1.0, dual_step(aff));
        double mu_aff = 0.0;
        for (Eigen::Index i = 0; i < nin; ++i)
            mu_aff += (s.sq[i] + ap_aff * aff.dsq[i]) * (s.lam[i] + ad_aff * aff.dlam[i]);
        for (Eigen::Index j : lo)
            mu_aff += (s.sl[j] + ap_aff * aff.dsl[j]) * (s.zl[j] + ad_aff * aff.dzl[j]);
        for (Eigen::Index j : up)
            mu_aff += (s.su[j] + ap_aff * aff.dsu[j]) * (s.zu[j] + ad_aff * aff.dzu[j]);
        mu_aff /= n_comp;
        double sigma = std::pow(std::max(0.0, mu_aff / std::max(mu, 1e-300)), 3);
        sigma = std::clamp(sigma, 1e-8, 1.0 - 1e-8);

        // Mehrotra corrector
        Eigen::VectorXd tq = tq_aff, tl = tl_aff, tu = tu_aff;
        if (nin > 0)
            tq += sigma * mu * Eigen::VectorXd::Ones(nin) - aff.dsq.cwiseProduct(aff.dlam);
        for (Eigen::Index j : lo) tl[j] += sigma * mu - aff.dsl[j] * aff.dzl[j];
        for (Eigen::Index j : up) tu[j] += sigma * mu - aff.dsu[j] * aff.dzu[j];
        Direction dir = solve_direction(tq, tl, tu, true);

        // one step length for both primal and dual iterates: since H couples
        // x into the dual residual, unequal steps can leave the dual residual
        // stalled while the complementarity races to zero
        double alpha =
            std::min(1.0, kStepFraction * std::min(primal_step(dir), dual_step(dir)));

        // Gondzio centrality corrections: keep one only if it widens the
        // step length by at least 0.1
        for (int cc = 0; cc < opts.max_centrality_corrections; ++cc) {
            const double mu_t = sigma * mu;
            Eigen::VectorXd gq = Eigen::VectorXd::Zero(nin);
            Eigen::VectorXd gl = Eigen::VectorXd::Zero(n), gu = Eigen::VectorXd::Zero(n);
            auto target = [&](double v) {
                if (v < kGondzioBetaMin * mu_t) return kGondzioBetaMin * mu_t - v;
                if (v > kGondzioBetaMax * mu_t) return kGondzioBetaMax * mu_t - v;
                return 0.0;
            };
            bool any = false;
            for (Eigen::Index i = 0; i < nin; ++i) {
                const double v =
                    (s.sq[i] + alpha * dir.dsq[i]) * (s.lam[i] + alpha * dir.dlam[i]);
                gq[i] = target(v);
                any |= gq[i] != 0.0;
            }
            for (Eigen::Index j : lo) {
                const double v =
                    (s.sl[j] + alpha * dir.dsl[j]) * (s.zl[j] + alpha * dir.dzl[j]);
                gl[j] = target(v);
                any |= gl[j] != 0.0;
            }
            for (Eigen::Index j : up) {
                const double v =
                    (s.su[j] + alpha * dir.dsu[j]) * (s.zu[j] + alpha * dir.dzu[j]);
                gu[j] = target(v);
                any |= gu[j] != 0.0;
            }
            if (!any) break;
            const Direction extra = solve_direction(gq, gl, gu, false);
            Direction cand = dir;
            cand.dx += extra.dx;
            cand.dy += extra.dy;
            if (nin > 0) {
                cand.dlam += extra.dlam;
                cand.dsq += extra.dsq;
            }
            cand.dsl += extra.dsl;
            cand.dzl += extra.dzl;
            cand.dsu += extra.dsu;
            cand.dzu += extra.dzu;
            const double alpha_new =
                std::min(1.0, kStepFraction * std::min(primal_step(cand), dual_step(cand)));
            if (alpha_new >= alpha + 0.1) {
                dir = std::move(cand);
                alpha = alpha_new;
            } else {
                break;
            }
        }

        // keep the complementarity measure from growing: back the step off
        // geometrically while the trial mu exceeds the current one
        auto mu_at = [&](double a) {
            double acc = 0.0;
            for (Eigen::Index i = 0; i < nin; ++i)
                acc += (s.sq[i] + a * dir.dsq[i]) * (s.lam[i] + a * dir.dlam[i]);
            for (Eigen::Index j : lo)
                acc += (s.sl[j] + a * dir.dsl[j]) * (s.zl[j] + a * dir.dzl[j]);
            for (Eigen::Index j : up)
                acc += (s.su[j] + a * dir.dsu[j]) * (s.zu[j] + a * dir.dzu[j]);
            return acc / n_comp;
        };
        for (int bt = 0; bt < 12 && mu_at(alpha) > 1.01 * mu; ++bt) alpha *= 0.7;

        s.x += alpha * dir.dx;
        s.y += alpha * dir.dy;
        if (nin > 0) {
            s.sq += alpha * dir.dsq;
            s.lam += alpha * dir.dlam;
        }
        for (Eigen::Index j : lo) {
            s.sl[j] += alpha * dir.dsl[j];
            s.zl[j] += alpha * dir.dzl[j];
        }
        for (Eigen::Index j : up) {
            s.su[j] += alpha * dir.dsu[j];
            s.zu[j] += alpha * dir.dzu[j];
        }
    }

    sol.status = converged ? SolveStatus::Optimal : SolveStatus::MaxIter;
    sol.x = s.x;
    if (converged) {
        // the path keeps slacks positive; pull any tolerance-level bound
        // violation back inside
        for (Eigen::Index j : lo) sol.x[j] = std::max(sol.x[j], lo_b[j]);
        for (Eigen::Index j : up) sol.x[j] = std::min(sol.x[j], up_b[j]);
    }
    finalize(sol, p, s, lo, up);
    return sol;
}

}  // namespace

KktResiduals kkt_residuals(const QpProblem& p, const Eigen::VectorXd& x, const KktPoint& mult) {
    const Eigen::Index n = p.n();
    const Eigen::Index neq = p.constraints.eq_a.rows();
    const Eigen::Index nin = p.constraints.ineq_a.rows();
    if (x.size() != n || mult.eq_multipliers.size() != neq ||
        mult.ineq_multipliers.size() != nin || mult.lower_duals.size() != n ||
        mult.upper_duals.size() != n)
        throw DataError("kkt_residuals: dimension mismatch");

    KktResiduals r;
    if (neq > 0)
        r.primal = (p.constraints.eq_a * x - p.constraints.eq_b).cwiseAbs().maxCoeff();
    Eigen::VectorXd ineq_slack;
    if (nin > 0) {
        ineq_slack = p.constraints.ineq_b - p.constraints.ineq_a * x;
        r.primal = std::max(r.primal, (-ineq_slack).maxCoeff());
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        if (std::isfinite(p.constraints.lower[j]))
            r.primal = std::max(r.primal, p.constraints.lower[j] - x[j]);
        if (std::isfinite(p.constraints.upper[j]))
            r.primal = std::max(r.primal, x[j] - p.constraints.upper[j]);
    }
    r.primal = std::max(r.primal, 0.0);

    const double dual_scale = 1.0 + (n > 0 ? p.f.cwiseAbs().maxCoeff() : 0.0);
    Eigen::VectorXd stat = p.h * x + p.f;
    if (neq > 0) stat += p.constraints.eq_a.transpose() * mult.eq_multipliers;
    if (nin > 0) stat += p.constraints.ineq_a.transpose() * mult.ineq_multipliers;
    stat -= mult.lower_duals;
    stat += mult.upper_duals;
    r.dual = n > 0 ? stat.cwiseAbs().maxCoeff() / dual_scale : 0.0;

    double comp = 0.0;
    for (Eigen::Index i = 0; i < nin; ++i)
        comp = std::max(comp, std::abs(ineq_slack[i] * mult.ineq_multipliers[i]));
    for (Eigen::Index j = 0; j < n; ++j) {
        if (std::isfinite(p.constraints.lower[j]))
            comp = std::max(comp, std::abs((x[j] - p.constraints.lower[j]) * mult.lower_duals[j]));
        if (std::isfinite(p.constraints.upper[j]))
            comp = std::max(comp, std::abs((p.constraints.upper[j] - x[j]) * mult.upper_duals[j]));
    }
    r.complementarity = comp / dual_scale;
    return r;
}

namespace {

void finalize(Solution& sol, const QpProblem& p, const IpmState& s,
              const std::vector<Eigen::Index>& lo, const std::vector<Eigen::Index>& up) {
    sol.objective = p.objective_at(sol.x);
    sol.multipliers.eq_multipliers = s.y;
    sol.multipliers.ineq_multipliers = s.lam;
    sol.multipliers.lower_duals = Eigen::VectorXd::Zero(p.n());
    sol.multipliers.upper_duals = Eigen::VectorXd::Zero(p.n());
    for (Eigen::Index j : lo) sol.multipliers.lower_duals[j] = s.zl[j];
    for (Eigen::Index j : up) sol.multipliers.upper_duals[j] = s.zu[j];
    sol.kkt = kkt_residuals(p, sol.x, sol.multipliers);
}

// Equality-constrained or unconstrained problem: one KKT solve.
Solution solve_direct(const QpProblem& p, const SolverOptions& opts) {
    const Eigen::Index n = p.n();
    const Eigen::Index neq = p.constraints.eq_a.rows();
    Solution sol;
    KktFactor factor;
    const bool ok = factor.factor(p.h, p.constraints.eq_a, &sol.factorization_perturbed);
    Eigen::VectorXd rhs(n + neq);
    rhs.head(n) = -p.f;
    rhs.tail(neq) = p.constraints.eq_b;
    Eigen::VectorXd xy = ok ? factor.solve(rhs) : Eigen::VectorXd::Zero(n + neq);
    sol.x = xy.head(n);
    sol.iterations = 1;
    sol.multipliers.eq_multipliers = xy.tail(neq);
    sol.multipliers.ineq_multipliers.resize(0);
    sol.multipliers.lower_duals = Eigen::VectorXd::Zero(n);
    sol.multipliers.upper_duals = Eigen::VectorXd::Zero(n);
    sol.kkt = kkt_residuals(p, sol.x, sol.multipliers);
    sol.objective = p.objective_at(sol.x);
    const double prim_scale = 1.0 + (neq > 0 ? p.constraints.eq_b.cwiseAbs().maxCoeff() : 0.0);
    if (ok && sol.kkt.primal <= opts.tol_kkt * prim_scale && sol.kkt.dual <= opts.tol_kkt) {
        sol.status = SolveStatus::Optimal;
    } else if (sol.kkt.primal > opts.tol_kkt * prim_scale) {
        sol.status = SolveStatus::Infeasible;  // inconsistent equality rows
    } else {
        sol.status = SolveStatus::Unbounded;  // H singular along a free direction
    }
    return sol;
}

}  // namespace

Solution solve_qp(const QpProblem& p, const SolverOptions& opts) {
    opts.validate();
    p.validate();
    const auto t0 = std::chrono::steady_clock::now();

    PresolveResult pre = opts.presolve ? presolve(p) : detail::presolve_fix_variables_only(p);

    Solution sol;
    if (pre.report.detected_infeasible) {
        sol.status = SolveStatus::Infeasible;
        sol.x = Eigen::VectorXd::Zero(p.n());
        for (Eigen::Index j = 0; j < p.n(); ++j) {
            if (std::isfinite(p.constraints.lower[j]))
                sol.x[j] = std::max(sol.x[j], p.constraints.lower[j]);
            if (std::isfinite(p.constraints.upper[j]))
                sol.x[j] = std::min(sol.x[j], p.constraints.upper[j]);
        }
        sol.objective = p.objective_at(sol.x);
        sol.multipliers.eq_multipliers = Eigen::VectorXd::Zero(p.constraints.eq_a.rows());
        sol.multipliers.ineq_multipliers = Eigen::VectorXd::Zero(p.constraints.ineq_a.rows());
        sol.multipliers.lower_duals = Eigen::VectorXd::Zero(p.n());
        sol.multipliers.upper_duals = Eigen::VectorXd::Zero(p.n());
        sol.kkt = kkt_residuals(p, sol.x, sol.multipliers);
        sol.solve_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return sol;
    }

    const QpProblem& rp = pre.reduced;
    const bool pure_equality = rp.constraints.ineq_a.rows() == 0 &&
                               !rp.constraints.lower.array().isFinite().any() &&
                               !rp.constraints.upper.array().isFinite().any();
    Solution reduced_sol =
        rp.n() == 0 || pure_equality ? solve_direct(rp, opts) : run_ipm(rp, opts);

    // lift back to the original space
    sol = reduced_sol;
    sol.x = pre.map.lift(reduced_sol.x);
    sol.objective = p.objective_at(sol.x);
    sol.multipliers.eq_multipliers = Eigen::VectorXd::Zero(p.constraints.eq_a.rows());
    for (std::size_t r = 0; r < pre.map.eq_kept.size(); ++r)
        sol.multipliers.eq_multipliers[pre.map.eq_kept[r]] =
            reduced_sol.multipliers.eq_multipliers[static_cast<Eigen::Index>(r)];
    sol.multipliers.ineq_multipliers = Eigen::VectorXd::Zero(p.constraints.ineq_a.rows());
    for (std::size_t r = 0; r < pre.map.ineq_kept.size(); ++r)
        sol.multipliers.ineq_multipliers[pre.map.ineq_kept[r]] =
            reduced_sol.multipliers.ineq_multipliers[static_cast<Eigen::Index>(r)];
    sol.multipliers.lower_duals = Eigen::VectorXd::Zero(p.n());
    sol.multipliers.upper_duals = Eigen::VectorXd::Zero(p.n());
    for (std::size_t j = 0; j < pre.map.kept.size(); ++j) {
        sol.multipliers.lower_duals[pre.map.kept[j]] =
            reduced_sol.multipliers.lower_duals[static_cast<Eigen::Index>(j)];
        sol.multipliers.upper_duals[pre.map.kept[j]] =
            reduced_sol.multipliers.upper_duals[static_cast<Eigen::Index>(j)];
    }
    // fixed variables absorb their stationarity residual into bound duals
    if (!pre.map.fixed.empty()) {
        Eigen::VectorXd g = p.h * sol.x + p.f;
        if (p.constraints.eq_a.rows() > 0)
            g += p.constraints.eq_a.transpose() * sol.multipliers.eq_multipliers;
        if (p.constraints.ineq_a.rows() > 0)
            g += p.constraints.ineq_a.transpose() * sol.multipliers.ineq_multipliers;
        for (const auto& [j, value] : pre.map.fixed) {
            (void)value;
            if (g[j] > 0.0)
                sol.multipliers.lower_duals[j] = g[j];
            else
                sol.multipliers.upper_duals[j] = -g[j];
        }
    }
    sol.kkt = kkt_residuals(p, sol.x, sol.multipliers);
    sol.solve_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sol;
}

}  // namespace boilerctl
