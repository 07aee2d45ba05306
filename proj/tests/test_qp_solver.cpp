#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "boilerctl/qp_solver.hpp"
#include "oracle_utils.hpp"
#include "test_helpers.hpp"

using namespace boilerctl;

namespace {

QpProblem box_problem(const Eigen::MatrixXd& h, const Eigen::VectorXd& f, double c,
                      const Eigen::VectorXd& lo, const Eigen::VectorXd& up) {
    QpProblem p;
    p.h = h;
    p.f = f;
    p.c = c;
    p.constraints = ControlConstraints::box(lo, up);
    return p;
}

// strictly convex instance with mixed constraints, sized for the
// enumeration oracle
QpProblem random_small_qp(std::uint64_t seed) {
    Rng rng(seed);
    const auto n = static_cast<Eigen::Index>(2 + rng.uniform_index(5));  // 2..6
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.normal();
    QpProblem p;
    p.h = g.transpose() * g + 0.2 * Eigen::MatrixXd::Identity(n, n);
    p.f.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) p.f[i] = rng.normal(0.0, 2.0);
    p.c = rng.normal();

    p.constraints.lower.resize(n);
    p.constraints.upper.resize(n);
    // interior point x0 keeps every instance feasible
    Eigen::VectorXd x0(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x0[i] = rng.uniform(-1.0, 1.0);
        p.constraints.lower[i] = x0[i] - rng.uniform(0.3, 3.0);
        p.constraints.upper[i] = x0[i] + rng.uniform(0.3, 3.0);
        if (rng.uniform() < 0.15) p.constraints.lower[i] = -std::numeric_limits<double>::infinity();
        if (rng.uniform() < 0.15) p.constraints.upper[i] = std::numeric_limits<double>::infinity();
    }
    const auto m = static_cast<Eigen::Index>(rng.uniform_index(4));  // 0..3 inequality rows
    p.constraints.ineq_a.resize(m, n);
    p.constraints.ineq_b.resize(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index j = 0; j < n; ++j) p.constraints.ineq_a(r, j) = rng.normal();
        p.constraints.ineq_b[r] = p.constraints.ineq_a.row(r).dot(x0) + rng.uniform(0.1, 2.0);
    }
    const bool with_eq = n >= 3 && rng.uniform() < 0.5;
    p.constraints.eq_a.resize(with_eq ? 1 : 0, n);
    p.constraints.eq_b.resize(with_eq ? 1 : 0);
    if (with_eq) {
        for (Eigen::Index j = 0; j < n; ++j) p.constraints.eq_a(0, j) = rng.normal();
        p.constraints.eq_b[0] = p.constraints.eq_a.row(0).dot(x0);
    }
    return p;
}

QpProblem random_box_qp(std::uint64_t seed, Eigen::Index n) {
    Rng rng(seed);
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.normal();
    QpProblem p;
    p.h = g.transpose() * g + 0.5 * Eigen::MatrixXd::Identity(n, n);
    p.f.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) p.f[i] = rng.normal(0.0, 3.0);
    p.c = rng.normal();
    p.constraints.lower.resize(n);
    p.constraints.upper.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double a = rng.uniform(-2.0, 2.0);
        p.constraints.lower[i] = a - rng.uniform(0.05, 2.0);
        p.constraints.upper[i] = a + rng.uniform(0.05, 2.0);
    }
    p.constraints.ineq_a.resize(0, n);
    p.constraints.eq_a.resize(0, n);
    return p;
}

}  // namespace

TEST_CASE("unconstrained interior optimum") {
    const Eigen::Index n = 4;
    const auto p = box_problem(Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Zero(n), 2.5,
                               Eigen::VectorXd::Constant(n, -1.0),
                               Eigen::VectorXd::Constant(n, 1.0));
    const Solution s = solve_qp(p);
    CHECK(s.status == SolveStatus::Optimal);
    CHECK(s.x.cwiseAbs().maxCoeff() <= 1e-7);
    CHECK(s.objective == doctest::Approx(2.5).epsilon(1e-9));
}

TEST_CASE("active upper bound by hand KKT") {
    // min x^2 - 2x on [0, 0.3]: unconstrained minimum at 0.5, so x* = 0.3
    Eigen::MatrixXd h(1, 1);
    h << 2.0;
    Eigen::VectorXd f(1), lo(1), up(1);
    f << -2.0;
    lo << 0.0;
    up << 0.3;
    const Solution s = solve_qp(box_problem(h, f, 0.0, lo, up));
    CHECK(s.status == SolveStatus::Optimal);
    CHECK(s.x[0] == doctest::Approx(0.3).epsilon(1e-8));
}

TEST_CASE("matches the enumeration oracle on small mixed problems") {
    int solved = 0;
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        const QpProblem p = random_small_qp(seed);
        const auto oracle_sol = oracle::enumerate_qp(p);
        REQUIRE(oracle_sol.found);
        const Solution s = solve_qp(p);
        CHECK(s.status == SolveStatus::Optimal);
        CHECK(std::abs(s.objective - oracle_sol.objective) <=
              1e-6 * (1.0 + std::abs(oracle_sol.objective)));
        // the oracle's KKT point passes the residual check
        KktPoint om;
        om.eq_multipliers = oracle_sol.eq_mult;
        om.ineq_multipliers = oracle_sol.ineq_mult;
        om.lower_duals = oracle_sol.lower_mult;
        om.upper_duals = oracle_sol.upper_mult;
        const auto res = kkt_residuals(p, oracle_sol.x, om);
        CHECK(res.primal <= 1e-6);
        CHECK(res.dual <= 1e-6);
        CHECK(res.complementarity <= 1e-6);
        ++solved;
    }
    CHECK(solved == 60);
}

TEST_CASE("matches projected gradient on larger box problems") {
    for (std::uint64_t seed = 100; seed < 115; ++seed) {
        const Eigen::Index n = 10 + static_cast<Eigen::Index>(seed % 21);
        const QpProblem p = random_box_qp(seed, n);
        const Solution s = solve_qp(p);
        CHECK(s.status == SolveStatus::Optimal);
        const Eigen::VectorXd x_pg = oracle::projected_gradient_box(p);
        const double obj_pg = p.objective_at(x_pg);
        CHECK(std::abs(s.objective - obj_pg) <= 1e-6 * (1.0 + std::abs(obj_pg)));
    }
}

TEST_CASE("kkt_residuals") {
    const Eigen::Index n = 3;
    const auto p = box_problem(Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Zero(n), 0.0,
                               Eigen::VectorXd::Constant(n, -1.0),
                               Eigen::VectorXd::Constant(n, 1.0));
    KktPoint zero;
    zero.eq_multipliers.resize(0);
    zero.ineq_multipliers.resize(0);
    zero.lower_duals = Eigen::VectorXd::Zero(n);
    zero.upper_duals = Eigen::VectorXd::Zero(n);

    SUBCASE("optimal point of the identity problem") {
        const auto r = kkt_residuals(p, Eigen::VectorXd::Zero(n), zero);
        CHECK(r.primal <= 1e-12);
        CHECK(r.dual <= 1e-12);
        CHECK(r.complementarity <= 1e-12);
    }

    SUBCASE("bound violation shows up as primal residual") {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
        x[1] = 1.5;
        const auto r = kkt_residuals(p, x, zero);
        CHECK(r.primal >= 0.5);
    }

    SUBCASE("dimension checks") {
        KktPoint bad = zero;
        bad.lower_duals.resize(1);
        CHECK_THROWS_AS(kkt_residuals(p, Eigen::VectorXd::Zero(n), bad), DataError);
    }
}

TEST_CASE("presolve") {
    SUBCASE("fixed variable is substituted and restored") {
        Eigen::MatrixXd h = Eigen::MatrixXd::Identity(3, 3);
        h(0, 1) = h(1, 0) = 0.25;
        Eigen::VectorXd f(3), lo(3), up(3);
        f << 1, -2, 0.5;
        lo << -5, 3, -5;
        up << 5, 3, 5;  // x1 pinned at 3
        const QpProblem p = box_problem(h, f, 1.0, lo, up);
        const auto pr = presolve(p);
        CHECK(pr.reduced.n() == 2);
        CHECK(pr.report.fixed_variables ==
              std::vector<std::pair<Eigen::Index, double>>{{1, 3.0}});
        const Solution direct = solve_qp(p, SolverOptions{.presolve = false});
        const Solution via = solve_qp(p, SolverOptions{.presolve = true});
        CHECK(via.x[1] == 3.0);
        CHECK(std::abs(via.objective - direct.objective) <= 1e-8 * (1.0 + std::abs(direct.objective)));
    }

    SUBCASE("all-zero infeasible row is detected") {
        QpProblem p = box_problem(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), 0.0,
                                  Eigen::VectorXd::Constant(2, -1.0),
                                  Eigen::VectorXd::Constant(2, 1.0));
        p.constraints.ineq_a = Eigen::MatrixXd::Zero(1, 2);
        p.constraints.ineq_b = Eigen::VectorXd::Constant(1, -1.0);
        const auto pr = presolve(p);
        CHECK(pr.report.detected_infeasible);
        CHECK(solve_qp(p).status == SolveStatus::Infeasible);
    }

    SUBCASE("all-zero redundant row is dropped") {
        QpProblem p = box_problem(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), 0.0,
                                  Eigen::VectorXd::Constant(2, -1.0),
                                  Eigen::VectorXd::Constant(2, 1.0));
        p.constraints.ineq_a = Eigen::MatrixXd::Zero(1, 2);
        p.constraints.ineq_b = Eigen::VectorXd::Constant(1, 2.0);
        const auto pr = presolve(p);
        CHECK_FALSE(pr.report.detected_infeasible);
        CHECK(pr.report.removed_empty_rows == 1);
        CHECK(pr.reduced.constraints.ineq_a.rows() == 0);
    }

    SUBCASE("duplicate rows keep the tighter bound") {
        QpProblem p = box_problem(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), 0.0,
                                  Eigen::VectorXd::Constant(2, -5.0),
                                  Eigen::VectorXd::Constant(2, 5.0));
        p.constraints.ineq_a.resize(2, 2);
        p.constraints.ineq_a << 1, 1, 1, 1;
        p.constraints.ineq_b.resize(2);
        p.constraints.ineq_b << 4.0, 2.0;
        const auto pr = presolve(p);
        CHECK(pr.report.removed_duplicate_rows == 1);
        CHECK(pr.reduced.constraints.ineq_b[0] == 2.0);
        CHECK(pr.map.ineq_kept == std::vector<Eigen::Index>{1});
    }

    SUBCASE("single-variable rows tighten bounds") {
        QpProblem p = box_problem(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), 0.0,
                                  Eigen::VectorXd::Constant(2, -5.0),
                                  Eigen::VectorXd::Constant(2, 5.0));
        p.constraints.ineq_a.resize(2, 2);
        p.constraints.ineq_a << 2, 0, 0, -1;
        p.constraints.ineq_b.resize(2);
        p.constraints.ineq_b << 6.0, 1.0;  // x0 <= 3, x1 >= -1
        const auto pr = presolve(p);
        CHECK(pr.report.removed_forcing_rows == 2);
        CHECK(pr.report.tightened_bounds == 2);
        CHECK(pr.reduced.constraints.upper[0] == 3.0);
        CHECK(pr.reduced.constraints.lower[1] == -1.0);
        CHECK(pr.reduced.constraints.ineq_a.rows() == 0);
    }

    SUBCASE("tightening that crosses the bounds is flagged infeasible") {
        // x in [0, 5] with the row x <= -1: tightening pulls the upper
        // bound below the lower one
        QpProblem p = box_problem(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), 0.0,
                                  Eigen::VectorXd::Constant(1, 0.0),
                                  Eigen::VectorXd::Constant(1, 5.0));
        p.constraints.ineq_a = Eigen::MatrixXd::Constant(1, 1, 1.0);
        p.constraints.ineq_b = Eigen::VectorXd::Constant(1, -1.0);
        const auto pr = presolve(p);
        CHECK(pr.report.detected_infeasible);
        CHECK(solve_qp(p).status == SolveStatus::Infeasible);
    }

    SUBCASE("presolved and direct solves agree on random instances") {
        for (std::uint64_t seed = 300; seed < 340; ++seed) {
            const QpProblem p = random_small_qp(seed);
            const Solution a = solve_qp(p, SolverOptions{.presolve = true});
            const Solution b = solve_qp(p, SolverOptions{.presolve = false});
            CHECK(a.status == SolveStatus::Optimal);
            CHECK(b.status == SolveStatus::Optimal);
            CHECK(std::abs(a.objective - b.objective) <= 1e-8 * (1.0 + std::abs(b.objective)));
        }
    }
}

TEST_CASE("infeasible and unbounded detection") {
    SUBCASE("bound box conflicting with a row") {
        QpProblem p = box_problem(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), 0.0,
                                  Eigen::VectorXd::Constant(1, 0.0),
                                  Eigen::VectorXd::Constant(1, 1.0));
        p.constraints.ineq_a = Eigen::MatrixXd::Constant(1, 1, 1.0);
        p.constraints.ineq_b = Eigen::VectorXd::Constant(1, -1.0);  // x <= -1 vs x >= 0
        SolverOptions opts;
        opts.presolve = false;  // exercise the iteration-level detector
        const Solution s = solve_qp(p, opts);
        CHECK(s.status == SolveStatus::Infeasible);
    }

    SUBCASE("linear objective escaping to infinity") {
        QpProblem p;
        p.h = Eigen::MatrixXd::Zero(1, 1);
        p.f = Eigen::VectorXd::Constant(1, -1.0);
        p.c = 0.0;
        p.constraints.lower = Eigen::VectorXd::Constant(1, 0.0);
        p.constraints.upper =
            Eigen::VectorXd::Constant(1, std::numeric_limits<double>::infinity());
        p.constraints.ineq_a.resize(0, 1);
        p.constraints.eq_a.resize(0, 1);
        const Solution s = solve_qp(p);
        CHECK(s.status == SolveStatus::Unbounded);
    }

    SUBCASE("inconsistent equality rows") {
        QpProblem p;
        p.h = Eigen::MatrixXd::Identity(1, 1);
        p.f = Eigen::VectorXd::Zero(1);
        p.c = 0.0;
        p.constraints.lower =
            Eigen::VectorXd::Constant(1, -std::numeric_limits<double>::infinity());
        p.constraints.upper =
            Eigen::VectorXd::Constant(1, std::numeric_limits<double>::infinity());
        p.constraints.ineq_a.resize(0, 1);
        p.constraints.eq_a.resize(2, 1);
        p.constraints.eq_a << 1.0, 1.0;
        p.constraints.eq_b.resize(2);
        p.constraints.eq_b << 1.0, 2.0;
        const Solution s = solve_qp(p, SolverOptions{.presolve = false});
        CHECK(s.status == SolveStatus::Infeasible);
    }
}

TEST_CASE("equality-constrained problems take the direct path") {
    // min 1/2 x'x - e'x subject to sum x = 0 has solution x = e - mean(e)
    const Eigen::Index n = 5;
    QpProblem p;
    p.h = Eigen::MatrixXd::Identity(n, n);
    p.f = -Eigen::VectorXd::LinSpaced(n, 1.0, 5.0);
    p.c = 0.0;
    p.constraints.lower = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
    p.constraints.upper = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    p.constraints.ineq_a.resize(0, n);
    p.constraints.eq_a = Eigen::MatrixXd::Ones(1, n);
    p.constraints.eq_b = Eigen::VectorXd::Zero(1);
    const Solution s = solve_qp(p);
    CHECK(s.status == SolveStatus::Optimal);
    const Eigen::VectorXd expected = -p.f - Eigen::VectorXd::Constant(n, 3.0);
    for (Eigen::Index i = 0; i < n; ++i)
        CHECK(s.x[i] == doctest::Approx(expected[i]).epsilon(1e-9));
}

TEST_CASE("solver invariants") {
    SUBCASE("feasibility of optimal solutions") {
        for (std::uint64_t seed = 400; seed < 430; ++seed) {
            const QpProblem p = random_small_qp(seed);
            const Solution s = solve_qp(p);
            REQUIRE(s.status == SolveStatus::Optimal);
            if (p.constraints.eq_a.rows() > 0) {
                const double eq_viol =
                    (p.constraints.eq_a * s.x - p.constraints.eq_b).cwiseAbs().maxCoeff();
                CHECK(eq_viol <= 1e-8 * (1.0 + p.constraints.eq_b.cwiseAbs().maxCoeff()));
            }
            if (p.constraints.ineq_a.rows() > 0)
                CHECK((p.constraints.ineq_a * s.x - p.constraints.ineq_b).maxCoeff() <= 1e-8);
            for (Eigen::Index j = 0; j < p.n(); ++j) {
                if (std::isfinite(p.constraints.lower[j]))
                    CHECK(s.x[j] >= p.constraints.lower[j] - 1e-9);
                if (std::isfinite(p.constraints.upper[j]))
                    CHECK(s.x[j] <= p.constraints.upper[j] + 1e-9);
            }
        }
    }

    SUBCASE("mu decreases monotonically up to 10 percent slack") {
        for (std::uint64_t seed = 500; seed < 510; ++seed) {
            const Solution s = solve_qp(random_small_qp(seed));
            for (std::size_t k = 1; k < s.mu_trace.size(); ++k)
                CHECK(s.mu_trace[k] <= 1.1 * s.mu_trace[k - 1]);
        }
    }

    SUBCASE("bit-identical reruns") {
        const QpProblem p = random_small_qp(600);
        const Solution a = solve_qp(p);
        const Solution b = solve_qp(p);
        CHECK(a.x == b.x);
        CHECK(a.mu_trace == b.mu_trace);
        CHECK(a.iterations == b.iterations);
    }

    SUBCASE("reported objective is the quadratic re-evaluated") {
        for (std::uint64_t seed = 700; seed < 710; ++seed) {
            const QpProblem p = random_small_qp(seed);
            const Solution s = solve_qp(p);
            const double recomputed = 0.5 * s.x.dot(p.h * s.x) + p.f.dot(s.x) + p.c;
            CHECK(std::abs(s.objective - recomputed) <= 1e-12 * (1.0 + std::abs(recomputed)));
        }
    }

    SUBCASE("KKT residuals below tolerance at optimal exits") {
        for (std::uint64_t seed = 800; seed < 820; ++seed) {
            const Solution s = solve_qp(random_small_qp(seed));
            REQUIRE(s.status == SolveStatus::Optimal);
            CHECK(s.kkt.dual <= 1e-7);
            CHECK(s.kkt.complementarity <= 1e-7);
        }
    }

    SUBCASE("asymmetric H is rejected") {
        QpProblem p = box_problem(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), 0.0,
                                  Eigen::VectorXd::Constant(2, -1.0),
                                  Eigen::VectorXd::Constant(2, 1.0));
        p.h(0, 1) = 0.5;  // h(1,0) stays 0
        CHECK_THROWS_AS(solve_qp(p), DataError);
    }

    SUBCASE("equal bounds work with presolve disabled") {
        Eigen::VectorXd lo(2), up(2);
        lo << 1.0, -2.0;
        up << 1.0, 2.0;
        const auto p =
            box_problem(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), 0.0, lo, up);
        const Solution s = solve_qp(p, SolverOptions{.presolve = false});
        CHECK(s.status == SolveStatus::Optimal);
        CHECK(s.x[0] == 1.0);
        CHECK(std::abs(s.x[1]) <= 1e-8);
    }
}
