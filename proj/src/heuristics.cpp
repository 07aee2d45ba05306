#include "boilerctl/heuristics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "boilerctl/common.hpp"

namespace boilerctl {

std::string to_string(HeuristicAlgo a) {
    switch (a) {
        case HeuristicAlgo::DE: return "DE";
        case HeuristicAlgo::PSO: return "PSO";
        case HeuristicAlgo::GA: return "GA";
    }
    return "?";
}

HeuristicAlgo heuristic_from_string(const std::string& s) {
    if (s == "DE" || s == "de") return HeuristicAlgo::DE;
    if (s == "PSO" || s == "pso") return HeuristicAlgo::PSO;
    if (s == "GA" || s == "ga") return HeuristicAlgo::GA;
    throw ConfigError("unknown heuristic '" + s + "' (expected DE, PSO or GA)");
}

void HeuristicConfig::validate() const {
    if (population != 0 && population < 4) throw ConfigError("heuristic: population must be >= 4");
    if (population != 0 && max_evals < population)
        throw ConfigError("heuristic: max_evals must cover at least one population");
    if (penalty_coeff < 0.0) throw ConfigError("heuristic: penalty_coeff must be positive");
}

namespace {

constexpr double kDeF = 0.5;
constexpr double kDeCr = 0.9;
constexpr double kPsoChi = 0.7298;
constexpr double kPsoC = 2.05;
constexpr double kGaBlendAlpha = 0.5;
constexpr double kGaMutationScale = 0.05;

struct PenalizedObjective {
    const QpProblem* p;
    double mu;

    [[nodiscard]] double raw(const Eigen::VectorXd& x) const { return p->objective_at(x); }
    [[nodiscard]] double penalty(const Eigen::VectorXd& x) const {
        double acc = 0.0;
        if (p->constraints.ineq_a.rows() > 0) {
            const Eigen::VectorXd v = p->constraints.ineq_a * x - p->constraints.ineq_b;
            for (Eigen::Index i = 0; i < v.size(); ++i)
                if (v[i] > 0.0) acc += v[i] * v[i];
        }
        if (p->constraints.eq_a.rows() > 0)
            acc += (p->constraints.eq_a * x - p->constraints.eq_b).squaredNorm();
        return mu * acc;
    }
    [[nodiscard]] double operator()(const Eigen::VectorXd& x) const { return raw(x) + penalty(x); }
};

// Bounds for candidate generation; infinite sides fall back to a wide box.
struct SearchBox {
    Eigen::VectorXd lo, hi;

    explicit SearchBox(const QpProblem& p) {
        const Eigen::Index n = p.n();
        lo.resize(n);
        hi.resize(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double l = p.constraints.lower[j];
            const double u = p.constraints.upper[j];
            lo[j] = std::isfinite(l) ? l : (std::isfinite(u) ? u - 1e3 : -1e3);
            hi[j] = std::isfinite(u) ? u : (std::isfinite(l) ? l + 1e3 : 1e3);
        }
    }
    [[nodiscard]] Eigen::VectorXd clip(Eigen::VectorXd x) const {
        return x.cwiseMax(lo).cwiseMin(hi);
    }
    [[nodiscard]] Eigen::VectorXd sample(Rng& rng) const {
        Eigen::VectorXd x(lo.size());
        for (Eigen::Index j = 0; j < lo.size(); ++j) x[j] = rng.uniform(lo[j], hi[j]);
        return x;
    }
};

struct RunState {
    const PenalizedObjective* obj;
    long max_evals;
    double time_budget_s;  // <= 0 disables the wall clock cap
    std::optional<double> stop_below;
    std::chrono::steady_clock::time_point t0;
    long evals = 0;
    Eigen::VectorXd best_x;
    double best_pen = std::numeric_limits<double>::infinity();

    double evaluate(const Eigen::VectorXd& x) {
        ++evals;
        const double v = (*obj)(x);
        if (v < best_pen) {
            best_pen = v;
            best_x = x;
        }
        return v;
    }
    [[nodiscard]] double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    [[nodiscard]] bool exhausted() const {
        if (evals >= max_evals) return true;
        if (stop_below && best_pen <= *stop_below) return true;
        return time_budget_s > 0.0 && elapsed() >= time_budget_s;
    }
    void record(std::vector<HeuristicTracePoint>& trace) const {
        trace.push_back({evals, elapsed(), best_pen, obj->raw(best_x)});
    }
};

void run_de(RunState& st, const SearchBox& box, int pop, Rng& rng,
            std::vector<HeuristicTracePoint>& trace) {
    std::vector<Eigen::VectorXd> x(static_cast<std::size_t>(pop));
    std::vector<double> fx(static_cast<std::size_t>(pop));
    for (int i = 0; i < pop && !st.exhausted(); ++i) {
        x[static_cast<std::size_t>(i)] = box.sample(rng);
        fx[static_cast<std::size_t>(i)] = st.evaluate(x[static_cast<std::size_t>(i)]);
    }
    st.record(trace);
    const Eigen::Index n = box.lo.size();
    while (!st.exhausted()) {
        for (int i = 0; i < pop && !st.exhausted(); ++i) {
            int r1, r2, r3;
            do r1 = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(pop)));
            while (r1 == i);
            do r2 = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(pop)));
            while (r2 == i || r2 == r1);
            do r3 = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(pop)));
            while (r3 == i || r3 == r1 || r3 == r2);
            const auto& xi = x[static_cast<std::size_t>(i)];
            Eigen::VectorXd trial = xi;
            const auto jrand = static_cast<Eigen::Index>(
                rng.uniform_index(static_cast<std::uint64_t>(n)));
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == jrand || rng.uniform() < kDeCr)
                    trial[j] = x[static_cast<std::size_t>(r1)][j] +
                               kDeF * (x[static_cast<std::size_t>(r2)][j] -
                                       x[static_cast<std::size_t>(r3)][j]);
            }
            trial = box.clip(trial);
            const double ft = st.evaluate(trial);
            if (ft <= fx[static_cast<std::size_t>(i)]) {
                x[static_cast<std::size_t>(i)] = std::move(trial);
                fx[static_cast<std::size_t>(i)] = ft;
            }
        }
        st.record(trace);
    }
}

void run_pso(RunState& st, const SearchBox& box, int pop, Rng& rng,
             std::vector<HeuristicTracePoint>& trace) {
    const Eigen::Index n = box.lo.size();
    std::vector<Eigen::VectorXd> x(static_cast<std::size_t>(pop)),
        v(static_cast<std::size_t>(pop)), pbest(static_cast<std::size_t>(pop));
    std::vector<double> fp(static_cast<std::size_t>(pop));
    Eigen::VectorXd gbest;
    double fg = std::numeric_limits<double>::infinity();
    for (int i = 0; i < pop && !st.exhausted(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        x[k] = box.sample(rng);
        v[k] = Eigen::VectorXd::Zero(n);
        fp[k] = st.evaluate(x[k]);
        pbest[k] = x[k];
        if (fp[k] < fg) {
            fg = fp[k];
            gbest = x[k];
        }
    }
    st.record(trace);
    while (!st.exhausted()) {
        for (int i = 0; i < pop && !st.exhausted(); ++i) {
            const auto k = static_cast<std::size_t>(i);
            for (Eigen::Index j = 0; j < n; ++j) {
                const double r1 = rng.uniform();
                const double r2 = rng.uniform();
                v[k][j] = kPsoChi * (v[k][j] + kPsoC * r1 * (pbest[k][j] - x[k][j]) +
                                     kPsoC * r2 * (gbest[j] - x[k][j]));
            }
            x[k] = box.clip(x[k] + v[k]);
            const double f = st.evaluate(x[k]);
            if (f < fp[k]) {
                fp[k] = f;
                pbest[k] = x[k];
                if (f < fg) {
                    fg = f;
                    gbest = x[k];
                }
            }
        }
        st.record(trace);
    }
}

void run_ga(RunState& st, const SearchBox& box, int pop, Rng& rng,
            std::vector<HeuristicTracePoint>& trace) {
    const Eigen::Index n = box.lo.size();
    std::vector<Eigen::VectorXd> x(static_cast<std::size_t>(pop));
    std::vector<double> fx(static_cast<std::size_t>(pop));
    for (int i = 0; i < pop && !st.exhausted(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        x[k] = box.sample(rng);
        fx[k] = st.evaluate(x[k]);
    }
    st.record(trace);
    const Eigen::VectorXd range = box.hi - box.lo;
    const double p_mut = 1.0 / static_cast<double>(n);
    auto tournament = [&]() -> const Eigen::VectorXd& {
        const auto a = static_cast<std::size_t>(rng.uniform_index(static_cast<std::uint64_t>(pop)));
        const auto b = static_cast<std::size_t>(rng.uniform_index(static_cast<std::uint64_t>(pop)));
        return fx[a] <= fx[b] ? x[a] : x[b];
    };
    while (!st.exhausted()) {
        std::size_t elite = 0;
        for (std::size_t k = 1; k < x.size(); ++k)
            if (fx[k] < fx[elite]) elite = k;
        std::vector<Eigen::VectorXd> next;
        std::vector<double> fnext;
        next.reserve(x.size());
        next.push_back(x[elite]);
        fnext.push_back(fx[elite]);
        while (next.size() < x.size() && !st.exhausted()) {
            const Eigen::VectorXd& pa = tournament();
            const Eigen::VectorXd& pb = tournament();
            Eigen::VectorXd child(n);
            for (Eigen::Index j = 0; j < n; ++j) {
                const double lo_g = std::min(pa[j], pb[j]);
                const double hi_g = std::max(pa[j], pb[j]);
                const double d = hi_g - lo_g;
                child[j] = rng.uniform(lo_g - kGaBlendAlpha * d, hi_g + kGaBlendAlpha * d);
                if (rng.uniform() < p_mut)
                    child[j] += rng.normal(0.0, kGaMutationScale * range[j]);
            }
            child = box.clip(child);
            fnext.push_back(st.evaluate(child));
            next.push_back(std::move(child));
        }
        if (next.size() == x.size()) {
            x = std::move(next);
            fx = std::move(fnext);
        }
        st.record(trace);
    }
}

}  // namespace

HeuristicResult optimize_heuristic(const QpProblem& p, const HeuristicConfig& cfg) {
    cfg.validate();
    p.constraints.validate();
    const Eigen::Index n = p.n();
    if (n == 0) throw DataError("optimize_heuristic: empty problem");

    const int pop = cfg.population > 0 ? cfg.population : static_cast<int>(10 * n);
    const double h_norm = p.h.cwiseAbs().maxCoeff();
    const double mu = cfg.penalty_coeff > 0.0 ? cfg.penalty_coeff : 1e3 * std::max(1.0, h_norm);

    PenalizedObjective obj{&p, mu};
    SearchBox box(p);
    Rng rng(cfg.seed);

    RunState st;
    st.obj = &obj;
    st.max_evals = std::max<long>(cfg.max_evals, pop);
    st.time_budget_s = cfg.time_budget_s;
    st.stop_below = cfg.stop_below;
    st.t0 = std::chrono::steady_clock::now();
    st.best_x = box.clip(Eigen::VectorXd::Zero(n));

    HeuristicResult result;
    switch (cfg.algorithm) {
        case HeuristicAlgo::DE: run_de(st, box, pop, rng, result.trace); break;
        case HeuristicAlgo::PSO: run_pso(st, box, pop, rng, result.trace); break;
        case HeuristicAlgo::GA: run_ga(st, box, pop, rng, result.trace); break;
    }

    result.evals_used = st.evals;
    result.penalty_at_best = obj.penalty(st.best_x);
    result.solution.x = st.best_x;
    result.solution.objective = obj.raw(st.best_x);
    result.solution.status = SolveStatus::MaxIter;
    result.solution.iterations = static_cast<int>(result.trace.size());
    result.solution.solve_time_s = st.elapsed();
    return result;
}

BenchmarkReport run_benchmark(const std::vector<QpProblem>& problems,
                              const std::vector<HeuristicConfig>& configs,
                              const SolverOptions& baseline, const BenchmarkOptions& opts) {
    if (problems.empty()) throw DataError("benchmark: no problems");
    BenchmarkReport report;
    report.options = opts;

    auto finish_row = [](BenchmarkRow& row) {
        const auto n = static_cast<double>(row.objectives.size());
        double mean = 0.0;
        for (double v : row.objectives) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : row.objectives) var += (v - mean) * (v - mean);
        row.mean_obj = mean;
        row.std_obj = std::sqrt(var / n);
        row.min_obj = *std::min_element(row.objectives.begin(), row.objectives.end());
        row.max_obj = *std::max_element(row.objectives.begin(), row.objectives.end());
        double t = 0.0;
        for (double v : row.times_s) t += v;
        row.mean_time_s = t / static_cast<double>(row.times_s.size());
    };

    BenchmarkRow ipc;
    ipc.algorithm = "IPC";
    std::vector<double> ipc_obj;
    for (const auto& p : problems) {
        const Solution s = solve_qp(p, baseline);
        ipc.objectives.push_back(s.objective);
        ipc.times_s.push_back(s.solve_time_s);
        ipc_obj.push_back(s.objective);
    }
    finish_row(ipc);
    report.rows.push_back(std::move(ipc));

    for (const auto& cfg : configs) {
        BenchmarkRow row;
        row.algorithm = to_string(cfg.algorithm);
        std::size_t converged_count = 0;
        for (std::size_t k = 0; k < problems.size(); ++k) {
            HeuristicConfig run_cfg = cfg;
            run_cfg.seed = Rng(cfg.seed).fork(k).next_u64();
            run_cfg.time_budget_s = opts.real_time_interval_s;
            run_cfg.stop_below = ipc_obj[k] + opts.convergence_epsilon;
            const HeuristicResult r = optimize_heuristic(problems[k], run_cfg);
            row.objectives.push_back(r.solution.objective);
            // first generation whose best penalized value is within epsilon
            // of the interior-point optimum
            double t_conv = -1.0;
            for (const auto& pt : r.trace) {
                if (std::abs(pt.best_penalized - ipc_obj[k]) <= opts.convergence_epsilon &&
                    pt.elapsed_s <= opts.real_time_interval_s) {
                    t_conv = pt.elapsed_s;
                    break;
                }
            }
            if (t_conv >= 0.0) {
                ++converged_count;
                row.times_s.push_back(t_conv);
            } else {
                row.times_s.push_back(opts.real_time_interval_s);
            }
        }
        row.converged_within_interval = converged_count * 2 > problems.size();
        finish_row(row);
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::string benchmark_table(const BenchmarkReport& report) {
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-10s %10s %10s %10s %10s %10s\n", "algorithm", "time_s",
                  "mean", "min", "max", "std");
    os << buf;
    for (const auto& row : report.rows) {
        char time_field[32];
        if (row.converged_within_interval)
            std::snprintf(time_field, sizeof(time_field), "%.4g", row.mean_time_s);
        else
            std::snprintf(time_field, sizeof(time_field), "N/C");
        std::snprintf(buf, sizeof(buf), "%-10s %10s %10.4g %10.4g %10.4g %10.4g\n",
                      row.algorithm.c_str(), time_field, row.mean_obj, row.min_obj, row.max_obj,
                      row.std_obj);
        os << buf;
    }
    return os.str();
}

}  // namespace boilerctl
