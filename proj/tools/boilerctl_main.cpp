#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "boilerctl/compensation.hpp"
#include "boilerctl/csv.hpp"
#include "boilerctl/heuristics.hpp"
#include "boilerctl/loop.hpp"
#include "boilerctl/metrics.hpp"
#include "boilerctl/objective.hpp"
#include "boilerctl/plant.hpp"
#include "boilerctl/qp_solver.hpp"
#include "boilerctl/run_config.hpp"
#include "boilerctl/svr.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace boilerctl;

namespace {

struct CliState {
    std::string config_path;
    std::string output_dir;
    long seed_override = -1;
    RunConfig cfg;

    void load() {
        cfg = config_path.empty() ? RunConfig{} : parse_config_file(config_path);
        if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        cfg.validate();
    }
    [[nodiscard]] fs::path out() const {
        fs::create_directories(cfg.output_dir);
        return cfg.output_dir;
    }
};

void write_manifest(const CliState& st, const std::string& command,
                    const std::vector<std::string>& artifacts) {
    json j;
    j["command"] = command;
    j["seed"] = st.cfg.seed;
    j["config"] = json::parse(st.cfg.to_json());
    j["artifacts"] = artifacts;
    std::ofstream out(st.out() / ("manifest_" + command + ".json"));
    out << j.dump(2) << '\n';
}

json accuracy_report_for(const Dataset& ds, const ModelBundle& bundle) {
    json report;
    report["layout"] = {{"data_type", to_string(bundle.layout.data_type)},
                        {"lag_depth", bundle.layout.lag_depth}};
    double temp_mse_sum = 0.0, temp_mape_sum = 0.0;
    double o2_mse_sum = 0.0, o2_mape_sum = 0.0;
    json per_target = json::array();
    for (const auto* group : {&bundle.temperature_models, &bundle.o2_models}) {
        for (const auto& m : *group) {
            const auto fm =
                build_features_range(ds, bundle.layout, m.target, ds.val_end, ds.frames.size());
            std::vector<double> pred(static_cast<std::size_t>(fm.x.rows()));
            for (Eigen::Index i = 0; i < fm.x.rows(); ++i)
                pred[static_cast<std::size_t>(i)] = predict(m, fm.x.row(i).transpose());
            std::vector<double> actual(fm.y.data(), fm.y.data() + fm.y.size());
            const double m_mse = mse(pred, actual);
            const double m_mape = mape(pred, actual);
            per_target.push_back({{"target", m.target},
                                  {"test_mse", m_mse},
                                  {"test_mape_pct", m_mape},
                                  {"converged", m.converged}});
            if (group == &bundle.temperature_models) {
                temp_mse_sum += m_mse;
                temp_mape_sum += m_mape;
            } else {
                o2_mse_sum += m_mse;
                o2_mape_sum += m_mape;
            }
        }
    }
    const auto nz = static_cast<double>(bundle.temperature_models.size());
    const auto no = static_cast<double>(bundle.o2_models.size());
    report["per_target"] = per_target;
    report["temperature_avg_mse"] = temp_mse_sum / nz;
    report["temperature_avg_mape_pct"] = temp_mape_sum / nz;
    report["o2_avg_mse"] = o2_mse_sum / no;
    report["o2_avg_mape_pct"] = o2_mape_sum / no;
    return report;
}

Dataset load_dataset(const CliState& st, const std::string& data_path,
                     LoadReport* report = nullptr) {
    const fs::path path = data_path.empty() ? st.out() / "dataset.csv" : fs::path(data_path);
    Dataset ds = load_csv(path, default_schema(), report);
    ds.set_split(st.cfg.train_fraction, st.cfg.val_fraction);
    return ds;
}

// Control-time QP instances sampled across the evaluation span of a
// dataset, one per sampled step.
std::vector<QpProblem> problems_from_dataset(const Dataset& ds, const ModelBundle& bundle,
                                             const RunConfig& cfg, int count) {
    const std::size_t depth = needed_context_depth(bundle.layout);
    const std::size_t begin = std::max(ds.val_end, depth);
    const std::size_t end = ds.frames.size();
    if (begin >= end) throw DataError("bench: evaluation span is empty");
    const int load_idx = [&] {
        for (std::size_t k = 0; k < ds.schema.measurement_names.size(); ++k)
            if (ds.schema.measurement_names[k] == "gen_load") return static_cast<int>(k);
        throw SchemaError("bench: schema lacks a 'gen_load' measurement");
    }();

    PlantSpec spec = cfg.plant_spec();
    CompensationState comp(cfg.compensation_window);
    std::vector<QpProblem> problems;
    for (int k = 0; k < count; ++k) {
        const std::size_t t =
            begin + static_cast<std::size_t>(k) * (end - begin) / static_cast<std::size_t>(count);
        FeatureContext ctx;
        for (std::size_t l = 0; l < depth; ++l) ctx.frames_newest_first.push_back(ds.frames[t - l]);
        const double load = ds.frames[t].measurements[static_cast<std::size_t>(load_idx)];
        problems.push_back(
            build_qp(bundle, comp, ctx, cfg.weights, control_constraints_for(spec, load)));
    }
    return problems;
}

json solution_to_json(const Solution& sol) {
    json j;
    j["status"] = to_string(sol.status);
    j["objective"] = sol.objective;
    j["x"] = std::vector<double>(sol.x.data(), sol.x.data() + sol.x.size());
    j["iterations"] = sol.iterations;
    j["kkt"] = {{"primal", sol.kkt.primal},
                {"dual", sol.kkt.dual},
                {"complementarity", sol.kkt.complementarity}};
    j["solve_time_s"] = sol.solve_time_s;
    return j;
}

int cmd_generate(CliState& st, long steps_override) {
    st.load();
    if (steps_override > 0) st.cfg.steps = steps_override;
    PlantSpec spec = st.cfg.plant_spec();
    Dataset ds =
        generate_dataset(spec, st.cfg.steps, logging_policy_from_string(st.cfg.policy));
    save_csv(st.out() / "dataset.csv", ds);
    json j;
    j["rows"] = ds.frames.size();
    j["train_end"] = ds.train_end;
    j["val_end"] = ds.val_end;
    std::ofstream rep(st.out() / "dataset_report.json");
    rep << j.dump(2) << '\n';
    write_manifest(st, "generate", {"dataset.csv", "dataset_report.json"});
    std::cout << "generated " << ds.frames.size() << " rows -> "
              << (st.out() / "dataset.csv").string() << '\n';
    return 0;
}

int cmd_train(CliState& st, const std::string& data_path, bool sweep_layouts) {
    st.load();
    LoadReport load_rep;
    Dataset ds = load_dataset(st, data_path, &load_rep);

    std::vector<FeatureLayout> layouts;
    if (sweep_layouts) {
        layouts.push_back({DataType::A, 0});
        layouts.push_back({DataType::B, 0});
        layouts.push_back({DataType::C, st.cfg.layout.lag_depth > 0 ? st.cfg.layout.lag_depth : 2});
    } else {
        layouts.push_back(st.cfg.layout);
    }

    json layout_reports = json::array();
    std::vector<std::string> artifacts;
    for (const auto& layout : layouts) {
        SvrConfig svr_cfg = st.cfg.svr;
        if (st.cfg.grid_search)
            svr_cfg = grid_search_svr(ds, layout, {0.1, 1.0, 10.0}, {0.01, 0.1, 0.3}, svr_cfg);
        const ModelBundle bundle = fit_all(ds, layout, svr_cfg);
        const std::string name = "bundle_" + to_string(layout.data_type) + ".json";
        save_bundle(st.out() / name, bundle);
        artifacts.push_back(name);
        json r = accuracy_report_for(ds, bundle);
        r["bundle"] = name;
        r["svr"] = {{"c", svr_cfg.c}, {"epsilon", svr_cfg.epsilon}};
        layout_reports.push_back(std::move(r));
    }
    // the configured layout is the one downstream commands load by default
    fs::copy_file(st.out() / ("bundle_" + to_string(layouts.back().data_type) + ".json"),
                  st.out() / "bundle.json", fs::copy_options::overwrite_existing);
    artifacts.emplace_back("bundle.json");

    json full_report;
    full_report["data"] = {{"rows_read", load_rep.rows_read},
                           {"rows_dropped", load_rep.rows_dropped},
                           {"train_end", ds.train_end},
                           {"val_end", ds.val_end}};
    full_report["layouts"] = layout_reports;
    std::ofstream rep(st.out() / "accuracy_report.json");
    rep << full_report.dump(2) << '\n';
    artifacts.emplace_back("accuracy_report.json");
    write_manifest(st, "train", artifacts);
    std::cout << layout_reports.dump(2) << '\n';
    return 0;
}

int cmd_sweep(CliState& st, const std::string& data_path, const std::string& bundle_path) {
    st.load();
    Dataset ds = load_dataset(st, data_path);
    const ModelBundle bundle =
        load_bundle(bundle_path.empty() ? st.out() / "bundle.json" : fs::path(bundle_path));
    const CompensationSweep sweep = sweep_window(ds, bundle, st.cfg.sweep_sizes);
    write_sweep_csv(st.out() / "compensation_sweep.csv", sweep);
    write_manifest(st, "sweep-compensation", {"compensation_sweep.csv"});
    std::cout << "wrote " << (st.out() / "compensation_sweep.csv").string() << '\n';
    return 0;
}

int cmd_qp_solve(const std::string& file) {
    const QpProblem p = read_qp_file(file);
    const Solution sol = solve_qp(p);
    std::cout << solution_to_json(sol).dump(2) << '\n';
    return 0;
}

int cmd_bench(CliState& st, const std::string& data_path, const std::string& bundle_path) {
    st.load();
    Dataset ds = load_dataset(st, data_path);
    const ModelBundle bundle =
        load_bundle(bundle_path.empty() ? st.out() / "bundle.json" : fs::path(bundle_path));
    const auto problems = problems_from_dataset(ds, bundle, st.cfg, st.cfg.bench_problems);

    std::vector<HeuristicConfig> configs;
    for (const auto& name : st.cfg.bench_algorithms) {
        HeuristicConfig h;
        h.algorithm = heuristic_from_string(name);
        h.population = st.cfg.bench_population;
        h.max_evals = st.cfg.bench_max_evals;
        h.time_budget_s = st.cfg.bench_time_budget_s;
        h.seed = st.cfg.seed;
        configs.push_back(h);
    }
    BenchmarkOptions opts;
    opts.real_time_interval_s = st.cfg.bench_interval_s;
    opts.convergence_epsilon = st.cfg.bench_epsilon;
    const BenchmarkReport report = run_benchmark(problems, configs, st.cfg.solver, opts);

    // objective statistics are deterministic under an eval-capped budget;
    // times live in the separate timing artifacts
    json objectives;
    for (const auto& row : report.rows)
        objectives[row.algorithm] = {{"mean", row.mean_obj},
                                     {"min", row.min_obj},
                                     {"max", row.max_obj},
                                     {"std", row.std_obj}};
    std::ofstream obj_out(st.out() / "bench_objectives.json");
    obj_out << objectives.dump(2) << '\n';

    json timing;
    for (const auto& row : report.rows) {
        timing[row.algorithm] = {{"mean_time_s", row.mean_time_s},
                                 {"converged_within_interval", row.converged_within_interval},
                                 {"times_s", row.times_s}};
    }
    std::ofstream time_out(st.out() / "bench_report_timing.json");
    time_out << timing.dump(2) << '\n';
    std::ofstream table_out(st.out() / "bench_table_timing.txt");
    table_out << benchmark_table(report);

    write_manifest(st, "bench-optimizers",
                   {"bench_objectives.json", "bench_report_timing.json",
                    "bench_table_timing.txt"});
    std::cout << benchmark_table(report);
    return 0;
}

int cmd_simulate(CliState& st, const std::string& bundle_path) {
    st.load();
    PlantSpec spec = st.cfg.plant_spec();
    const ModelBundle bundle =
        load_bundle(bundle_path.empty() ? st.out() / "bundle.json" : fs::path(bundle_path));

    PairedRun pair = make_paired_run(spec, st.cfg.warmup, st.cfg.horizon);

    LoopConfig loop_cfg;
    loop_cfg.weights = st.cfg.weights;
    loop_cfg.solver = st.cfg.solver;
    loop_cfg.control_lower = spec.control_lower;
    loop_cfg.control_upper = spec.control_upper;
    loop_cfg.compensation_window = st.cfg.compensation_window;
    loop_cfg.fallback = fallback_from_string(st.cfg.fallback);
    loop_cfg.horizon = st.cfg.horizon;
    loop_cfg.demand_per_load = spec.coal_per_load;
    const LoopReport report =
        run_closed_loop(pair.plant_at_warm, bundle, pair.warmup_frames, loop_cfg);
    const ScoreDeltas deltas = score_against_log(report, pair.baseline);

    write_loop_csv(st.out() / "loop_report.csv", report, spec.schema);
    write_loop_timing_csv(st.out() / "loop_timing.csv", report);
    save_csv(st.out() / "baseline_log.csv", pair.baseline);

    json j;
    j["aggregates"] = {{"mean_temp_std", report.aggregates.mean_temp_std},
                       {"mean_o2_diff", report.aggregates.mean_o2_diff},
                       {"mean_temperature", report.aggregates.mean_temperature},
                       {"mean_o2", report.aggregates.mean_o2},
                       {"fallback_steps", report.aggregates.fallback_steps}};
    j["deltas_vs_baseline"] = {{"temp_std_reduction_pct", deltas.temp_std_reduction_pct},
                               {"o2_diff_reduction_pct", deltas.o2_diff_reduction_pct},
                               {"avg_temperature_delta", deltas.avg_temperature_delta},
                               {"avg_o2_reduction_pct", deltas.avg_o2_reduction_pct}};
    std::ofstream rep(st.out() / "loop_summary.json");
    rep << j.dump(2) << '\n';

    json timing = {{"mean_solve_time_s", report.aggregates.mean_solve_time_s},
                   {"max_solve_time_s", report.aggregates.max_solve_time_s}};
    std::ofstream trep(st.out() / "loop_summary_timing.json");
    trep << timing.dump(2) << '\n';

    write_manifest(st, "simulate",
                   {"loop_report.csv", "loop_timing.csv", "baseline_log.csv",
                    "loop_summary.json", "loop_summary_timing.json"});
    std::cout << j.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"boiler combustion control toolkit"};
    app.require_subcommand(1);

    CliState st;
    app.add_option("--config", st.config_path, "run configuration file");
    app.add_option("--output", st.output_dir, "output directory (overrides config)");
    app.add_option("--seed", st.seed_override, "seed (overrides config)");

    auto* generate = app.add_subcommand("generate", "synthesize a telemetry dataset");
    long steps_override = 0;
    generate->add_option("--steps", steps_override, "row count (overrides config)");

    auto* train = app.add_subcommand("train", "fit the prediction models");
    std::string data_path, bundle_path;
    bool sweep_layouts = false;
    train->add_option("--data", data_path, "dataset CSV (default <out>/dataset.csv)");
    train->add_flag("--sweep-layouts", sweep_layouts, "train data types A, B and C");

    auto* sweep = app.add_subcommand("sweep-compensation", "window-size sweep");
    sweep->add_option("--data", data_path, "dataset CSV");
    sweep->add_option("--bundle", bundle_path, "model bundle JSON");

    auto* qp_solve = app.add_subcommand("qp-solve", "solve a QP file");
    std::string qp_file;
    qp_solve->add_option("file", qp_file, "QP file")->required();

    auto* bench = app.add_subcommand("bench-optimizers", "compare solvers on control QPs");
    bench->add_option("--data", data_path, "dataset CSV");
    bench->add_option("--bundle", bundle_path, "model bundle JSON");

    auto* simulate = app.add_subcommand("simulate", "closed-loop run against a baseline log");
    simulate->add_option("--bundle", bundle_path, "model bundle JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) return cmd_generate(st, steps_override);
        if (train->parsed()) return cmd_train(st, data_path, sweep_layouts);
        if (sweep->parsed()) return cmd_sweep(st, data_path, bundle_path);
        if (qp_solve->parsed()) return cmd_qp_solve(qp_file);
        if (bench->parsed()) return cmd_bench(st, data_path, bundle_path);
        if (simulate->parsed()) return cmd_simulate(st, bundle_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << '\n';
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
