#include "boilerctl/loop.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace boilerctl {

FallbackPolicy fallback_from_string(const std::string& s) {
    if (s == "hold_last" || s == "HoldLast") return FallbackPolicy::HoldLast;
    if (s == "midpoint" || s == "Midpoint") return FallbackPolicy::Midpoint;
    throw ConfigError("unknown fallback policy '" + s + "'");
}

void LoopConfig::validate() const {
    weights.validate();
    solver.validate();
    if (horizon < 1) throw ConfigError("loop: horizon must be >= 1");
    if (compensation_window < 1) throw ConfigError("loop: compensation window must be >= 1");
    if (control_lower.size() != control_upper.size())
        throw ConfigError("loop: control bound dimensions");
    if (follow_load && demand_per_load <= 0.0)
        throw ConfigError("loop: demand_per_load must be positive when following load");
}

LoopReport run_closed_loop(Plant& plant, const ModelBundle& bundle,
                           const std::vector<TelemetryFrame>& history, const LoopConfig& cfg) {
    cfg.validate();
    if (bundle.schema.hash() != plant.spec().schema.hash())
        throw SchemaError("loop: bundle schema does not match the plant schema");
    const std::size_t depth = needed_context_depth(bundle.layout);
    if (history.size() < depth)
        throw DataError("loop: need at least " + std::to_string(depth) +
                        " history frames, got " + std::to_string(history.size()));

    const SignalSchema& schema = bundle.schema;
    const auto nc = static_cast<Eigen::Index>(schema.n_controls());
    if (cfg.control_lower.size() != nc)
        throw ConfigError("loop: control bounds do not match the schema");
    const int load_idx = [&] {
        for (std::size_t k = 0; k < schema.measurement_names.size(); ++k)
            if (schema.measurement_names[k] == "gen_load") return static_cast<int>(k);
        return -1;
    }();
    if (cfg.follow_load && load_idx < 0)
        throw SchemaError("loop: follow_load requires a 'gen_load' measurement");

    // context: newest-first window over the observed frames
    std::vector<TelemetryFrame> ctx_frames(history.end() - static_cast<long>(depth),
                                           history.end());
    std::reverse(ctx_frames.begin(), ctx_frames.end());

    CompensationState comp(cfg.compensation_window);
    Eigen::VectorXd last_controls(nc);
    for (Eigen::Index k = 0; k < nc; ++k)
        last_controls[k] = ctx_frames.front().controls[static_cast<std::size_t>(k)];
    const Eigen::VectorXd midpoint = 0.5 * (cfg.control_lower + cfg.control_upper);

    LoopReport report;
    report.records.reserve(static_cast<std::size_t>(cfg.horizon));

    for (long t = 0; t < cfg.horizon; ++t) {
        const auto t0 = std::chrono::steady_clock::now();

        ControlConstraints cons = ControlConstraints::box(cfg.control_lower, cfg.control_upper);
        if (cfg.follow_load) {
            Eigen::MatrixXd eq = Eigen::MatrixXd::Zero(1, nc);
            for (Eigen::Index k = 0; k < nc; ++k)
                if (schema.controllable_names[static_cast<std::size_t>(k)].rfind("coal_feed", 0) == 0)
                    eq(0, k) = 1.0;
            cons.eq_a = eq;
            cons.eq_b.resize(1);
            cons.eq_b[0] = cfg.demand_per_load *
                           ctx_frames.front().measurements[static_cast<std::size_t>(load_idx)];
        }

        FeatureContext ctx{ctx_frames};
        QpProblem qp = build_qp(bundle, comp, ctx, cfg.weights, cons);
        Solution sol = solve_qp(qp, cfg.solver);
        if (sol.status != SolveStatus::Optimal && sol.factorization_perturbed) {
            const double delta = qp.n() > 0 ? 1e-10 * qp.h.trace() / static_cast<double>(qp.n())
                                            : 0.0;
            add_ridge(qp, delta);
            sol = solve_qp(qp, cfg.solver);
        }

        LoopStepRecord rec;
        rec.step = plant.current_step();
        rec.status = sol.status;
        if (sol.status == SolveStatus::Optimal) {
            rec.controls = sol.x;
            rec.objective = sol.objective;
        } else {
            rec.fallback_used = true;
            rec.controls =
                cfg.fallback == FallbackPolicy::HoldLast ? last_controls : midpoint;
            rec.objective = evaluate_objective(bundle, comp, ctx, cfg.weights, rec.controls);
        }
        rec.solve_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        // raw model predictions at the applied controls feed the
        // compensation update; the logged prediction adds the correction
        auto predict_targets = [&](const std::vector<LinearModel>& models,
                                   std::vector<double>& raw_out, std::vector<double>& comp_out) {
            for (const auto& m : models) {
                FeatureIndexer idx(schema, m.layout, m.target);
                const double raw =
                    m.weights_controls.dot(rec.controls) +
                    m.weights_measurements.dot(idx.frozen_vector(ctx.frames_newest_first)) +
                    m.intercept;
                raw_out.push_back(raw);
                comp_out.push_back(comp.compensate(m.target, raw));
            }
        };
        predict_targets(bundle.temperature_models, rec.raw_temperatures,
                        rec.predicted_temperatures);
        predict_targets(bundle.o2_models, rec.raw_o2, rec.predicted_o2);

        const TelemetryFrame frame = plant.step(rec.controls);
        rec.actual_temperatures = frame.temperatures;
        rec.actual_o2 = frame.o2;

        for (std::size_t i = 0; i < bundle.temperature_models.size(); ++i)
            comp.observe(bundle.temperature_models[i].target, frame.temperatures[i],
                         rec.raw_temperatures[i]);
        for (std::size_t j = 0; j < bundle.o2_models.size(); ++j)
            comp.observe(bundle.o2_models[j].target, frame.o2[j], rec.raw_o2[j]);

        last_controls = rec.controls;
        for (std::size_t l = ctx_frames.size(); l-- > 1;) ctx_frames[l] = ctx_frames[l - 1];
        ctx_frames[0] = frame;

        report.records.push_back(std::move(rec));
    }

    // aggregates
    auto& agg = report.aggregates;
    for (const auto& rec : report.records) {
        double mean_t = 0.0;
        for (double v : rec.actual_temperatures) mean_t += v;
        mean_t /= static_cast<double>(rec.actual_temperatures.size());
        double var_t = 0.0;
        for (double v : rec.actual_temperatures) var_t += (v - mean_t) * (v - mean_t);
        var_t /= static_cast<double>(rec.actual_temperatures.size());
        agg.mean_temp_std += std::sqrt(var_t);
        agg.mean_temperature += mean_t;
        agg.mean_o2_diff += std::abs(rec.actual_o2[0] - rec.actual_o2[1]);
        agg.mean_o2 += 0.5 * (rec.actual_o2[0] + rec.actual_o2[1]);
        agg.mean_solve_time_s += rec.solve_time_s;
        agg.max_solve_time_s = std::max(agg.max_solve_time_s, rec.solve_time_s);
        if (rec.fallback_used) ++agg.fallback_steps;
    }
    const auto n = static_cast<double>(report.records.size());
    agg.mean_temp_std /= n;
    agg.mean_temperature /= n;
    agg.mean_o2_diff /= n;
    agg.mean_o2 /= n;
    agg.mean_solve_time_s /= n;
    return report;
}

LoopAggregates aggregate_frames(const std::vector<TelemetryFrame>& frames) {
    if (frames.empty()) throw DataError("aggregate_frames: empty input");
    LoopAggregates agg;
    for (const auto& f : frames) {
        double mean_t = 0.0;
        for (double v : f.temperatures) mean_t += v;
        mean_t /= static_cast<double>(f.temperatures.size());
        double var_t = 0.0;
        for (double v : f.temperatures) var_t += (v - mean_t) * (v - mean_t);
        var_t /= static_cast<double>(f.temperatures.size());
        agg.mean_temp_std += std::sqrt(var_t);
        agg.mean_temperature += mean_t;
        agg.mean_o2_diff += std::abs(f.o2[0] - f.o2[1]);
        agg.mean_o2 += 0.5 * (f.o2[0] + f.o2[1]);
    }
    const auto n = static_cast<double>(frames.size());
    agg.mean_temp_std /= n;
    agg.mean_temperature /= n;
    agg.mean_o2_diff /= n;
    agg.mean_o2 /= n;
    return agg;
}

ScoreDeltas score_against_log(const LoopReport& report, const Dataset& baseline) {
    if (report.records.empty()) throw DataError("score: empty report");
    const long first = report.records.front().step;
    const long last = report.records.back().step;
    std::vector<TelemetryFrame> overlap;
    for (const auto& f : baseline.frames)
        if (f.timestamp >= first && f.timestamp <= last) overlap.push_back(f);
    if (overlap.empty()) throw DataError("score: no overlapping steps with the baseline log");

    const LoopAggregates base = aggregate_frames(overlap);
    const LoopAggregates& ctrl = report.aggregates;
    ScoreDeltas d;
    d.temp_std_reduction_pct = (base.mean_temp_std - ctrl.mean_temp_std) / base.mean_temp_std * 100.0;
    d.o2_diff_reduction_pct = (base.mean_o2_diff - ctrl.mean_o2_diff) / base.mean_o2_diff * 100.0;
    d.avg_temperature_delta = ctrl.mean_temperature - base.mean_temperature;
    d.avg_o2_reduction_pct = (base.mean_o2 - ctrl.mean_o2) / base.mean_o2 * 100.0;
    return d;
}

namespace {
void write_num(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}
}  // namespace

void write_loop_csv(const std::filesystem::path& path, const LoopReport& report,
                    const SignalSchema& schema) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "step";
    for (const auto& n : schema.controllable_names) out << ',' << n;
    for (const auto& n : schema.target_temperature_names)
        out << ",pred_" << n << ",actual_" << n;
    for (const auto& n : schema.target_o2_names) out << ",pred_" << n << ",actual_" << n;
    out << ",objective,status,fallback\n";
    for (const auto& rec : report.records) {
        out << rec.step;
        for (Eigen::Index k = 0; k < rec.controls.size(); ++k) {
            out << ',';
            write_num(out, rec.controls[k]);
        }
        for (std::size_t i = 0; i < rec.actual_temperatures.size(); ++i) {
            out << ',';
            write_num(out, rec.predicted_temperatures[i]);
            out << ',';
            write_num(out, rec.actual_temperatures[i]);
        }
        for (std::size_t j = 0; j < rec.actual_o2.size(); ++j) {
            out << ',';
            write_num(out, rec.predicted_o2[j]);
            out << ',';
            write_num(out, rec.actual_o2[j]);
        }
        out << ',';
        write_num(out, rec.objective);
        out << ',' << to_string(rec.status) << ',' << (rec.fallback_used ? 1 : 0) << '\n';
    }
}

void write_loop_timing_csv(const std::filesystem::path& path, const LoopReport& report) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "step,solve_time_s\n";
    for (const auto& rec : report.records) {
        out << rec.step << ',';
        write_num(out, rec.solve_time_s);
        out << '\n';
    }
}

Dataset report_controls_dataset(const LoopReport& report, const SignalSchema& schema) {
    Dataset ds;
    ds.schema = schema;
    for (const auto& rec : report.records) {
        TelemetryFrame f;
        f.timestamp = rec.step;
        f.controls.assign(rec.controls.data(), rec.controls.data() + rec.controls.size());
        f.measurements.assign(schema.n_measurements(), 0.0);
        f.temperatures = rec.actual_temperatures;
        f.o2 = rec.actual_o2;
        ds.frames.push_back(std::move(f));
    }
    return ds;
}

}  // namespace boilerctl
