#pragma once

#include <filesystem>
#include <vector>

#include "boilerctl/compensation.hpp"
#include "boilerctl/objective.hpp"
#include "boilerctl/plant.hpp"
#include "boilerctl/qp_solver.hpp"

namespace boilerctl {

enum class FallbackPolicy { HoldLast, Midpoint };

FallbackPolicy fallback_from_string(const std::string& s);

struct LoopConfig {
    ObjectiveWeights weights;
    SolverOptions solver;
    Eigen::VectorXd control_lower, control_upper;
    int compensation_window = 50;
    FallbackPolicy fallback = FallbackPolicy::HoldLast;
    long horizon = 500;
    // when true, each step carries the equality row
    // sum(coal feeds) = demand_per_load * latest observed load
    bool follow_load = true;
    double demand_per_load = 0.6;

    void validate() const;
};

struct LoopStepRecord {
    long step = 0;
    Eigen::VectorXd controls;
    std::vector<double> predicted_temperatures;  // compensated
    std::vector<double> raw_temperatures;        // uncompensated model output
    std::vector<double> actual_temperatures;
    std::vector<double> predicted_o2;
    std::vector<double> raw_o2;
    std::vector<double> actual_o2;
    double objective = 0.0;
    SolveStatus status = SolveStatus::MaxIter;
    bool fallback_used = false;
    double solve_time_s = 0.0;  // build_qp + solve
};

struct LoopAggregates {
    double mean_temp_std = 0.0;   // per-step std across zones, averaged
    double mean_o2_diff = 0.0;    // per-step |O1 - O2|, averaged
    double mean_temperature = 0.0;
    double mean_o2 = 0.0;
    double mean_solve_time_s = 0.0;
    double max_solve_time_s = 0.0;
    long fallback_steps = 0;
};

struct LoopReport {
    std::vector<LoopStepRecord> records;
    LoopAggregates aggregates;
};

// Orchestrates one controlled run: freeze the latest observations into the
// models, compensate, assemble and solve the QP, actuate, observe, update
// compensation. `history` holds the most recent observed frames,
// oldest-first, at least as deep as the bundle layout requires.
LoopReport run_closed_loop(Plant& plant, const ModelBundle& bundle,
                           const std::vector<TelemetryFrame>& history, const LoopConfig& cfg);

LoopAggregates aggregate_frames(const std::vector<TelemetryFrame>& frames);

struct ScoreDeltas {
    double temp_std_reduction_pct = 0.0;
    double o2_diff_reduction_pct = 0.0;
    double avg_temperature_delta = 0.0;  // absolute, same unit as the data
    double avg_o2_reduction_pct = 0.0;
};

// The four comparison figures against an uncontrolled log: relative
// reductions for spread and imbalance, absolute temperature difference,
// relative O2 reduction.
ScoreDeltas score_against_log(const LoopReport& report, const Dataset& baseline);

// Per-step CSV without timing columns (timings go to a separate file so
// reruns stay byte-identical).
void write_loop_csv(const std::filesystem::path& path, const LoopReport& report,
                    const SignalSchema& schema);
void write_loop_timing_csv(const std::filesystem::path& path, const LoopReport& report);

// Applied controls as a dataset, for replaying through a fresh plant.
Dataset report_controls_dataset(const LoopReport& report, const SignalSchema& schema);

}  // namespace boilerctl
