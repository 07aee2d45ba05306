#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "boilerctl/heuristics.hpp"
#include "boilerctl/loop.hpp"
#include "boilerctl/objective.hpp"
#include "boilerctl/schema.hpp"
#include "boilerctl/svr.hpp"

namespace boilerctl {

// One key-value config file drives every subcommand. Unknown sections or
// keys are rejected with their path so typos cannot silently fall back to
// defaults.
struct RunConfig {
    std::uint64_t seed = 42;
    std::string output_dir = "out";

    // [plant]
    long steps = 13000;
    std::string policy = "random_walk";
    double temp_noise_sigma = 4.0;
    double o2_noise_sigma = 0.12;
    double outlier_rate = 0.002;
    double outlier_scale = 5.0;
    bool drift = true;
    double walk_step_frac = 0.08;

    // [layout]
    FeatureLayout layout{DataType::C, 2};

    // [split]
    double train_fraction = 0.70;
    double val_fraction = 0.15;

    // [svr]
    SvrConfig svr;
    bool grid_search = false;

    // [objective]
    ObjectiveWeights weights;

    // [solver]
    SolverOptions solver;

    // [loop]
    long horizon = 500;
    long warmup = 100;
    int compensation_window = 50;
    std::string fallback = "hold_last";

    // [sweep]
    std::vector<int> sweep_sizes = {1, 2, 3, 5, 8, 12, 20, 30, 50, 80, 120, 200};

    // [bench]
    int bench_problems = 50;
    std::vector<std::string> bench_algorithms = {"DE", "PSO", "GA"};
    int bench_population = 0;
    long bench_max_evals = 20000000;
    double bench_time_budget_s = 5.0;
    double bench_interval_s = 5.0;
    double bench_epsilon = 5e-2;

    void validate() const;
    [[nodiscard]] PlantSpec plant_spec() const;
    [[nodiscard]] std::string to_json() const;  // resolved values, for provenance
};

RunConfig parse_config_file(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");

}  // namespace boilerctl
