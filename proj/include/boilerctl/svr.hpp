#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "boilerctl/features.hpp"
#include "boilerctl/schema.hpp"

namespace boilerctl {

struct SvrConfig {
    double c = 1.0;        // loss penalty
    double epsilon = 0.1;  // insensitivity width, in standardized target units
    // dual optimality violation at exit, as a fraction of the first-pass
    // violation norm
    double tol = 0.05;
    int max_passes = 8000;

    void validate() const;
};

// Fitted affine predictor for one target. Training runs on standardized
// features and target; both the standardized solution and the raw-unit
// weight split (current-step controls vs everything else) are stored.
struct LinearModel {
    std::string target;
    FeatureLayout layout;

    // raw-unit view: prediction == weights_controls . x + weights_measurements . m + intercept
    Eigen::VectorXd weights_controls;
    Eigen::VectorXd weights_measurements;
    double intercept = 0.0;

    // standardization parameters and the solution in standardized space
    Eigen::VectorXd feature_means;
    Eigen::VectorXd feature_scales;
    double target_mean = 0.0;
    double target_scale = 1.0;
    Eigen::VectorXd weights_std;
    double bias_std = 0.0;

    bool converged = false;
    int passes = 0;

    [[nodiscard]] std::size_t n_features() const {
        return static_cast<std::size_t>(weights_controls.size() + weights_measurements.size());
    }
};

// Minimizes 1/2 |w|^2 + C sum max(0, |w.x_i + b - y_i| - eps) on standardized
// data by dual coordinate descent (sequential visit order with periodic
// shrinking; no randomness). Columns [0, n_control_columns) form the
// control partition of the returned model.
LinearModel fit_svr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SvrConfig& cfg,
                    std::size_t n_control_columns = 0);

double predict(const LinearModel& m, const Eigen::VectorXd& features);

// Primal epsilon-insensitive objective of the model on (x, y), evaluated in
// the standardized space the optimizer ran in.
double svr_primal_objective(const LinearModel& m, const Eigen::MatrixXd& x,
                            const Eigen::VectorXd& y, const SvrConfig& cfg);

// One model per temperature zone and O2 side, trained on the training split.
struct ModelBundle {
    SignalSchema schema;
    FeatureLayout layout;
    std::vector<LinearModel> temperature_models;
    std::vector<LinearModel> o2_models;

    [[nodiscard]] bool all_converged() const;
    [[nodiscard]] std::uint64_t hash() const;
    [[nodiscard]] const LinearModel& model_for(const std::string& target) const;
};

ModelBundle fit_all(const Dataset& ds, const FeatureLayout& layout, const SvrConfig& cfg);

// Validation-split grid search; returns the config with lowest mean
// validation MSE across all targets (ties break toward the earlier grid
// point).
SvrConfig grid_search_svr(const Dataset& ds, const FeatureLayout& layout,
                          const std::vector<double>& c_grid,
                          const std::vector<double>& epsilon_grid, const SvrConfig& base);

// JSON round trip: schema, schema hash, layout, per-model weights and
// standardization parameters, convergence flags.
void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace boilerctl
