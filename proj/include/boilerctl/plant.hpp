#pragma once

#include <Eigen/Core>
#include <vector>

#include "boilerctl/objective.hpp"
#include "boilerctl/schema.hpp"
#include "boilerctl/svr.hpp"

namespace boilerctl {

// Piecewise-constant bias: from start_step on, offsets[k] is added to target
// k (temperature zones first, then O2 sides) until the next segment starts.
struct DriftSegment {
    long start_step = 0;
    Eigen::VectorXd offsets;
};

// Ground-truth dynamics. Each target responds linearly to the current
// frame, plus a shared lagged term
//   u_t = sum_l lag_gains[l] * lag_shape . ([x; M]_{t-l} - lag_reference)
// scaled by a per-target loading. The shared structure makes the current
// values of sibling targets informative proxies for the lag contribution,
// and the lag term itself is what deeper feature layouts can exploit.
struct PlantSpec {
    SignalSchema schema;

    Eigen::MatrixXd temp_current;  // zones x (n_controls + n_measurements)
    Eigen::VectorXd temp_intercepts;
    Eigen::MatrixXd o2_current;
    Eigen::VectorXd o2_intercepts;

    Eigen::VectorXd lag_shape;  // over [controls; measurements]
    Eigen::VectorXd lag_reference;
    std::vector<double> lag_gains;  // length L, geometrically decaying
    Eigen::VectorXd temp_lag_loading;
    Eigen::VectorXd o2_lag_loading;
    // each zone also responds to the lagged feed rates of its own burners;
    // sibling zones carry no trace of this, so only lagged features see it
    double temp_own_lag = 0.0;

    Eigen::VectorXd temp_noise_sigma;
    Eigen::VectorXd o2_noise_sigma;
    double outlier_rate = 0.002;
    double outlier_scale = 5.0;  // multiples of the target noise sigma
    std::vector<DriftSegment> drift_segments;

    // AR(1) per measurement channel
    Eigen::VectorXd meas_mean, meas_phi, meas_innov_sigma;

    Eigen::VectorXd control_lower, control_upper;
    double walk_step_frac = 0.08;  // random-walk step, fraction of range
    double coal_per_load = 0.6;    // demanded total coal feed per unit load

    std::uint64_t seed = 1;

    [[nodiscard]] int lag_length() const { return static_cast<int>(lag_gains.size()); }
    [[nodiscard]] double lag_mass() const;
    void validate() const;
};

// 49-column schema, ~1000 C temperatures, lag kernel of length 3, drift
// segments sized for multi-thousand-step runs.
PlantSpec default_plant_spec(std::uint64_t seed);

// Exact affine response of one target: coefficients over the current
// [controls; measurements] block, one block per lag, and an intercept.
struct TrueAffine {
    Eigen::VectorXd current;
    std::vector<Eigen::VectorXd> lagged;
    double intercept = 0.0;
};

TrueAffine true_affine(const PlantSpec& spec, const std::string& target);

// The generating weights packaged as a type-C model bundle (lag_depth = L,
// identity standardization). Supplying it to the control loop removes model
// error entirely.
ModelBundle true_model_bundle(const PlantSpec& spec);

class Plant {
public:
    explicit Plant(PlantSpec spec);

    // Advances one step under the given controls and returns the resulting
    // frame. The random stream consumed per step does not depend on the
    // controls, so paired runs on one seed see identical disturbances.
    TelemetryFrame step(const Eigen::VectorXd& controls);

    [[nodiscard]] const PlantSpec& spec() const { return spec_; }
    [[nodiscard]] long current_step() const { return step_; }
    // Latest measurement values (the AR state), for demand computation.
    [[nodiscard]] const Eigen::VectorXd& measurements() const { return meas_; }

private:
    PlantSpec spec_;
    long step_ = 0;
    std::vector<Eigen::VectorXd> hist_;  // newest-first [x; M] blocks, length L
    Eigen::VectorXd meas_;
    Rng rng_;
};

enum class LoggingPolicy { RandomWalk, Constant };

LoggingPolicy logging_policy_from_string(const std::string& s);

// Rolls the plant under a logging policy. RandomWalk emulates drifting
// manual operation; Constant holds the bound midpoints.
Dataset generate_dataset(const PlantSpec& spec, long steps, LoggingPolicy policy);

// Re-runs the plant under the control columns of an existing dataset
// (schema must match).
Dataset replay_controls(const PlantSpec& spec, const Dataset& control_source);

// Control bounds plus the load-following equality row
// sum(coal feeds) = coal_per_load * load.
ControlConstraints control_constraints_for(const PlantSpec& spec, double load);

// A controlled run and its uncontrolled baseline branch from one plant
// state: both see the identical disturbance stream, so their difference
// isolates the controller's effect.
struct PairedRun {
    std::vector<TelemetryFrame> warmup_frames;  // shared prefix, oldest-first
    Dataset baseline;                           // random-walk continuation
    Plant plant_at_warm;                        // clone at the branch point
};

PairedRun make_paired_run(const PlantSpec& spec, long warmup, long horizon);

}  // namespace boilerctl
