#pragma once

#include <Eigen/Core>

#include "boilerctl/compensation.hpp"
#include "boilerctl/qp_problem.hpp"
#include "boilerctl/svr.hpp"

namespace boilerctl {

// Weights of the four objective terms: zone-temperature variance, squared
// O2 side difference, average temperature (rewarded) and average O2
// (penalized). Minimization throughout.
struct ObjectiveWeights {
    double lambda_var = 1.0;   // per (deg C)^2 of zone variance
    double lambda_diff = 50.0; // the O2 sides live on a ~30x smaller scale
    double lambda_temp = 0.02;
    double lambda_o2 = 0.02;

    void validate() const;
};

// The frames every frozen (non-control) feature column is substituted from
// when the controller decides the next step: frames_newest_first[0] is the
// latest observed frame, [1] the one before, and so on. Current-step frozen
// columns read [0]; lag-l columns read [l-1].
struct FeatureContext {
    std::vector<TelemetryFrame> frames_newest_first;

    [[nodiscard]] std::uint64_t hash() const;
};

// The objective evaluated directly through the prediction models at a
// concrete control vector x, with compensation corrections applied:
//   lambda_var * Var_zones(T) + lambda_diff * (O1 - O2)^2
//   - lambda_temp * mean(T) + lambda_o2 * mean(O)
// Var is the population variance over zones.
double evaluate_objective(const ModelBundle& bundle, const CompensationState& comp,
                          const FeatureContext& ctx, const ObjectiveWeights& weights,
                          const Eigen::VectorXd& x);

// Expands the same objective into 1/2 x'Hx + f'x + c over the current-step
// controls. Frozen columns (measurements, other targets, lags) are folded
// into the constant part of each model.
QpProblem build_qp(const ModelBundle& bundle, const CompensationState& comp,
                   const FeatureContext& ctx, const ObjectiveWeights& weights,
                   const ControlConstraints& cons);

}  // namespace boilerctl
