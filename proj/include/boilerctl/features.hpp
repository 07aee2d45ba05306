#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "boilerctl/schema.hpp"

namespace boilerctl {

enum class SignalGroup { Control, Measurement, Temperature, O2 };

// One feature column: the value of signal (group, index) taken `lag` steps
// before the predicted step. lag 0 is the current step.
struct FeatureColumn {
    int lag = 0;
    SignalGroup group = SignalGroup::Control;
    int index = 0;
};

// Deterministic column order for a (schema, layout, target) triple. All
// feature assembly — training matrices, control-time substitution, weight
// partitioning — goes through this class so the orders can never drift
// apart.
//
// Order: current controls, current measurements, then for types B and C the
// current-step target columns other than the predicted one (temperatures in
// schema order, then O2 sides), then for type C one full frame per lag
// (controls, measurements, temperatures, O2).
class FeatureIndexer {
public:
    FeatureIndexer(const SignalSchema& schema, const FeatureLayout& layout,
                   const std::string& target);

    [[nodiscard]] std::size_t n_columns() const { return columns_.size(); }
    [[nodiscard]] std::size_t n_control_columns() const { return n_controls_; }
    [[nodiscard]] std::size_t n_frozen_columns() const { return columns_.size() - n_controls_; }
    [[nodiscard]] const std::vector<FeatureColumn>& columns() const { return columns_; }
    [[nodiscard]] std::vector<std::string> names() const;

    [[nodiscard]] const SignalSchema& schema() const { return *schema_; }
    [[nodiscard]] const FeatureLayout& layout() const { return layout_; }
    [[nodiscard]] const std::string& target() const { return target_; }

    // Training-time value of column c for the row predicting step t:
    // lag-l columns read frames[t - l].
    [[nodiscard]] double value_at(std::span<const TelemetryFrame> frames, std::size_t t,
                                  const FeatureColumn& c) const;

    // Control-time value, where frames_newest_first[0] is the latest
    // observed frame (step t-1 when deciding step t). Current-step frozen
    // columns are substituted with that latest frame; lag-l columns read
    // frames_newest_first[l-1].
    [[nodiscard]] double value_from_context(std::span<const TelemetryFrame> frames_newest_first,
                                            const FeatureColumn& c) const;

    // All non-control columns, in order, substituted from the context.
    [[nodiscard]] Eigen::VectorXd frozen_vector(
        std::span<const TelemetryFrame> frames_newest_first) const;

    // Full feature vector: controls from x, the rest from the context.
    [[nodiscard]] Eigen::VectorXd full_vector(
        const Eigen::VectorXd& controls,
        std::span<const TelemetryFrame> frames_newest_first) const;

private:
    const SignalSchema* schema_;
    FeatureLayout layout_;
    std::string target_;
    std::size_t n_controls_;
    std::vector<FeatureColumn> columns_;
};

struct FeatureMatrix {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    std::vector<std::size_t> row_steps;  // step index of each row
    std::vector<std::string> column_names;
};

// Builds the lagged feature matrix for one target. Rows whose lag window
// crosses a timestamp gap are skipped (boiler restarts). Throws on unknown
// target or lag_depth >= frame count.
FeatureMatrix build_features(const Dataset& ds, const FeatureLayout& layout,
                             const std::string& target);

// Same, restricted to rows whose predicted step lies in [begin, end).
FeatureMatrix build_features_range(const Dataset& ds, const FeatureLayout& layout,
                                   const std::string& target, std::size_t begin,
                                   std::size_t end);

std::vector<std::string> feature_names(const SignalSchema& schema, const FeatureLayout& layout,
                                       const std::string& target);

// Context depth run_closed_loop must maintain for a layout.
std::size_t needed_context_depth(const FeatureLayout& layout);

}  // namespace boilerctl
