#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "boilerctl/common.hpp"

namespace boilerctl {

// Names of every telemetry signal, grouped by role. Controllables are the
// optimizer's decision variables; measurements are observed but not set;
// temperature zones and O2 flue sides are the prediction targets.
struct SignalSchema {
    std::vector<std::string> controllable_names;
    std::vector<std::string> measurement_names;
    std::vector<std::string> target_temperature_names;
    std::vector<std::string> target_o2_names;
    double sample_period_s = 432.0;

    [[nodiscard]] std::size_t n_controls() const { return controllable_names.size(); }
    [[nodiscard]] std::size_t n_measurements() const { return measurement_names.size(); }
    [[nodiscard]] std::size_t n_temperatures() const { return target_temperature_names.size(); }
    [[nodiscard]] std::size_t n_o2() const { return target_o2_names.size(); }
    [[nodiscard]] std::size_t n_targets() const { return n_temperatures() + n_o2(); }
    [[nodiscard]] std::size_t total_columns() const {
        return n_controls() + n_measurements() + n_targets();
    }

    // Throws SchemaError if the four name lists are empty or overlap.
    void validate() const;

    [[nodiscard]] bool is_target(const std::string& name) const;
    // Index of a temperature zone or O2 side, or -1.
    [[nodiscard]] int temperature_index(const std::string& name) const;
    [[nodiscard]] int o2_index(const std::string& name) const;

    [[nodiscard]] std::uint64_t hash() const;
};

// 12 coal feeds, 16 throttles, 13 measurement channels, 6 temperature
// zones, 2 O2 sides: 49 columns at a 432 s sample period.
SignalSchema default_schema();

// One timestamped sample of all signals.
struct TelemetryFrame {
    std::int64_t timestamp = 0;
    std::vector<double> controls;
    std::vector<double> measurements;
    std::vector<double> temperatures;
    std::vector<double> o2;

    [[nodiscard]] bool matches(const SignalSchema& schema) const;
    [[nodiscard]] bool all_finite() const;
};

enum class DataType { A, B, C };

std::string to_string(DataType t);
DataType data_type_from_string(const std::string& s);

// How feature rows are assembled from frames.
//   A: current-step controls + measurements only.
//   B: A plus the current-step values of every target column except the
//      one being predicted.
//   C: B plus `lag_depth` full past frames (all 49 columns, targets
//      included).
struct FeatureLayout {
    DataType data_type = DataType::B;
    int lag_depth = 0;

    void validate() const;
};

struct Dataset {
    SignalSchema schema;
    std::vector<TelemetryFrame> frames;
    std::size_t train_end = 0;
    std::size_t val_end = 0;

    [[nodiscard]] std::size_t size() const { return frames.size(); }
    void validate() const;
    // Chronological split, default 70/15/15.
    void set_split(double train_fraction = 0.70, double val_fraction = 0.15);
};

}  // namespace boilerctl
