#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "boilerctl/svr.hpp"

namespace boilerctl {

// Windowed additive bias correction: per target, the mean of the last S
// residuals (actual - raw prediction) is added to future predictions.
class CompensationState {
public:
    explicit CompensationState(int window_size);

    // Pushes (actual - raw_prediction), evicting the oldest residual when
    // the window is full, and recomputes the correction. Non-finite inputs
    // are rejected without touching the state.
    void observe(const std::string& target, double actual, double raw_prediction);

    // raw_prediction + current correction; identity while the buffer is empty.
    [[nodiscard]] double compensate(const std::string& target, double raw_prediction) const;

    [[nodiscard]] double correction(const std::string& target) const;
    [[nodiscard]] std::size_t buffer_size(const std::string& target) const;
    [[nodiscard]] int window_size() const { return window_; }

    // Residuals spanning a boiler restart are meaningless; the loop calls
    // this on timestamp gaps.
    void clear();

private:
    struct Buffer {
        std::vector<double> values;  // ring, capacity = window
        std::size_t head = 0;
        std::size_t count = 0;
        double correction = 0.0;
    };

    int window_;
    std::map<std::string, Buffer> buffers_;
};

struct CompensationSweep {
    std::vector<int> sizes;
    // target name -> delta MSE per size (uncompensated MSE - compensated MSE;
    // positive means compensation helped)
    std::map<std::string, std::vector<double>> delta_mse;
};

// Replays the validation split chronologically for each window size,
// comparing raw and compensated prediction MSE per target.
CompensationSweep sweep_window(const Dataset& ds, const ModelBundle& bundle,
                               const std::vector<int>& sizes);

void write_sweep_csv(const std::filesystem::path& path, const CompensationSweep& sweep);

}  // namespace boilerctl
