#include "boilerctl/compensation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "boilerctl/metrics.hpp"

namespace boilerctl {

CompensationState::CompensationState(int window_size) : window_(window_size) {
    if (window_size < 1) throw ConfigError("compensation: window size must be >= 1");
}

void CompensationState::observe(const std::string& target, double actual,
                                double raw_prediction) {
    if (!std::isfinite(actual) || !std::isfinite(raw_prediction)) return;
    auto& buf = buffers_[target];
    if (buf.values.empty()) buf.values.assign(static_cast<std::size_t>(window_), 0.0);
    const double residual = actual - raw_prediction;
    buf.values[buf.head] = residual;
    buf.head = (buf.head + 1) % static_cast<std::size_t>(window_);
    if (buf.count < static_cast<std::size_t>(window_)) ++buf.count;
    // sum oldest to newest so the correction is a pure function of the last
    // `count` residuals, independent of anything evicted
    double sum = 0.0;
    const std::size_t window = static_cast<std::size_t>(window_);
    const std::size_t oldest = buf.count == window ? buf.head : 0;
    for (std::size_t k = 0; k < buf.count; ++k) sum += buf.values[(oldest + k) % window];
    buf.correction = sum / static_cast<double>(buf.count);
}

double CompensationState::compensate(const std::string& target, double raw_prediction) const {
    return raw_prediction + correction(target);
}

double CompensationState::correction(const std::string& target) const {
    auto it = buffers_.find(target);
    return it == buffers_.end() ? 0.0 : it->second.correction;
}

std::size_t CompensationState::buffer_size(const std::string& target) const {
    auto it = buffers_.find(target);
    return it == buffers_.end() ? 0 : it->second.count;
}

void CompensationState::clear() { buffers_.clear(); }

CompensationSweep sweep_window(const Dataset& ds, const ModelBundle& bundle,
                               const std::vector<int>& sizes) {
    if (sizes.empty()) throw ConfigError("sweep_window: sizes must be non-empty");
    for (int s : sizes)
        if (s < 1) throw ConfigError("sweep_window: window sizes must be >= 1");
    ds.validate();

    std::vector<const LinearModel*> models;
    for (const auto* group : {&bundle.temperature_models, &bundle.o2_models})
        for (const auto& m : *group) models.push_back(&m);

    // Raw predictions do not depend on the window size; compute them once.
    struct Trace {
        std::string target;
        std::vector<double> raw;
        std::vector<double> actual;
        std::vector<std::size_t> steps;
    };
    std::vector<Trace> traces;
    for (const auto* m : models) {
        const auto fm = build_features_range(ds, bundle.layout, m->target, ds.train_end, ds.val_end);
        Trace tr;
        tr.target = m->target;
        tr.steps = fm.row_steps;
        tr.raw.resize(static_cast<std::size_t>(fm.x.rows()));
        tr.actual.assign(fm.y.data(), fm.y.data() + fm.y.size());
        for (Eigen::Index i = 0; i < fm.x.rows(); ++i)
            tr.raw[static_cast<std::size_t>(i)] = predict(*m, fm.x.row(i).transpose());
        traces.push_back(std::move(tr));
    }

    CompensationSweep sweep;
    sweep.sizes = sizes;
    for (const auto& tr : traces) {
        std::vector<double> deltas;
        for (int s : sizes) {
            CompensationState state(s);
            std::vector<double> comp(tr.raw.size());
            for (std::size_t i = 0; i < tr.raw.size(); ++i) {
                if (i > 0 && ds.frames[tr.steps[i]].timestamp -
                                     ds.frames[tr.steps[i - 1]].timestamp != 1)
                    state.clear();  // restart marker
                comp[i] = state.compensate(tr.target, tr.raw[i]);
                state.observe(tr.target, tr.actual[i], tr.raw[i]);
            }
            deltas.push_back(mse(tr.raw, tr.actual) - mse(comp, tr.actual));
        }
        sweep.delta_mse[tr.target] = std::move(deltas);
    }
    return sweep;
}

void write_sweep_csv(const std::filesystem::path& path, const CompensationSweep& sweep) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "window_size";
    for (const auto& [target, _] : sweep.delta_mse) out << ",delta_mse_" << target;
    out << '\n';
    for (std::size_t i = 0; i < sweep.sizes.size(); ++i) {
        out << sweep.sizes[i];
        for (const auto& [_, deltas] : sweep.delta_mse) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.17g", deltas[i]);
            out << ',' << buf;
        }
        out << '\n';
    }
}

}  // namespace boilerctl
