#include "boilerctl/features.hpp"

#include <stdexcept>

namespace boilerctl {

FeatureIndexer::FeatureIndexer(const SignalSchema& schema, const FeatureLayout& layout,
                               const std::string& target)
    : schema_(&schema), layout_(layout), target_(target), n_controls_(schema.n_controls()) {
    layout.validate();
    const int temp_idx = schema.temperature_index(target);
    const int o2_idx = schema.o2_index(target);
    if (temp_idx < 0 && o2_idx < 0)
        throw DataError("unknown target '" + target + "'");

    auto push_group = [&](SignalGroup g, std::size_t count, int lag, int skip = -1) {
        for (std::size_t i = 0; i < count; ++i) {
            if (lag == 0 && skip >= 0 && static_cast<int>(i) == skip) continue;
            columns_.push_back({lag, g, static_cast<int>(i)});
        }
    };

    push_group(SignalGroup::Control, schema.n_controls(), 0);
    push_group(SignalGroup::Measurement, schema.n_measurements(), 0);
    if (layout.data_type != DataType::A) {
        push_group(SignalGroup::Temperature, schema.n_temperatures(), 0, temp_idx);
        push_group(SignalGroup::O2, schema.n_o2(), 0, o2_idx);
    }
    if (layout.data_type == DataType::C) {
        for (int lag = 1; lag <= layout.lag_depth; ++lag) {
            push_group(SignalGroup::Control, schema.n_controls(), lag);
            push_group(SignalGroup::Measurement, schema.n_measurements(), lag);
            push_group(SignalGroup::Temperature, schema.n_temperatures(), lag);
            push_group(SignalGroup::O2, schema.n_o2(), lag);
        }
    }
}

std::vector<std::string> FeatureIndexer::names() const {
    std::vector<std::string> out;
    out.reserve(columns_.size());
    for (const auto& c : columns_) {
        const std::string prefix = c.lag == 0 ? "cur" : "lag" + std::to_string(c.lag);
        const std::vector<std::string>* group = nullptr;
        switch (c.group) {
            case SignalGroup::Control: group = &schema_->controllable_names; break;
            case SignalGroup::Measurement: group = &schema_->measurement_names; break;
            case SignalGroup::Temperature: group = &schema_->target_temperature_names; break;
            case SignalGroup::O2: group = &schema_->target_o2_names; break;
        }
        out.push_back(prefix + ":" + (*group)[static_cast<std::size_t>(c.index)]);
    }
    return out;
}

namespace {
double frame_value(const TelemetryFrame& f, SignalGroup g, int index) {
    switch (g) {
        case SignalGroup::Control: return f.controls[static_cast<std::size_t>(index)];
        case SignalGroup::Measurement: return f.measurements[static_cast<std::size_t>(index)];
        case SignalGroup::Temperature: return f.temperatures[static_cast<std::size_t>(index)];
        case SignalGroup::O2: return f.o2[static_cast<std::size_t>(index)];
    }
    return 0.0;
}
}  // namespace

double FeatureIndexer::value_at(std::span<const TelemetryFrame> frames, std::size_t t,
                                const FeatureColumn& c) const {
    return frame_value(frames[t - static_cast<std::size_t>(c.lag)], c.group, c.index);
}

double FeatureIndexer::value_from_context(std::span<const TelemetryFrame> ctx,
                                          const FeatureColumn& c) const {
    const std::size_t slot = c.lag == 0 ? 0 : static_cast<std::size_t>(c.lag) - 1;
    if (slot >= ctx.size())
        throw DataError("feature context too shallow: need depth " +
                        std::to_string(slot + 1) + ", have " + std::to_string(ctx.size()));
    return frame_value(ctx[slot], c.group, c.index);
}

Eigen::VectorXd FeatureIndexer::frozen_vector(std::span<const TelemetryFrame> ctx) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(n_frozen_columns()));
    Eigen::Index k = 0;
    for (std::size_t i = n_controls_; i < columns_.size(); ++i)
        out[k++] = value_from_context(ctx, columns_[i]);
    return out;
}

Eigen::VectorXd FeatureIndexer::full_vector(const Eigen::VectorXd& controls,
                                            std::span<const TelemetryFrame> ctx) const {
    if (controls.size() != static_cast<Eigen::Index>(n_controls_))
        throw DataError("control vector length mismatch");
    Eigen::VectorXd out(static_cast<Eigen::Index>(n_columns()));
    out.head(controls.size()) = controls;
    out.tail(static_cast<Eigen::Index>(n_frozen_columns())) = frozen_vector(ctx);
    return out;
}

FeatureMatrix build_features(const Dataset& ds, const FeatureLayout& layout,
                             const std::string& target) {
    return build_features_range(ds, layout, target, 0, ds.frames.size());
}

FeatureMatrix build_features_range(const Dataset& ds, const FeatureLayout& layout,
                                   const std::string& target, std::size_t begin,
                                   std::size_t end) {
    layout.validate();
    const auto lag = static_cast<std::size_t>(layout.lag_depth);
    if (lag >= ds.frames.size())
        throw DataError("lag_depth " + std::to_string(lag) + " >= frame count " +
                        std::to_string(ds.frames.size()));
    FeatureIndexer idx(ds.schema, layout, target);

    const int temp_i = ds.schema.temperature_index(target);
    const int o2_i = ds.schema.o2_index(target);

    std::vector<std::size_t> rows;
    for (std::size_t t = std::max(begin, lag); t < std::min(end, ds.frames.size()); ++t) {
        // a lag window crossing a timestamp gap would mix pre/post-restart data
        const bool contiguous =
            ds.frames[t].timestamp - ds.frames[t - lag].timestamp ==
            static_cast<std::int64_t>(lag);
        if (contiguous) rows.push_back(t);
    }

    FeatureMatrix fm;
    fm.column_names = idx.names();
    fm.row_steps = rows;
    fm.x.resize(static_cast<Eigen::Index>(rows.size()),
                static_cast<Eigen::Index>(idx.n_columns()));
    fm.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::size_t t = rows[r];
        const auto& cols = idx.columns();
        for (std::size_t c = 0; c < cols.size(); ++c)
            fm.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                idx.value_at(ds.frames, t, cols[c]);
        fm.y[static_cast<Eigen::Index>(r)] =
            temp_i >= 0 ? ds.frames[t].temperatures[static_cast<std::size_t>(temp_i)]
                        : ds.frames[t].o2[static_cast<std::size_t>(o2_i)];
    }
    return fm;
}

std::vector<std::string> feature_names(const SignalSchema& schema, const FeatureLayout& layout,
                                       const std::string& target) {
    return FeatureIndexer(schema, layout, target).names();
}

std::size_t needed_context_depth(const FeatureLayout& layout) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(layout.lag_depth));
}

}  // namespace boilerctl
