#include "boilerctl/schema.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace boilerctl {

std::string hash_to_hex(std::uint64_t h) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void SignalSchema::validate() const {
    const std::vector<const std::vector<std::string>*> groups = {
        &controllable_names, &measurement_names, &target_temperature_names,
        &target_o2_names};
    for (const auto* g : groups) {
        if (g->empty()) throw SchemaError("schema: every signal group must be non-empty");
    }
    std::set<std::string> seen;
    for (const auto* g : groups) {
        for (const auto& name : *g) {
            if (name.empty()) throw SchemaError("schema: empty signal name");
            if (!seen.insert(name).second)
                throw SchemaError("schema: duplicate signal name '" + name + "'");
        }
    }
    if (!(sample_period_s > 0.0)) throw SchemaError("schema: sample_period must be positive");
}

bool SignalSchema::is_target(const std::string& name) const {
    return temperature_index(name) >= 0 || o2_index(name) >= 0;
}

int SignalSchema::temperature_index(const std::string& name) const {
    auto it = std::find(target_temperature_names.begin(), target_temperature_names.end(), name);
    if (it == target_temperature_names.end()) return -1;
    return static_cast<int>(it - target_temperature_names.begin());
}

int SignalSchema::o2_index(const std::string& name) const {
    auto it = std::find(target_o2_names.begin(), target_o2_names.end(), name);
    if (it == target_o2_names.end()) return -1;
    return static_cast<int>(it - target_o2_names.begin());
}

std::uint64_t SignalSchema::hash() const {
    Fnv1a h;
    for (const auto* g : {&controllable_names, &measurement_names,
                          &target_temperature_names, &target_o2_names}) {
        h.update(static_cast<std::uint64_t>(g->size()));
        for (const auto& name : *g) h.update(name);
    }
    h.update(sample_period_s);
    return h.digest();
}

SignalSchema default_schema() {
    SignalSchema s;
    for (int i = 1; i <= 12; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "coal_feed_%02d", i);
        s.controllable_names.emplace_back(buf);
    }
    for (int i = 1; i <= 16; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "throttle_%02d", i);
        s.controllable_names.emplace_back(buf);
    }
    s.measurement_names = {
        "gen_load",        "nox_side_a",     "nox_side_b",      "feedwater_flow",
        "steam_pressure",  "steam_temp",     "air_flow_primary", "air_flow_secondary",
        "exhaust_temp_a",  "exhaust_temp_b", "drum_level",       "mill_outlet_temp",
        "ambient_temp"};
    for (int i = 1; i <= 6; ++i)
        s.target_temperature_names.push_back("temp_zone_" + std::to_string(i));
    s.target_o2_names = {"o2_side_a", "o2_side_b"};
    s.sample_period_s = 432.0;
    s.validate();
    return s;
}

bool TelemetryFrame::matches(const SignalSchema& schema) const {
    return controls.size() == schema.n_controls() &&
           measurements.size() == schema.n_measurements() &&
           temperatures.size() == schema.n_temperatures() &&
           o2.size() == schema.n_o2();
}

bool TelemetryFrame::all_finite() const {
    for (const auto* v : {&controls, &measurements, &temperatures, &o2})
        for (double x : *v)
            if (!std::isfinite(x)) return false;
    return true;
}

std::string to_string(DataType t) {
    switch (t) {
        case DataType::A: return "A";
        case DataType::B: return "B";
        case DataType::C: return "C";
    }
    return "?";
}

DataType data_type_from_string(const std::string& s) {
    if (s == "A" || s == "a") return DataType::A;
    if (s == "B" || s == "b") return DataType::B;
    if (s == "C" || s == "c") return DataType::C;
    throw ConfigError("unknown data type '" + s + "' (expected A, B or C)");
}

void FeatureLayout::validate() const {
    if (lag_depth < 0) throw ConfigError("layout: lag_depth must be non-negative");
    if (data_type == DataType::C) {
        if (lag_depth < 1) throw ConfigError("layout: type C requires lag_depth >= 1");
    } else if (lag_depth != 0) {
        throw ConfigError("layout: lag_depth must be 0 for types A and B");
    }
}

void Dataset::validate() const {
    schema.validate();
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (!frames[i].matches(schema))
            throw DataError("dataset: frame " + std::to_string(i) + " does not match schema");
        if (i > 0 && frames[i].timestamp <= frames[i - 1].timestamp)
            throw DataError("dataset: timestamps must be strictly increasing");
    }
    if (train_end != 0 || val_end != 0) {
        if (!(train_end > 0 && train_end < val_end && val_end < frames.size()))
            throw DataError("dataset: split boundaries must satisfy 0 < train_end < val_end < size");
    }
}

void Dataset::set_split(double train_fraction, double val_fraction) {
    if (!(train_fraction > 0.0 && val_fraction >= 0.0 &&
          train_fraction + val_fraction < 1.0))
        throw ConfigError("dataset: invalid split fractions");
    train_end = static_cast<std::size_t>(frames.size() * train_fraction);
    val_end = static_cast<std::size_t>(frames.size() * (train_fraction + val_fraction));
    if (frames.size() >= 3) {
        train_end = std::max<std::size_t>(train_end, 1);
        val_end = std::max(val_end, train_end + 1);
        val_end = std::min(val_end, frames.size() - 1);
    }
}

}  // namespace boilerctl
