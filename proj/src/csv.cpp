#include "boilerctl/csv.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace boilerctl {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim surrounding whitespace
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return v;
}

void write_double(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const SignalSchema& schema,
                 LoadReport* report) {
    schema.validate();
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file '" + path.string() + "'");
    const auto header = split_line(line);
    std::unordered_map<std::string, std::size_t> col_of;
    for (std::size_t i = 0; i < header.size(); ++i) col_of.emplace(header[i], i);

    auto require = [&](const std::string& name) -> std::size_t {
        auto it = col_of.find(name);
        if (it == col_of.end())
            throw SchemaError("missing column '" + name + "' in '" + path.string() + "'");
        return it->second;
    };

    std::vector<std::size_t> ctrl_cols, meas_cols, temp_cols, o2_cols;
    for (const auto& n : schema.controllable_names) ctrl_cols.push_back(require(n));
    for (const auto& n : schema.measurement_names) meas_cols.push_back(require(n));
    for (const auto& n : schema.target_temperature_names) temp_cols.push_back(require(n));
    for (const auto& n : schema.target_o2_names) o2_cols.push_back(require(n));
    const auto ts_it = col_of.find("timestamp");
    const bool has_ts = ts_it != col_of.end();
    const std::size_t ts_col = has_ts ? ts_it->second : 0;

    Dataset ds;
    ds.schema = schema;
    LoadReport rep;
    std::int64_t fallback_ts = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++rep.rows_read;
        const auto fields = split_line(line);
        TelemetryFrame frame;
        bool ok = fields.size() >= header.size();
        auto grab = [&](const std::vector<std::size_t>& cols, std::vector<double>& out) {
            for (std::size_t c : cols) {
                const auto v = ok ? parse_double(fields[c]) : std::nullopt;
                if (!v || !std::isfinite(*v)) {
                    ok = false;
                    return;
                }
                out.push_back(*v);
            }
        };
        grab(ctrl_cols, frame.controls);
        if (ok) grab(meas_cols, frame.measurements);
        if (ok) grab(temp_cols, frame.temperatures);
        if (ok) grab(o2_cols, frame.o2);
        if (ok && has_ts) {
            const auto v = parse_double(fields[ts_col]);
            if (!v || !std::isfinite(*v)) ok = false;
            else frame.timestamp = static_cast<std::int64_t>(*v);
        } else {
            frame.timestamp = fallback_ts;
        }
        if (!ok) {
            ++rep.rows_dropped;
            continue;
        }
        ++fallback_ts;
        ds.frames.push_back(std::move(frame));
    }
    if (ds.frames.empty())
        throw DataError("no usable rows in '" + path.string() + "' (" +
                        std::to_string(rep.rows_dropped) + " dropped)");
    for (std::size_t i = 1; i < ds.frames.size(); ++i)
        if (ds.frames[i].timestamp <= ds.frames[i - 1].timestamp)
            throw DataError("timestamps not strictly increasing at row " + std::to_string(i));
    if (report) *report = rep;
    return ds;
}

void save_csv(const std::filesystem::path& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "timestamp";
    for (const auto& n : ds.schema.controllable_names) out << ',' << n;
    for (const auto& n : ds.schema.measurement_names) out << ',' << n;
    for (const auto& n : ds.schema.target_temperature_names) out << ',' << n;
    for (const auto& n : ds.schema.target_o2_names) out << ',' << n;
    out << '\n';
    for (const auto& f : ds.frames) {
        out << f.timestamp;
        for (const auto* vec : {&f.controls, &f.measurements, &f.temperatures, &f.o2})
            for (double v : *vec) {
                out << ',';
                write_double(out, v);
            }
        out << '\n';
    }
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace boilerctl
