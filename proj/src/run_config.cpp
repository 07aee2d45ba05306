#include "boilerctl/run_config.hpp"

#include <charconv>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "boilerctl/plant.hpp"

namespace boilerctl {

namespace {

double to_double(const std::string& path, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(path + ": expected a number, got '" + v + "'");
    }
}

long to_long(const std::string& path, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(path + ": expected an integer, got '" + v + "'");
    }
}

bool to_bool(const std::string& path, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ConfigError(path + ": expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(line_no) + ": malformed section");
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
        auto trim = [](std::string s) {
            const auto bb = s.find_first_not_of(" \t");
            const auto ee = s.find_last_not_of(" \t");
            return bb == std::string::npos ? std::string() : s.substr(bb, ee - bb + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string path = section + "." + key;

        if (section == "run") {
            if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_long(path, value));
            else if (key == "output_dir") cfg.output_dir = value;
            else throw ConfigError("unknown key '" + path + "'");
        } else if (section == "plant") {
            if (key == "steps") cfg.steps = to_long(path, value);
            else if (key == "policy") cfg.policy = value;
            else if (key == "temp_noise_sigma") cfg.temp_noise_sigma = to_double(path, value);
            else if (key == "o2_noise_sigma") cfg.o2_noise_sigma = to_double(path, value);
            else if (key == "outlier_rate") cfg.outlier_rate = to_double(path, value);
            else if (key == "outlier_scale") cfg.outlier_scale = to_double(path, value);
            else if (key == "drift") cfg.drift = to_bool(path, value);
            else if (key == "walk_step_frac") cfg.walk_step_frac = to_double(path, value);
            else throw ConfigError("unknown key '" + path + "'");
        } else if (section == "layout") {
            if (key == "data_type") cfg.layout.data_type = data_type_from_string(value);
            else if (key == "lag_depth") cfg.layout.lag_depth = static_cast<int>(to_long(path, value));
            else throw ConfigError("unknown key '" + path + "'");
        } else if (section == "split") {
            if (key == "train_fraction") cfg.train_fraction = to_double(path, value);
            else if (key == "val_fraction") cfg.val_fraction = to_double(path, value);
            else throw ConfigError("unknown key '" + path + "'");
        } else if (section == "svr") {
            if (key == "c") cfg.svr.c = to_double(path, value);
            else if (key == "epsilon") cfg.svr.epsilon = to_double(path, value);
            else if (key == "tol") cfg.svr.tol = to_double(path, value);
            else if (key == "max_passes") cfg.svr.max_passes = static_cast<int>(to_long(path, value));
            else if (key == "grid_search") cfg.grid_search = to_bool(path, value);
            else throw ConfigError("unknown key '" + path + "'");
        } else if (section == "objective") {
            if (key == "lambda_var") cfg.weights.lambda_var = to_double(path, value);
            else if (key == "lambda_diff") cfg.weights.lambda_diff = to_double(path, value);
            else if (key == "lambda_temp") cfg.weights.lambda_temp = to_double(path, value);
            else if (key == "lambda_o2") cfg.weights.lambda_o2 = to_double(path, value);
            else throw ConfigError("unknown key '" + path + "'");
        } else if (section == "solver") {
            if (key == "tol_kkt") cfg.solver.tol_kkt = to_double(path, value);
            else if (key == "max_iter") cfg.solver.max_iter = static_cast<int>(to_long(path, value));
            else if (key == "max_centrality_corrections")
                cfg.solver.max_centrality_corrections = static_cast<int>(to_long(path, value));
            else if (key == "presolve") cfg.solver.presolve = to_bool(path, value);
            else throw ConfigError("unknown key '" + path + "'");
        } else if (section == "loop") {
            if (key == "horizon") cfg.horizon = to_long(path, value);
            else if (key == "warmup") cfg.warmup = to_long(path, value);
            else if (key == "compensation_window")
                cfg.compensation_window = static_cast<int>(to_long(path, value));
            else if (key == "fallback") cfg.fallback = value;
            else throw ConfigError("unknown key '" + path + "'");
        } else if (section == "sweep") {
            if (key == "sizes") {
                cfg.sweep_sizes.clear();
                for (const auto& s : split_list(value))
                    cfg.sweep_sizes.push_back(static_cast<int>(to_long(path, s)));
            } else {
                throw ConfigError("unknown key '" + path + "'");
            }
        } else if (section == "bench") {
            if (key == "problems") cfg.bench_problems = static_cast<int>(to_long(path, value));
            else if (key == "algorithms") cfg.bench_algorithms = split_list(value);
            else if (key == "population") cfg.bench_population = static_cast<int>(to_long(path, value));
            else if (key == "max_evals") cfg.bench_max_evals = to_long(path, value);
            else if (key == "time_budget_s") cfg.bench_time_budget_s = to_double(path, value);
            else if (key == "real_time_interval_s") cfg.bench_interval_s = to_double(path, value);
            else if (key == "convergence_epsilon") cfg.bench_epsilon = to_double(path, value);
            else throw ConfigError("unknown key '" + path + "'");
        } else {
            throw ConfigError("unknown section '[" + section + "]' (key '" + key + "')");
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.string());
}

void RunConfig::validate() const {
    layout.validate();
    svr.validate();
    weights.validate();
    solver.validate();
    if (steps < 8) throw ConfigError("plant.steps: need at least 8 steps");
    if (!(train_fraction > 0 && val_fraction >= 0 && train_fraction + val_fraction < 1))
        throw ConfigError("split: invalid fractions");
    if (horizon < 1) throw ConfigError("loop.horizon must be >= 1");
    if (warmup < 1) throw ConfigError("loop.warmup must be >= 1");
    if (compensation_window < 1) throw ConfigError("loop.compensation_window must be >= 1");
    if (sweep_sizes.empty()) throw ConfigError("sweep.sizes must be non-empty");
    for (int s : sweep_sizes)
        if (s < 1) throw ConfigError("sweep.sizes entries must be >= 1");
    if (bench_problems < 1) throw ConfigError("bench.problems must be >= 1");
    for (const auto& a : bench_algorithms) heuristic_from_string(a);
    logging_policy_from_string(policy);
    fallback_from_string(fallback);
    if (outlier_rate < 0 || outlier_rate >= 0.2)
        throw ConfigError("plant.outlier_rate must be in [0, 0.2)");
}

PlantSpec RunConfig::plant_spec() const {
    PlantSpec spec = default_plant_spec(seed);
    spec.temp_noise_sigma.setConstant(temp_noise_sigma);
    spec.o2_noise_sigma.setConstant(o2_noise_sigma);
    spec.outlier_rate = outlier_rate;
    spec.outlier_scale = outlier_scale;
    spec.walk_step_frac = walk_step_frac;
    if (!drift) spec.drift_segments.clear();
    spec.validate();
    return spec;
}

std::string RunConfig::to_json() const {
    nlohmann::ordered_json j;
    j["run"] = {{"seed", seed}, {"output_dir", output_dir}};
    j["plant"] = {{"steps", steps},
                  {"policy", policy},
                  {"temp_noise_sigma", temp_noise_sigma},
                  {"o2_noise_sigma", o2_noise_sigma},
                  {"outlier_rate", outlier_rate},
                  {"outlier_scale", outlier_scale},
                  {"drift", drift},
                  {"walk_step_frac", walk_step_frac}};
    j["layout"] = {{"data_type", to_string(layout.data_type)}, {"lag_depth", layout.lag_depth}};
    j["split"] = {{"train_fraction", train_fraction}, {"val_fraction", val_fraction}};
    j["svr"] = {{"c", svr.c},
                {"epsilon", svr.epsilon},
                {"tol", svr.tol},
                {"max_passes", svr.max_passes},
                {"grid_search", grid_search}};
    j["objective"] = {{"lambda_var", weights.lambda_var},
                      {"lambda_diff", weights.lambda_diff},
                      {"lambda_temp", weights.lambda_temp},
                      {"lambda_o2", weights.lambda_o2}};
    j["solver"] = {{"tol_kkt", solver.tol_kkt},
                   {"max_iter", solver.max_iter},
                   {"max_centrality_corrections", solver.max_centrality_corrections},
                   {"presolve", solver.presolve}};
    j["loop"] = {{"horizon", horizon},
                 {"warmup", warmup},
                 {"compensation_window", compensation_window},
                 {"fallback", fallback}};
    j["sweep"] = {{"sizes", sweep_sizes}};
    j["bench"] = {{"problems", bench_problems},
                  {"algorithms", bench_algorithms},
                  {"population", bench_population},
                  {"max_evals", bench_max_evals},
                  {"time_budget_s", bench_time_budget_s},
                  {"real_time_interval_s", bench_interval_s},
                  {"convergence_epsilon", bench_epsilon}};
    return j.dump(2);
}

}  // namespace boilerctl
