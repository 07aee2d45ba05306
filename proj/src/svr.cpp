#include "boilerctl/svr.hpp"

#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <nlohmann/json.hpp>

#include "boilerctl/metrics.hpp"

namespace boilerctl {

using json = nlohmann::ordered_json;

void SvrConfig::validate() const {
    if (!(c > 0.0)) throw ConfigError("svr: c must be positive");
    if (!(epsilon >= 0.0)) throw ConfigError("svr: epsilon must be non-negative");
    if (!(tol > 0.0)) throw ConfigError("svr: tol must be positive");
    if (max_passes < 1) throw ConfigError("svr: max_passes must be >= 1");
}

namespace {

struct Standardization {
    Eigen::VectorXd means;
    Eigen::VectorXd scales;
    std::vector<bool> constant;  // zero-variance columns, weight forced to 0
    double y_mean = 0.0;
    double y_scale = 1.0;
};

Standardization standardize(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const auto n = static_cast<double>(x.rows());
    Standardization s;
    s.means = x.colwise().mean();
    s.scales.resize(x.cols());
    s.constant.assign(static_cast<std::size_t>(x.cols()), false);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double var = (x.col(j).array() - s.means[j]).square().sum() / n;
        const double sd = std::sqrt(var);
        if (sd <= 1e-12 * (1.0 + std::abs(s.means[j]))) {
            s.scales[j] = 1.0;
            s.constant[static_cast<std::size_t>(j)] = true;
        } else {
            s.scales[j] = sd;
        }
    }
    s.y_mean = y.mean();
    const double y_var = (y.array() - s.y_mean).square().sum() / n;
    const double y_sd = std::sqrt(y_var);
    s.y_scale = y_sd <= 1e-12 * (1.0 + std::abs(s.y_mean)) ? 1.0 : y_sd;
    return s;
}

// Dual coordinate descent for the epsilon-insensitive L1 loss. One beta per
// sample in [-C, C]; the bias is an augmented unit feature. Sequential
// visit order with liblinear-style shrinking keeps the run deterministic.
// Convergence is measured as the pass-summed projected-gradient violation
// relative to the first pass.
struct DcdResult {
    Eigen::VectorXd w;  // includes bias as last entry
    bool converged = false;
    int passes = 0;
};

DcdResult dcd_svr(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys, const SvrConfig& cfg) {
    const Eigen::Index n = xs.rows();
    const Eigen::Index d = xs.cols();  // includes the bias column
    const double c_bound = cfg.c;
    const double eps = cfg.epsilon;

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd qd(n);
    for (Eigen::Index i = 0; i < n; ++i) qd[i] = xs.row(i).squaredNorm();

    std::vector<Eigen::Index> active(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) active[static_cast<std::size_t>(i)] = i;

    DcdResult out;
    double violation_scale = -1.0;  // full first-pass violation norm
    double shrink_threshold = std::numeric_limits<double>::infinity();
    while (out.passes < cfg.max_passes) {
        ++out.passes;
        double violation_sum = 0.0;
        double max_violation = 0.0;
        for (std::size_t k = 0; k < active.size();) {
            const Eigen::Index i = active[k];
            if (qd[i] <= 0.0) {  // all-zero row cannot move the objective
                active[k] = active.back();
                active.pop_back();
                continue;
            }
            const double g = w.dot(xs.row(i)) - ys[i];
            const double gp = g + eps;
            const double gn = g - eps;
            const double b = beta[i];

            double violation = 0.0;
            bool shrink = false;
            if (b == 0.0) {
                violation = std::max({0.0, -gp, gn});
                shrink = gp > shrink_threshold && gn < -shrink_threshold;
            } else if (b >= c_bound) {
                violation = std::max(0.0, gp);
                shrink = gp < -shrink_threshold;
            } else if (b <= -c_bound) {
                violation = std::max(0.0, -gn);
                shrink = gn > shrink_threshold;
            } else if (b > 0.0) {
                violation = std::abs(gp);
            } else {
                violation = std::abs(gn);
            }
            if (shrink) {
                active[k] = active.back();
                active.pop_back();
                continue;
            }
            violation_sum += violation;
            max_violation = std::max(max_violation, violation);

            double b_new;
            if (gp < b * qd[i])
                b_new = b - gp / qd[i];
            else if (gn > b * qd[i])
                b_new = b - gn / qd[i];
            else
                b_new = 0.0;
            b_new = std::clamp(b_new, -c_bound, c_bound);
            if (b_new != b) {
                w += (b_new - b) * xs.row(i).transpose();
                beta[i] = b_new;
            }
            ++k;
        }
        if (violation_scale < 0.0) violation_scale = violation_sum;

        if (violation_sum <= cfg.tol * violation_scale) {
            if (active.size() == static_cast<std::size_t>(n)) {
                out.converged = true;
                break;
            }
            // converged on the shrunk set: restore everything and re-check
            active.resize(static_cast<std::size_t>(n));
            for (Eigen::Index i = 0; i < n; ++i) active[static_cast<std::size_t>(i)] = i;
            shrink_threshold = std::numeric_limits<double>::infinity();
        } else {
            shrink_threshold = max_violation;
        }
    }
    out.w = w;
    return out;
}

}  // namespace

LinearModel fit_svr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SvrConfig& cfg,
                    std::size_t n_control_columns) {
    cfg.validate();
    if (x.rows() < 2) throw DataError("svr: need at least 2 rows, got " + std::to_string(x.rows()));
    if (x.rows() != y.size()) throw DataError("svr: row count does not match target length");
    if (!x.allFinite() || !y.allFinite()) throw DataError("svr: non-finite entries in input");
    if (n_control_columns > static_cast<std::size_t>(x.cols()))
        throw DataError("svr: control partition exceeds column count");

    const auto s = standardize(x, y);
    Eigen::MatrixXd xs(x.rows(), x.cols() + 1);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (s.constant[static_cast<std::size_t>(j)])
            xs.col(j).setZero();
        else
            xs.col(j) = ((x.col(j).array() - s.means[j]) / s.scales[j]).matrix();
    }
    xs.col(x.cols()).setOnes();
    const Eigen::VectorXd ys = (y.array() - s.y_mean) / s.y_scale;

    const auto r = dcd_svr(xs, ys, cfg);

    LinearModel m;
    m.feature_means = s.means;
    m.feature_scales = s.scales;
    m.target_mean = s.y_mean;
    m.target_scale = s.y_scale;
    m.weights_std = r.w.head(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        if (s.constant[static_cast<std::size_t>(j)]) m.weights_std[j] = 0.0;
    m.bias_std = r.w[x.cols()];
    m.converged = r.converged;
    m.passes = r.passes;

    // raw-unit view
    Eigen::VectorXd w_raw(x.cols());
    double intercept = s.y_mean + s.y_scale * m.bias_std;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        w_raw[j] = s.y_scale * m.weights_std[j] / s.scales[j];
        intercept -= w_raw[j] * s.means[j];
    }
    const auto nc = static_cast<Eigen::Index>(n_control_columns);
    m.weights_controls = w_raw.head(nc);
    m.weights_measurements = w_raw.tail(x.cols() - nc);
    m.intercept = intercept;
    return m;
}

double predict(const LinearModel& m, const Eigen::VectorXd& features) {
    const auto d = static_cast<Eigen::Index>(m.n_features());
    if (features.size() != d)
        throw DataError("predict: feature length " + std::to_string(features.size()) +
                        " != model width " + std::to_string(d));
    double acc = m.bias_std;
    for (Eigen::Index j = 0; j < d; ++j)
        acc += m.weights_std[j] * (features[j] - m.feature_means[j]) / m.feature_scales[j];
    return m.target_mean + m.target_scale * acc;
}

double svr_primal_objective(const LinearModel& m, const Eigen::MatrixXd& x,
                            const Eigen::VectorXd& y, const SvrConfig& cfg) {
    double loss = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double pred_std = m.bias_std;
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            pred_std += m.weights_std[j] * (x(i, j) - m.feature_means[j]) / m.feature_scales[j];
        const double y_std = (y[i] - m.target_mean) / m.target_scale;
        loss += std::max(0.0, std::abs(pred_std - y_std) - cfg.epsilon);
    }
    return 0.5 * m.weights_std.squaredNorm() + cfg.c * loss;
}

bool ModelBundle::all_converged() const {
    for (const auto* models : {&temperature_models, &o2_models})
        for (const auto& m : *models)
            if (!m.converged) return false;
    return true;
}

std::uint64_t ModelBundle::hash() const {
    Fnv1a h;
    h.update(schema.hash());
    h.update(to_string(layout.data_type));
    h.update(static_cast<std::uint64_t>(layout.lag_depth));
    for (const auto* models : {&temperature_models, &o2_models})
        for (const auto& m : *models) {
            h.update(m.target);
            h.update(m.intercept);
            for (Eigen::Index j = 0; j < m.weights_std.size(); ++j) h.update(m.weights_std[j]);
        }
    return h.digest();
}

const LinearModel& ModelBundle::model_for(const std::string& target) const {
    for (const auto* models : {&temperature_models, &o2_models})
        for (const auto& m : *models)
            if (m.target == target) return m;
    throw DataError("bundle has no model for target '" + target + "'");
}

ModelBundle fit_all(const Dataset& ds, const FeatureLayout& layout, const SvrConfig& cfg) {
    ds.validate();
    if (ds.train_end < 2) throw DataError("fit_all: training split has fewer than 2 frames");

    std::vector<std::string> targets = ds.schema.target_temperature_names;
    targets.insert(targets.end(), ds.schema.target_o2_names.begin(),
                   ds.schema.target_o2_names.end());

    auto train_one = [&](const std::string& target) {
        const auto fm = build_features_range(ds, layout, target, 0, ds.train_end);
        FeatureIndexer idx(ds.schema, layout, target);
        auto m = fit_svr(fm.x, fm.y, cfg, idx.n_control_columns());
        m.target = target;
        m.layout = layout;
        return m;
    };

    // the 8 targets share only immutable inputs
    std::vector<std::future<LinearModel>> futures;
    futures.reserve(targets.size());
    for (const auto& t : targets)
        futures.push_back(std::async(std::launch::async, train_one, t));

    ModelBundle bundle;
    bundle.schema = ds.schema;
    bundle.layout = layout;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        auto m = futures[i].get();
        if (i < ds.schema.n_temperatures())
            bundle.temperature_models.push_back(std::move(m));
        else
            bundle.o2_models.push_back(std::move(m));
    }
    return bundle;
}

SvrConfig grid_search_svr(const Dataset& ds, const FeatureLayout& layout,
                          const std::vector<double>& c_grid,
                          const std::vector<double>& epsilon_grid, const SvrConfig& base) {
    if (c_grid.empty() || epsilon_grid.empty())
        throw ConfigError("grid_search: empty grid");
    SvrConfig best = base;
    double best_score = std::numeric_limits<double>::infinity();
    std::vector<std::string> targets = ds.schema.target_temperature_names;
    targets.insert(targets.end(), ds.schema.target_o2_names.begin(),
                   ds.schema.target_o2_names.end());
    for (double c : c_grid) {
        for (double eps : epsilon_grid) {
            SvrConfig cfg = base;
            cfg.c = c;
            cfg.epsilon = eps;
            const auto bundle = fit_all(ds, layout, cfg);
            double total = 0.0;
            for (const auto& target : targets) {
                const auto fm = build_features_range(ds, layout, target, ds.train_end, ds.val_end);
                const auto& m = bundle.model_for(target);
                std::vector<double> pred(static_cast<std::size_t>(fm.x.rows()));
                for (Eigen::Index i = 0; i < fm.x.rows(); ++i)
                    pred[static_cast<std::size_t>(i)] = predict(m, fm.x.row(i).transpose());
                std::vector<double> actual(fm.y.data(), fm.y.data() + fm.y.size());
                total += mse(pred, actual);
            }
            if (total < best_score) {
                best_score = total;
                best = cfg;
            }
        }
    }
    return best;
}

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    Eigen::Index i = 0;
    for (const auto& x : a) v[i++] = x.get<double>();
    return v;
}

json model_to_json(const LinearModel& m) {
    json j;
    j["target"] = m.target;
    j["converged"] = m.converged;
    j["passes"] = m.passes;
    j["weights_controls"] = vec_to_json(m.weights_controls);
    j["weights_measurements"] = vec_to_json(m.weights_measurements);
    j["intercept"] = m.intercept;
    j["feature_means"] = vec_to_json(m.feature_means);
    j["feature_scales"] = vec_to_json(m.feature_scales);
    j["target_mean"] = m.target_mean;
    j["target_scale"] = m.target_scale;
    j["weights_std"] = vec_to_json(m.weights_std);
    j["bias_std"] = m.bias_std;
    return j;
}

LinearModel model_from_json(const json& j, const FeatureLayout& layout) {
    LinearModel m;
    m.target = j.at("target").get<std::string>();
    m.layout = layout;
    m.converged = j.at("converged").get<bool>();
    m.passes = j.at("passes").get<int>();
    m.weights_controls = vec_from_json(j.at("weights_controls"));
    m.weights_measurements = vec_from_json(j.at("weights_measurements"));
    m.intercept = j.at("intercept").get<double>();
    m.feature_means = vec_from_json(j.at("feature_means"));
    m.feature_scales = vec_from_json(j.at("feature_scales"));
    m.target_mean = j.at("target_mean").get<double>();
    m.target_scale = j.at("target_scale").get<double>();
    m.weights_std = vec_from_json(j.at("weights_std"));
    m.bias_std = j.at("bias_std").get<double>();
    return m;
}

}  // namespace

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle) {
    json j;
    j["schema"] = {{"controllables", bundle.schema.controllable_names},
                   {"measurements", bundle.schema.measurement_names},
                   {"temperatures", bundle.schema.target_temperature_names},
                   {"o2", bundle.schema.target_o2_names},
                   {"sample_period_s", bundle.schema.sample_period_s}};
    j["schema_hash"] = hash_to_hex(bundle.schema.hash());
    j["layout"] = {{"data_type", to_string(bundle.layout.data_type)},
                   {"lag_depth", bundle.layout.lag_depth}};
    j["temperature_models"] = json::array();
    for (const auto& m : bundle.temperature_models)
        j["temperature_models"].push_back(model_to_json(m));
    j["o2_models"] = json::array();
    for (const auto& m : bundle.o2_models) j["o2_models"].push_back(model_to_json(m));
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

ModelBundle load_bundle(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    json j;
    in >> j;
    ModelBundle b;
    const auto& sj = j.at("schema");
    b.schema.controllable_names = sj.at("controllables").get<std::vector<std::string>>();
    b.schema.measurement_names = sj.at("measurements").get<std::vector<std::string>>();
    b.schema.target_temperature_names = sj.at("temperatures").get<std::vector<std::string>>();
    b.schema.target_o2_names = sj.at("o2").get<std::vector<std::string>>();
    b.schema.sample_period_s = sj.at("sample_period_s").get<double>();
    b.schema.validate();
    const std::string stored = j.at("schema_hash").get<std::string>();
    if (stored != hash_to_hex(b.schema.hash()))
        throw SchemaError("bundle schema hash " + stored + " does not match its schema " +
                          hash_to_hex(b.schema.hash()));
    b.layout.data_type = data_type_from_string(j.at("layout").at("data_type").get<std::string>());
    b.layout.lag_depth = j.at("layout").at("lag_depth").get<int>();
    for (const auto& mj : j.at("temperature_models"))
        b.temperature_models.push_back(model_from_json(mj, b.layout));
    for (const auto& mj : j.at("o2_models"))
        b.o2_models.push_back(model_from_json(mj, b.layout));
    return b;
}

}  // namespace boilerctl
