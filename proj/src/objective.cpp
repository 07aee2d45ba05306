#include "boilerctl/objective.hpp"

#include <cmath>

namespace boilerctl {

void ObjectiveWeights::validate() const {
    for (double v : {lambda_var, lambda_diff, lambda_temp, lambda_o2}) {
        if (!std::isfinite(v) || v < 0.0)
            throw ConfigError("objective weights must be finite and non-negative");
    }
    if (lambda_var == 0.0 && lambda_diff == 0.0 && lambda_temp == 0.0 && lambda_o2 == 0.0)
        throw ConfigError("at least one objective weight must be positive");
}

std::uint64_t FeatureContext::hash() const {
    Fnv1a h;
    h.update(static_cast<std::uint64_t>(frames_newest_first.size()));
    for (const auto& f : frames_newest_first) {
        h.update(static_cast<std::uint64_t>(f.timestamp));
        h.update(f.controls);
        h.update(f.measurements);
        h.update(f.temperatures);
        h.update(f.o2);
    }
    return h.digest();
}

namespace {

// Affine view of one model at a frozen context: prediction(x) = w.x + k,
// with k folding the frozen columns, the intercept, and the compensation
// correction.
struct AffineModel {
    Eigen::VectorXd w;
    double k = 0.0;
};

AffineModel affine_view(const LinearModel& m, const SignalSchema& schema,
                        const CompensationState& comp, const FeatureContext& ctx) {
    FeatureIndexer idx(schema, m.layout, m.target);
    if (idx.n_control_columns() != static_cast<std::size_t>(m.weights_controls.size()) ||
        idx.n_frozen_columns() != static_cast<std::size_t>(m.weights_measurements.size()))
        throw DataError("model '" + m.target + "' does not match the schema layout");
    AffineModel a;
    a.w = m.weights_controls;
    a.k = m.weights_measurements.dot(idx.frozen_vector(ctx.frames_newest_first)) +
          m.intercept + comp.correction(m.target);
    return a;
}

}  // namespace

double evaluate_objective(const ModelBundle& bundle, const CompensationState& comp,
                          const FeatureContext& ctx, const ObjectiveWeights& weights,
                          const Eigen::VectorXd& x) {
    weights.validate();
    const SignalSchema& schema = bundle.schema;
    const auto zones = bundle.temperature_models.size();
    if (zones == 0 || bundle.o2_models.size() != 2)
        throw DataError("objective: bundle must carry temperature models and exactly 2 O2 models");

    std::vector<double> temps;
    temps.reserve(zones);
    for (const auto& m : bundle.temperature_models) {
        FeatureIndexer idx(schema, m.layout, m.target);
        const double pred =
            m.weights_controls.dot(x) +
            m.weights_measurements.dot(idx.frozen_vector(ctx.frames_newest_first)) +
            m.intercept + comp.correction(m.target);
        temps.push_back(pred);
    }
    double o2_a = 0.0, o2_b = 0.0;
    for (int j = 0; j < 2; ++j) {
        const auto& m = bundle.o2_models[static_cast<std::size_t>(j)];
        FeatureIndexer idx(schema, m.layout, m.target);
        const double pred =
            m.weights_controls.dot(x) +
            m.weights_measurements.dot(idx.frozen_vector(ctx.frames_newest_first)) +
            m.intercept + comp.correction(m.target);
        (j == 0 ? o2_a : o2_b) = pred;
    }

    double t_mean = 0.0;
    for (double t : temps) t_mean += t;
    t_mean /= static_cast<double>(zones);
    double t_var = 0.0;
    for (double t : temps) t_var += (t - t_mean) * (t - t_mean);
    t_var /= static_cast<double>(zones);
    const double o_mean = 0.5 * (o2_a + o2_b);
    const double o_diff = o2_a - o2_b;

    const double value = weights.lambda_var * t_var + weights.lambda_diff * o_diff * o_diff -
                         weights.lambda_temp * t_mean + weights.lambda_o2 * o_mean;
    if (!std::isfinite(value)) throw DataError("objective: non-finite value");
    return value;
}

QpProblem build_qp(const ModelBundle& bundle, const CompensationState& comp,
                   const FeatureContext& ctx, const ObjectiveWeights& weights,
                   const ControlConstraints& cons) {
    weights.validate();
    cons.validate();
    const SignalSchema& schema = bundle.schema;
    const auto zones = bundle.temperature_models.size();
    if (zones == 0 || bundle.o2_models.size() != 2)
        throw DataError("build_qp: bundle must carry temperature models and exactly 2 O2 models");

    std::vector<AffineModel> temp(zones);
    for (std::size_t i = 0; i < zones; ++i)
        temp[i] = affine_view(bundle.temperature_models[i], schema, comp, ctx);
    const AffineModel o1 = affine_view(bundle.o2_models[0], schema, comp, ctx);
    const AffineModel o2 = affine_view(bundle.o2_models[1], schema, comp, ctx);

    const Eigen::Index n = temp[0].w.size();
    if (cons.n_variables() != n) throw DataError("build_qp: constraint dimension mismatch");

    Eigen::VectorXd w_bar = Eigen::VectorXd::Zero(n);
    double k_bar = 0.0;
    for (const auto& t : temp) {
        w_bar += t.w;
        k_bar += t.k;
    }
    const double zd = static_cast<double>(zones);
    w_bar /= zd;
    k_bar /= zd;

    const Eigen::VectorXd du = o1.w - o2.w;
    const double dd = o1.k - o2.k;
    const Eigen::VectorXd u_bar = 0.5 * (o1.w + o2.w);
    const double d_bar = 0.5 * (o1.k + o2.k);

    QpProblem p;
    p.h = Eigen::MatrixXd::Zero(n, n);
    p.f = Eigen::VectorXd::Zero(n);
    p.c = 0.0;
    for (const auto& t : temp) {
        const Eigen::VectorXd dw = t.w - w_bar;
        const double dk = t.k - k_bar;
        p.h += (2.0 * weights.lambda_var / zd) * (dw * dw.transpose());
        p.f += (2.0 * weights.lambda_var / zd) * dk * dw;
        p.c += (weights.lambda_var / zd) * dk * dk;
    }
    p.h += 2.0 * weights.lambda_diff * (du * du.transpose());
    p.f += 2.0 * weights.lambda_diff * dd * du;
    p.c += weights.lambda_diff * dd * dd;
    p.f += -weights.lambda_temp * w_bar + weights.lambda_o2 * u_bar;
    p.c += -weights.lambda_temp * k_bar + weights.lambda_o2 * d_bar;

    p.constraints = cons;
    p.provenance.context_hash = ctx.hash();
    p.provenance.bundle_hash = bundle.hash();
    p.provenance.lambda_var = weights.lambda_var;
    p.provenance.lambda_diff = weights.lambda_diff;
    p.provenance.lambda_temp = weights.lambda_temp;
    p.provenance.lambda_o2 = weights.lambda_o2;
    return p;
}

}  // namespace boilerctl
