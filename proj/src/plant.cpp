#include "boilerctl/plant.hpp"

#include <cmath>

namespace boilerctl {

namespace {

std::uint64_t stream_seed(std::uint64_t seed, std::string_view name) {
    Fnv1a h;
    h.update(seed);
    h.update(name);
    return h.digest();
}

// Drifting manual operation: random steps with a weak pull toward the
// middle of the range, so the walk mixes instead of parking at a bound.
constexpr double kWalkPull = 0.04;

void walk_controls(Eigen::VectorXd& x, const PlantSpec& spec, Rng& rng) {
    const auto n = x.size();
    for (Eigen::Index k = 0; k < n; ++k) {
        const double range = spec.control_upper[k] - spec.control_lower[k];
        const double mid = 0.5 * (spec.control_lower[k] + spec.control_upper[k]);
        x[k] += spec.walk_step_frac * range * (2.0 * rng.uniform() - 1.0) -
                kWalkPull * (x[k] - mid);
        x[k] = std::clamp(x[k], spec.control_lower[k], spec.control_upper[k]);
    }
}

}  // namespace

double PlantSpec::lag_mass() const {
    double acc = 0.0;
    for (double g : lag_gains) acc += std::abs(g);
    return acc * lag_shape.cwiseAbs().sum();
}

void PlantSpec::validate() const {
    schema.validate();
    const auto nc = static_cast<Eigen::Index>(schema.n_controls());
    const auto nm = static_cast<Eigen::Index>(schema.n_measurements());
    const auto nz = static_cast<Eigen::Index>(schema.n_temperatures());
    const auto no = static_cast<Eigen::Index>(schema.n_o2());
    if (temp_current.rows() != nz || temp_current.cols() != nc + nm)
        throw ConfigError("plant: temp_current dimensions");
    if (o2_current.rows() != no || o2_current.cols() != nc + nm)
        throw ConfigError("plant: o2_current dimensions");
    if (temp_intercepts.size() != nz || o2_intercepts.size() != no)
        throw ConfigError("plant: intercept dimensions");
    if (lag_shape.size() != nc + nm || lag_reference.size() != nc + nm)
        throw ConfigError("plant: lag shape dimensions");
    if (temp_lag_loading.size() != nz || o2_lag_loading.size() != no)
        throw ConfigError("plant: lag loading dimensions");
    if (temp_noise_sigma.size() != nz || o2_noise_sigma.size() != no)
        throw ConfigError("plant: noise sigma dimensions");
    for (Eigen::Index i = 0; i < temp_noise_sigma.size(); ++i)
        if (temp_noise_sigma[i] < 0.0) throw ConfigError("plant: negative noise sigma");
    for (Eigen::Index i = 0; i < o2_noise_sigma.size(); ++i)
        if (o2_noise_sigma[i] < 0.0) throw ConfigError("plant: negative noise sigma");
    if (!(outlier_rate >= 0.0 && outlier_rate < 0.2))
        throw ConfigError("plant: outlier_rate must be in [0, 0.2)");
    if (meas_mean.size() != nm || meas_phi.size() != nm || meas_innov_sigma.size() != nm)
        throw ConfigError("plant: measurement process dimensions");
    if (control_lower.size() != nc || control_upper.size() != nc)
        throw ConfigError("plant: control bound dimensions");
    if (!std::isfinite(lag_mass())) throw ConfigError("plant: lag kernel mass not finite");
    for (const auto& seg : drift_segments)
        if (seg.offsets.size() != nz + no)
            throw ConfigError("plant: drift segment offset dimensions");
}

PlantSpec default_plant_spec(std::uint64_t seed) {
    PlantSpec s;
    s.schema = default_schema();
    const Eigen::Index nc = 28, nm = 13, nz = 6, no = 2;
    const Eigen::Index nf = nc + nm;

    s.control_lower.resize(nc);
    s.control_upper.resize(nc);
    for (Eigen::Index k = 0; k < 12; ++k) {
        s.control_lower[k] = 0.0;
        s.control_upper[k] = 60.0;
    }
    for (Eigen::Index k = 12; k < 28; ++k) {
        s.control_lower[k] = 40.0;  // operational minimum airflow
        s.control_upper[k] = 100.0;
    }

    // Zone i is fed mainly by coal feeds 2i, 2i+1 and vented mainly by
    // throttles near 16*i/6. Cross terms keep every control globally
    // relevant.
    s.temp_current = Eigen::MatrixXd::Zero(nz, nf);
    s.temp_intercepts.resize(nz);
    const double zone_base[6] = {706.0, 694.0, 712.0, 690.0, 701.0, 716.0};
    for (Eigen::Index i = 0; i < nz; ++i) {
        for (Eigen::Index k = 0; k < 12; ++k) {
            const bool aligned = k / 2 == i;
            s.temp_current(i, k) = aligned ? 2.0 + 0.08 * static_cast<double>(i) : 0.45;
        }
        for (Eigen::Index k = 0; k < 16; ++k) {
            const auto owner = static_cast<Eigen::Index>((k * 6) / 16);
            s.temp_current(i, 12 + k) = owner == i ? -0.40 : -0.12;
        }
        s.temp_current(i, nc + 0) = 0.25;   // gen_load
        s.temp_current(i, nc + 6) = -0.06;  // primary air flow
        s.temp_current(i, nc + 7) = -0.03;  // secondary air flow
        s.temp_current(i, nc + 12) = -0.15; // ambient
        s.temp_intercepts[i] = zone_base[i];
    }

    s.o2_current = Eigen::MatrixXd::Zero(no, nf);
    s.o2_intercepts.resize(no);
    for (Eigen::Index j = 0; j < no; ++j) {
        for (Eigen::Index k = 0; k < 12; ++k) s.o2_current(j, k) = -0.012;
        for (Eigen::Index k = 0; k < 16; ++k) {
            const bool own_side = (k < 8) == (j == 0);
            s.o2_current(j, 12 + k) = own_side ? 0.016 : 0.004;
        }
        s.o2_current(j, nc + 0) = -0.002;  // gen_load
    }
    s.o2_intercepts << 1.45, 1.85;

    // shared lag factor over [controls; measurements]
    s.lag_shape = Eigen::VectorXd::Zero(nf);
    for (Eigen::Index k = 0; k < 12; ++k) s.lag_shape[k] = 0.60;
    for (Eigen::Index k = 12; k < 28; ++k) s.lag_shape[k] = -0.15;
    s.lag_shape[nc + 0] = 0.25;
    s.lag_reference.resize(nf);
    s.lag_reference.head(nc) = 0.5 * (s.control_lower + s.control_upper);
    s.lag_gains = {0.55, 0.28, 0.14};
    s.temp_lag_loading.resize(nz);
    s.temp_lag_loading << 1.0, 1.25, 0.85, 1.1, 0.95, 1.2;
    s.o2_lag_loading.resize(no);
    s.o2_lag_loading << 0.004, 0.005;
    s.temp_own_lag = 0.45;

    s.temp_noise_sigma = Eigen::VectorXd::Constant(nz, 4.0);
    s.o2_noise_sigma = Eigen::VectorXd::Constant(no, 0.12);
    s.outlier_rate = 0.002;
    s.outlier_scale = 5.0;

    s.meas_mean.resize(nm);
    s.meas_phi.resize(nm);
    s.meas_innov_sigma.resize(nm);
    const double means[13] = {600.0, 250.0, 256.0, 1650.0, 16.5, 540.0, 95.0,
                              310.0, 128.0, 131.0, 0.0,    75.0, 25.0};
    const double phis[13] = {0.97, 0.92, 0.92, 0.95, 0.95, 0.93, 0.90,
                             0.90, 0.93, 0.93, 0.88, 0.90, 0.98};
    const double innov[13] = {4.0, 6.0, 6.0, 4.0, 0.05, 0.8, 1.5,
                              3.0, 1.0, 1.0, 0.8, 0.6,  0.12};
    for (Eigen::Index k = 0; k < nm; ++k) {
        s.meas_mean[k] = means[k];
        s.meas_phi[k] = phis[k];
        s.meas_innov_sigma[k] = innov[k];
    }
    s.lag_reference.tail(nm) = s.meas_mean;

    // idiosyncratic drift: a new per-target offset every ~900 steps
    Rng drift_rng(stream_seed(seed, "drift"));
    long start = 0;
    for (int seg = 0; seg < 24; ++seg) {
        DriftSegment d;
        d.start_step = start;
        d.offsets.resize(nz + no);
        for (Eigen::Index k = 0; k < nz; ++k) d.offsets[k] = drift_rng.normal(0.0, 2.5);
        for (Eigen::Index k = 0; k < no; ++k) d.offsets[nz + k] = drift_rng.normal(0.0, 0.06);
        s.drift_segments.push_back(std::move(d));
        start += 750 + static_cast<long>(drift_rng.uniform_index(400));
    }

    s.walk_step_frac = 0.08;
    s.coal_per_load = 0.6;
    s.seed = seed;
    s.validate();
    return s;
}

TrueAffine true_affine(const PlantSpec& spec, const std::string& target) {
    const int ti = spec.schema.temperature_index(target);
    const int oi = spec.schema.o2_index(target);
    if (ti < 0 && oi < 0) throw DataError("unknown target '" + target + "'");
    TrueAffine a;
    double loading;
    if (ti >= 0) {
        a.current = spec.temp_current.row(ti);
        a.intercept = spec.temp_intercepts[ti];
        loading = spec.temp_lag_loading[ti];
    } else {
        a.current = spec.o2_current.row(oi);
        a.intercept = spec.o2_intercepts[oi];
        loading = spec.o2_lag_loading[oi];
    }
    for (double g : spec.lag_gains) {
        Eigen::VectorXd w = loading * g * spec.lag_shape;
        if (ti >= 0 && spec.temp_own_lag != 0.0) {
            for (Eigen::Index k = 2 * ti; k < 2 * ti + 2 && k < w.size(); ++k) {
                w[k] += spec.temp_own_lag * g;
                a.intercept -= spec.temp_own_lag * g * spec.lag_reference[k];
            }
        }
        a.intercept -= loading * g * spec.lag_shape.dot(spec.lag_reference);
        a.lagged.push_back(std::move(w));
    }
    return a;
}

ModelBundle true_model_bundle(const PlantSpec& spec) {
    spec.validate();
    ModelBundle b;
    b.schema = spec.schema;
    b.layout = FeatureLayout{DataType::C, spec.lag_length()};

    const auto nc = static_cast<Eigen::Index>(spec.schema.n_controls());

    auto make_model = [&](const std::string& target) {
        const TrueAffine a = true_affine(spec, target);
        FeatureIndexer idx(spec.schema, b.layout, target);
        Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(idx.n_columns()));
        const auto& cols = idx.columns();
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const auto& col = cols[c];
            double v = 0.0;
            if (col.group == SignalGroup::Control || col.group == SignalGroup::Measurement) {
                const Eigen::Index k =
                    col.group == SignalGroup::Control ? col.index : nc + col.index;
                v = col.lag == 0 ? a.current[k]
                                 : a.lagged[static_cast<std::size_t>(col.lag - 1)][k];
            }
            w[static_cast<Eigen::Index>(c)] = v;
        }
        LinearModel m;
        m.target = target;
        m.layout = b.layout;
        m.weights_controls = w.head(nc);
        m.weights_measurements = w.tail(w.size() - nc);
        m.intercept = a.intercept;
        m.feature_means = Eigen::VectorXd::Zero(w.size());
        m.feature_scales = Eigen::VectorXd::Ones(w.size());
        m.target_mean = 0.0;
        m.target_scale = 1.0;
        m.weights_std = w;
        m.bias_std = a.intercept;
        m.converged = true;
        return m;
    };
    for (const auto& t : spec.schema.target_temperature_names)
        b.temperature_models.push_back(make_model(t));
    for (const auto& t : spec.schema.target_o2_names) b.o2_models.push_back(make_model(t));
    return b;
}

Plant::Plant(PlantSpec spec) : spec_(std::move(spec)), rng_(stream_seed(spec_.seed, "plant")) {
    spec_.validate();
    meas_ = spec_.meas_mean;
    const auto nc = static_cast<Eigen::Index>(spec_.schema.n_controls());
    Eigen::VectorXd init(nc + meas_.size());
    init.head(nc) = 0.5 * (spec_.control_lower + spec_.control_upper);
    init.tail(meas_.size()) = meas_;
    hist_.assign(static_cast<std::size_t>(spec_.lag_length()), init);
}

TelemetryFrame Plant::step(const Eigen::VectorXd& controls) {
    const auto nc = static_cast<Eigen::Index>(spec_.schema.n_controls());
    if (controls.size() != nc) throw DataError("plant: control vector length mismatch");
    for (Eigen::Index k = 0; k < nc; ++k)
        if (controls[k] < spec_.control_lower[k] - 1e-9 ||
            controls[k] > spec_.control_upper[k] + 1e-9)
            throw DataError("plant: control " + std::to_string(k) + " out of bounds");

    // measurement AR advance (13 draws, control-independent)
    for (Eigen::Index k = 0; k < meas_.size(); ++k)
        meas_[k] = spec_.meas_mean[k] + spec_.meas_phi[k] * (meas_[k] - spec_.meas_mean[k]) +
                   spec_.meas_innov_sigma[k] * rng_.normal();

    Eigen::VectorXd frame_vec(nc + meas_.size());
    frame_vec.head(nc) = controls;
    frame_vec.tail(meas_.size()) = meas_;

    const Eigen::VectorXd* drift = nullptr;
    for (const auto& seg : spec_.drift_segments) {
        if (seg.start_step <= step_) drift = &seg.offsets;
        else break;
    }

    const auto nz = spec_.schema.n_temperatures();
    const auto no = spec_.schema.n_o2();
    TelemetryFrame out;
    out.timestamp = step_;
    out.controls.assign(controls.data(), controls.data() + nc);
    out.measurements.assign(meas_.data(), meas_.data() + meas_.size());

    auto emit_target = [&](const std::string& name, double sigma, std::size_t drift_idx) {
        const TrueAffine a = true_affine(spec_, name);
        double v = a.intercept + a.current.dot(frame_vec);
        for (std::size_t l = 0; l < a.lagged.size(); ++l) v += a.lagged[l].dot(hist_[l]);
        if (drift) v += (*drift)[static_cast<Eigen::Index>(drift_idx)];
        // fixed draw count per target: noise, outlier gate, outlier size
        const double noise = rng_.normal();
        const double gate = rng_.uniform();
        // heavy-tailed but bounded spikes: a Student-t(2) draw clamped so a
        // single outlier cannot dominate split-level error metrics
        const double spike = std::clamp(rng_.student_t2(), -6.0, 6.0);
        v += sigma * noise;
        if (gate < spec_.outlier_rate) v += spec_.outlier_scale * sigma * spike;
        return v;
    };
    for (std::size_t i = 0; i < nz; ++i)
        out.temperatures.push_back(emit_target(spec_.schema.target_temperature_names[i],
                                               spec_.temp_noise_sigma[static_cast<Eigen::Index>(i)],
                                               i));
    for (std::size_t j = 0; j < no; ++j)
        out.o2.push_back(emit_target(spec_.schema.target_o2_names[j],
                                     spec_.o2_noise_sigma[static_cast<Eigen::Index>(j)],
                                     nz + j));

    // shift history (newest first)
    for (std::size_t l = hist_.size(); l-- > 1;) hist_[l] = hist_[l - 1];
    if (!hist_.empty()) hist_[0] = frame_vec;
    ++step_;
    return out;
}

LoggingPolicy logging_policy_from_string(const std::string& s) {
    if (s == "random_walk" || s == "RandomWalk") return LoggingPolicy::RandomWalk;
    if (s == "constant" || s == "Constant") return LoggingPolicy::Constant;
    throw ConfigError("unknown logging policy '" + s + "'");
}

Dataset generate_dataset(const PlantSpec& spec, long steps, LoggingPolicy policy) {
    if (steps <= spec.lag_length())
        throw ConfigError("generate_dataset: steps must exceed the lag length");
    Plant plant(spec);
    Rng policy_rng(stream_seed(spec.seed, "policy"));
    Eigen::VectorXd x = 0.5 * (spec.control_lower + spec.control_upper);

    Dataset ds;
    ds.schema = spec.schema;
    ds.frames.reserve(static_cast<std::size_t>(steps));
    for (long t = 0; t < steps; ++t) {
        if (policy == LoggingPolicy::RandomWalk) walk_controls(x, spec, policy_rng);
        ds.frames.push_back(plant.step(x));
    }
    ds.set_split();
    return ds;
}

Dataset replay_controls(const PlantSpec& spec, const Dataset& control_source) {
    if (control_source.schema.controllable_names != spec.schema.controllable_names)
        throw SchemaError("replay: control schema mismatch");
    Plant plant(spec);
    Dataset ds;
    ds.schema = spec.schema;
    for (const auto& f : control_source.frames) {
        Eigen::VectorXd x(static_cast<Eigen::Index>(f.controls.size()));
        for (std::size_t k = 0; k < f.controls.size(); ++k)
            x[static_cast<Eigen::Index>(k)] = f.controls[k];
        ds.frames.push_back(plant.step(x));
    }
    if (ds.frames.size() >= 3) ds.set_split();
    return ds;
}

PairedRun make_paired_run(const PlantSpec& spec, long warmup, long horizon) {
    if (warmup < 1 || horizon < 1)
        throw ConfigError("make_paired_run: warmup and horizon must be >= 1");
    Plant plant(spec);
    Rng policy_rng(stream_seed(spec.seed, "policy"));
    Eigen::VectorXd x = 0.5 * (spec.control_lower + spec.control_upper);

    PairedRun pr{{}, {}, plant};
    for (long t = 0; t < warmup; ++t) {
        walk_controls(x, spec, policy_rng);
        pr.warmup_frames.push_back(plant.step(x));
    }
    pr.plant_at_warm = plant;  // the controlled branch starts here

    pr.baseline.schema = spec.schema;
    for (long t = 0; t < horizon; ++t) {
        walk_controls(x, spec, policy_rng);
        pr.baseline.frames.push_back(plant.step(x));
    }
    return pr;
}

ControlConstraints control_constraints_for(const PlantSpec& spec, double load) {
    ControlConstraints c =
        ControlConstraints::box(spec.control_lower, spec.control_upper);
    const auto nc = spec.control_lower.size();
    Eigen::MatrixXd eq = Eigen::MatrixXd::Zero(1, nc);
    for (Eigen::Index k = 0; k < 12 && k < nc; ++k) eq(0, k) = 1.0;
    c.eq_a = eq;
    c.eq_b.resize(1);
    c.eq_b[0] = spec.coal_per_load * load;
    c.validate();
    return c;
}

}  // namespace boilerctl
