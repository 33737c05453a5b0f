#include "smelab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "smelab/adaptive.hpp"
#include "smelab/asymptotics.hpp"
#include "smelab/csv.hpp"
#include "smelab/moments_control.hpp"
#include "smelab/rng.hpp"
#include "smelab/sgd_sim.hpp"
#include "smelab/sme.hpp"
#include "smelab/weak_error.hpp"

namespace smelab {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void fail_field(const std::string& path, const std::string& message) {
    throw std::invalid_argument("config field '" + path + "': " + message);
}

std::string joined(const std::vector<std::string>& items) {
    std::string text;
    for (const std::string& item : items) {
        if (!text.empty()) text += ", ";
        text += item;
    }
    return text;
}

// Dotted paths address nested sections: "objective.delta".
const Json* find_key(const Json& root, const std::string& path) {
    const Json* node = &root;
    std::size_t begin = 0;
    while (true) {
        const std::size_t dot = path.find('.', begin);
        const std::string key =
            dot == std::string::npos ? path.substr(begin) : path.substr(begin, dot - begin);
        if (!node->is_object() || !node->contains(key)) return nullptr;
        node = &node->at(key);
        if (dot == std::string::npos) return node;
        begin = dot + 1;
    }
}

double as_double(const Json& value, const std::string& path) {
    if (!value.is_number()) fail_field(path, "expected a number");
    return value.get<double>();
}

long as_long(const Json& value, const std::string& path) {
    if (value.is_number_integer()) return static_cast<long>(value.get<long long>());
    if (value.is_number_float()) {
        const double real = value.get<double>();
        if (real == std::floor(real) && std::abs(real) < 9.0e18) return static_cast<long>(real);
    }
    fail_field(path, "expected an integer");
}

bool as_bool(const Json& value, const std::string& path) {
    if (!value.is_boolean()) fail_field(path, "expected true or false");
    return value.get<bool>();
}

std::string as_string(const Json& value, const std::string& path) {
    if (!value.is_string()) fail_field(path, "expected a string");
    return value.get<std::string>();
}

Vector as_vector(const Json& value, const std::string& path) {
    if (value.is_number()) {
        Vector x(1);
        x(0) = value.get<double>();
        return x;
    }
    if (!value.is_array()) fail_field(path, "expected a number or a list of numbers");
    Vector x(value.size());
    for (std::size_t i = 0; i < value.size(); ++i)
        x(static_cast<long>(i)) = as_double(value[i], path + "[" + std::to_string(i) + "]");
    return x;
}

std::vector<double> to_list(const Vector& x) {
    return std::vector<double>(x.data(), x.data() + x.size());
}

const Json& require_key(const Json& root, const std::string& path) {
    const Json* value = find_key(root, path);
    if (!value) fail_field(path, "missing required field");
    return *value;
}

double get_double(const Json& root, const std::string& path, double fallback) {
    const Json* value = find_key(root, path);
    return value ? as_double(*value, path) : fallback;
}

long get_long(const Json& root, const std::string& path, long fallback) {
    const Json* value = find_key(root, path);
    return value ? as_long(*value, path) : fallback;
}

bool get_bool(const Json& root, const std::string& path, bool fallback) {
    const Json* value = find_key(root, path);
    return value ? as_bool(*value, path) : fallback;
}

std::string get_string(const Json& root, const std::string& path, const std::string& fallback) {
    const Json* value = find_key(root, path);
    return value ? as_string(*value, path) : fallback;
}

// Seeds are mandatory: either --seed or an explicit config key, never the
// wall clock.
std::uint64_t resolve_seed(const Json& config, const CliOverrides& overrides) {
    if (overrides.has_seed) return overrides.seed;
    const Json* value = find_key(config, "seed");
    if (!value) fail_field("seed", "missing (set it in the config or pass --seed)");
    if (value->is_number_unsigned()) return value->get<std::uint64_t>();
    if (value->is_number_integer()) {
        const long long raw = value->get<long long>();
        if (raw < 0) fail_field("seed", "must be non-negative");
        return static_cast<std::uint64_t>(raw);
    }
    fail_field("seed", "expected an integer");
}

// Output directory for one command run; collects artifact names for the
// manifest. CSVs are opened in binary mode so bytes are platform-stable.
class ArtifactDir {
public:
    explicit ArtifactDir(std::string dir) : dir_(std::move(dir)) {
        fs::create_directories(dir_);
    }

    std::ofstream open(const std::string& name) {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write artifact: " + (dir_ / name).string());
        artifacts_.push_back(name);
        return out;
    }

    void write_json(const std::string& name, const Json& value) {
        std::ofstream out = open(name);
        out << value.dump(2) << '\n';
    }

    // The manifest itself is not listed as an artifact: it carries the wall
    // time, which is the one field a re-run does not reproduce.
    void finalize(const Json& resolved_config, Clock::time_point start) {
        const double wall = std::chrono::duration<double>(Clock::now() - start).count();
        std::ofstream out(dir_ / "manifest.json", std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write manifest: " + (dir_ / "manifest.json").string());
        out << make_manifest(resolved_config, artifacts_, wall).dump(2) << '\n';
    }

private:
    fs::path dir_;
    std::vector<std::string> artifacts_;
};

const std::vector<std::string>& objective_names() {
    static const std::vector<std::string> names = {
        "quadratic1d", "eggcarton", "weak-convex",
        "weak-nonconvex", "diag-quadratic", "synthetic-mlp"};
    return names;
}

// Fills documented defaults so the manifest snapshot is fully resolved.
Json normalize_objective_params(const std::string& name, const Json& params) {
    Json out;
    out["name"] = name;
    if (name == "quadratic1d" || name == "weak-convex" || name == "weak-nonconvex") return out;
    if (name == "eggcarton") {
        out["delta"] = get_double(params, "delta", 0.2);
        out["epsilon"] = get_double(params, "epsilon", 0.1);
        if (as_double(out["epsilon"], "objective.epsilon") <= 0.0)
            fail_field("objective.epsilon", "must be > 0");
        return out;
    }
    if (name == "diag-quadratic") {
        const Json* a = find_key(params, "a");
        const Json* b = find_key(params, "b");
        const Json* sigma = find_key(params, "sigma");
        const Vector av = a ? as_vector(*a, "objective.a") : Vector(Vector::Constant(1, 2.0));
        const Vector bv = b ? as_vector(*b, "objective.b") : Vector(Vector::Zero(av.size()));
        const Vector sv =
            sigma ? as_vector(*sigma, "objective.sigma") : Vector(Vector::Constant(av.size(), 4.0));
        if (bv.size() != av.size() || sv.size() != av.size())
            fail_field("objective", "a, b, sigma must have the same length");
        out["a"] = to_list(av);
        out["b"] = to_list(bv);
        out["sigma"] = to_list(sv);
        return out;
    }
    if (name == "synthetic-mlp") {
        std::vector<long> widths = {2, 16, 2};
        if (const Json* w = find_key(params, "widths")) {
            if (!w->is_array() || w->size() < 2)
                fail_field("objective.widths", "expected a list of at least two layer widths");
            widths.clear();
            for (std::size_t i = 0; i < w->size(); ++i)
                widths.push_back(as_long((*w)[i], "objective.widths[" + std::to_string(i) + "]"));
        }
        out["widths"] = widths;
        out["n_samples"] = get_long(params, "n_samples", 256);
        out["data_seed"] = get_long(params, "data_seed", 7);
        return out;
    }
    throw std::invalid_argument("unknown objective '" + name +
                                "'; available: " + joined(objective_names()));
}

// The resolved objective sub-config from a command config: either a bare
// name or an [objective] section with name = ... plus parameters.
Json resolve_objective_config(const Json& config) {
    const Json* node = find_key(config, "objective");
    if (!node) fail_field("objective", "missing required field");
    if (node->is_string()) return normalize_objective_params(node->get<std::string>(), Json::object());
    if (node->is_object()) {
        const Json* name = find_key(*node, "name");
        if (!name || !name->is_string())
            fail_field("objective.name", "expected an objective name string");
        return normalize_objective_params(name->get<std::string>(), *node);
    }
    fail_field("objective", "expected an objective name or a section with name = ...");
}

Vector resolve_x0(const Json& config, const FiniteSumObjective& obj) {
    const Json* value = find_key(config, "x0");
    if (!value) return obj.initial_point();
    Vector x0 = as_vector(*value, "x0");
    if (x0.size() != obj.dim)
        fail_field("x0", "expected " + std::to_string(obj.dim) + " components, got " +
                             std::to_string(x0.size()));
    return x0;
}

std::string resolve_out_dir(const Json& config, const CliOverrides& overrides,
                            const std::string& fallback) {
    if (!overrides.out_dir.empty()) return overrides.out_dir;
    return get_string(config, "out", fallback);
}

// ---------------------------------------------------------------------------
// Figure registry. Constants the source captions state are pinned as given;
// cadence/grid choices the captions leave open are pinned here once and
// echoed into each figure's summary.json.
// ---------------------------------------------------------------------------

// Solvable 1-D model: SGD ensemble vs the closed-form SME marginal and the
// exact discrete moments, with the descent/fluctuation crossover k*.
Json run_fig1(ArtifactDir& art, std::uint64_t seed, int replicas) {
    const double eta = 5e-3;
    const double x0 = 1.0;
    const double horizon = 2.0;
    const long steps = std::lround(horizon / eta);  // 400
    const long stride = 4;

    const FiniteSumObjective obj = make_quadratic1d();
    SGDConfig base;
    base.eta = eta;
    base.steps = steps;
    base.x0 = Vector::Constant(1, x0);
    base.seed = seed;
    base.record_stride = stride;
    const EnsembleMoments moments = ensemble_moments(
        [&](int replica) {
            SGDConfig cfg = base;
            cfg.replica = replica;
            return run_sgd(obj, cfg);
        },
        replicas);

    std::ofstream curves = art.open("curves.csv");
    CsvWriter csv(curves);
    csv.header({"step", "t", "sgd_mean", "sgd_sd", "exact_mean", "exact_sd", "sme_mean",
                "sme_sd"});

    long crossover_step = -1;
    double final_var = 0.0;
    for (std::size_t k = 0; k < moments.size(); ++k) {
        const double t = moments.times[k];
        const long step = std::lround(t / eta);
        const double sgd_mean = moments.mean[k](0);
        const double sgd_var = moments.covariance[k](0, 0);
        const ExactMoments exact = exact_quadratic_moments(obj, eta, base.x0, step);
        const double exact_var = std::max(0.0, exact.m2(0) - exact.m1(0) * exact.m1(0));
        const GaussianSummary sme = quadratic_sme_distribution(eta, x0, t);
        csv.row({static_cast<double>(step), t, sgd_mean, std::sqrt(sgd_var), exact.m1(0),
                 std::sqrt(exact_var), sme.mean(0), std::sqrt(sme.covariance(0, 0))});
        if (crossover_step < 0 && step > 0 && std::abs(sgd_mean) <= std::sqrt(sgd_var))
            crossover_step = step;
        final_var = sgd_var;
    }

    const double t_star = transition_time_quadratic(eta, x0);
    Json summary;
    summary["eta"] = eta;
    summary["x0"] = x0;
    summary["replicas"] = replicas;
    summary["horizon"] = horizon;
    summary["record_stride"] = stride;
    summary["t_star"] = t_star;
    summary["k_star"] = std::lround(t_star / eta);
    summary["crossover_step"] = crossover_step;
    summary["crossover_t"] = crossover_step < 0 ? kNaN : crossover_step * eta;
    summary["sme_steady_variance"] = eta / (1.0 + eta);
    summary["sgd_steady_variance"] = eta / (1.0 - eta);
    summary["final_sgd_variance"] = final_var;
    return summary;
}

double frobenius(const Matrix& m) { return m.norm(); }

// Egg-carton descent into a local minimum: SGD ensemble vs the first-order
// SME (Euler-Maruyama) vs the leading-order Gaussian expansion.
Json run_fig2(ArtifactDir& art, std::uint64_t seed, int replicas) {
    const double eta = 1e-4;
    const double horizon = 4.0;
    const double grid_dt = 0.2;
    const long em_substeps = 10;  // SDE step = eta/10
    const double ode_h = 1e-3;
    Vector x0(2);
    x0 << 1.0, 1.5;

    const FiniteSumObjective obj = make_eggcarton(0.2, 0.1);

    SGDConfig sgd_base;
    sgd_base.eta = eta;
    sgd_base.steps = std::lround(horizon / eta);
    sgd_base.x0 = x0;
    sgd_base.seed = seed;
    sgd_base.record_stride = std::lround(grid_dt / eta);
    const EnsembleMoments sgd = ensemble_moments(
        [&](int replica) {
            SGDConfig cfg = sgd_base;
            cfg.replica = replica;
            return run_sgd(obj, cfg);
        },
        replicas);

    const SDESystem system = build_sme_order1(obj, eta);
    IntegratorConfig em_base;
    em_base.dt = eta / em_substeps;
    em_base.steps = sgd_base.steps * em_substeps;
    em_base.x0 = x0;
    em_base.seed = seed;
    em_base.record_stride = sgd_base.record_stride * em_substeps;
    const EnsembleMoments sme = ensemble_moments(
        [&](int replica) {
            IntegratorConfig cfg = em_base;
            cfg.replica = replica;
            return euler_maruyama(system, cfg);
        },
        replicas);

    const AsymptoticPath asymp = compute_asymptotic_path(obj, eta, x0, horizon, ode_h);

    {
        std::ofstream out = art.open("sgd_moments.csv");
        write_moments(out, sgd, eta);
    }
    {
        std::ofstream out = art.open("sme_moments.csv");
        write_moments(out, sme, em_base.dt);
    }
    {
        std::ofstream out = art.open("asymptotic_path.csv");
        write_asymptotic_path(out, asymp);
    }

    std::ofstream norms = art.open("norms.csv");
    CsvWriter csv(norms);
    csv.header({"t", "mean_sgd", "mean_sme", "mean_asymp", "cov_sgd", "cov_sme", "cov_asymp"});

    double mean_scale = 0.0, cov_scale = 0.0;
    double mean_dev_sme = 0.0, cov_dev_sme = 0.0, mean_dev_asymp = 0.0, cov_dev_asymp = 0.0;
    for (std::size_t k = 0; k < sgd.size(); ++k) {
        const double t = sgd.times[k];
        const GaussianSummary gauss = leading_order_distribution(asymp, t);
        csv.row({t, sgd.mean[k].norm(), sme.mean[k].norm(), gauss.mean.norm(),
                 frobenius(sgd.covariance[k]), frobenius(sme.covariance[k]),
                 frobenius(gauss.covariance)});
        mean_scale = std::max(mean_scale, sgd.mean[k].norm());
        cov_scale = std::max(cov_scale, frobenius(sgd.covariance[k]));
        mean_dev_sme = std::max(mean_dev_sme, (sme.mean[k] - sgd.mean[k]).norm());
        cov_dev_sme = std::max(cov_dev_sme, frobenius(sme.covariance[k] - sgd.covariance[k]));
        mean_dev_asymp = std::max(mean_dev_asymp, (gauss.mean - sgd.mean[k]).norm());
        cov_dev_asymp =
            std::max(cov_dev_asymp, frobenius(gauss.covariance - sgd.covariance[k]));
    }

    Json summary;
    summary["eta"] = eta;
    summary["x0"] = to_list(x0);
    summary["replicas"] = replicas;
    summary["horizon"] = horizon;
    summary["grid_dt"] = grid_dt;
    summary["em_substeps"] = em_substeps;
    summary["ode_h"] = ode_h;
    summary["delta"] = 0.2;
    summary["epsilon"] = 0.1;
    summary["rel_mean_sme"] = mean_dev_sme / mean_scale;
    summary["rel_cov_sme"] = cov_dev_sme / cov_scale;
    summary["rel_mean_asymp"] = mean_dev_asymp / mean_scale;
    summary["rel_cov_asymp"] = cov_dev_asymp / cov_scale;
    return summary;
}

// Momentum SGD ensembles vs the moment ODE for three momentum values, plus
// the decay-rate curve over the full momentum range.
Json run_fig4(ArtifactDir& art, std::uint64_t seed, int replicas) {
    const double eta = 5e-3;
    const double x0 = 1.0;
    const double horizon = 2.0;
    const long steps = std::lround(horizon / eta);
    const long stride = 20;
    const double ode_h = 1e-3;
    const std::vector<double> mus = {0.65, 0.8, 0.95};

    const FiniteSumObjective obj = make_quadratic1d();
    const QuadraticModel model{2.0, 0.0, 4.0, eta};

    std::ofstream momentsf = art.open("moments.csv");
    CsvWriter csv(momentsf);
    csv.header({"mu", "step", "t", "ef_msgd", "ef_se", "ef_ode"});

    Json per_mu = Json::array();
    for (const double mu : mus) {
        SGDConfig base;
        base.eta = eta;
        base.steps = steps;
        base.x0 = Vector::Constant(1, x0);
        base.seed = seed;
        base.record_stride = stride;
        base.record_objective = true;

        // f-moments need per-replica objective values, so accumulate them
        // directly rather than through state-space ensemble statistics.
        std::vector<double> times;
        std::vector<double> sum_f, sum_f2;
        for (int replica = 0; replica < replicas; ++replica) {
            SGDConfig cfg = base;
            cfg.replica = replica;
            const Trajectory traj = run_msgd(obj, cfg, [mu](long) { return mu; });
            if (times.empty()) {
                times = traj.times;
                sum_f.assign(times.size(), 0.0);
                sum_f2.assign(times.size(), 0.0);
            }
            for (std::size_t k = 0; k < traj.objective_values.size(); ++k) {
                sum_f[k] += traj.objective_values[k];
                sum_f2[k] += traj.objective_values[k] * traj.objective_values[k];
            }
        }

        const MomentStateM m0{x0 * x0, 0.0, 0.0};
        const MomentumMomentPath ode = integrate_momentum_moments(
            model, [mu](double) { return mu; }, m0, horizon, ode_h);

        double ef_final_msgd = 0.0, se_final = 0.0;
        for (std::size_t k = 0; k < times.size(); ++k) {
            const double mean_f = sum_f[k] / replicas;
            const double var_f =
                std::max(0.0, (sum_f2[k] / replicas - mean_f * mean_f) * replicas /
                                  std::max(1, replicas - 1));
            const double se = std::sqrt(var_f / replicas);
            const long ode_index = std::lround(times[k] / ode_h);
            const double ef_ode = ode.states[static_cast<std::size_t>(ode_index)].Ef;
            csv.row({mu, static_cast<double>(std::lround(times[k] / eta)), times[k], mean_f, se,
                     ef_ode});
            ef_final_msgd = mean_f;
            se_final = se;
        }

        // Oscillation = any upward move of the ODE objective curve.
        double max_rise = 0.0;
        for (std::size_t k = 1; k < ode.states.size(); ++k)
            max_rise = std::max(max_rise, ode.states[k].Ef - ode.states[k - 1].Ef);

        const std::complex<double> lambda = dominant_eigenvalue(mu, model);
        Json entry;
        entry["mu"] = mu;
        entry["lambda_re"] = lambda.real();
        entry["lambda_im"] = lambda.imag();
        entry["ef_steady"] = momentum_steady_state(mu, model).Ef;
        entry["ef_final_ode"] = ode.states.back().Ef;
        entry["ef_final_msgd"] = ef_final_msgd;
        entry["ef_final_se"] = se_final;
        entry["oscillating"] = max_rise > 1e-6;
        per_mu.push_back(entry);
    }

    std::ofstream ratef = art.open("rate.csv");
    CsvWriter rate_csv(ratef);
    rate_csv.header({"mu", "lambda_re", "lambda_im"});
    for (int i = 0; i < 1000; ++i) {
        const double mu = 1e-3 * i;
        const std::complex<double> lambda = dominant_eigenvalue(mu, model);
        rate_csv.row({mu, lambda.real(), lambda.imag()});
    }

    Json summary;
    summary["eta"] = eta;
    summary["x0"] = x0;
    summary["replicas"] = replicas;
    summary["horizon"] = horizon;
    summary["record_stride"] = stride;
    summary["ode_h"] = ode_h;
    summary["mu_opt"] = mu_opt(model);
    summary["curves"] = per_mu;
    return summary;
}

// Weak-error tables for both families with the exact-moment estimator.
Json run_smfig7(ArtifactDir& art) {
    const double horizon = 1.0;
    Json summary;
    summary["T"] = horizon;
    summary["etas"] = default_eta_grid();
    for (const WeakFamily kind : {WeakFamily::convex, WeakFamily::nonconvex}) {
        const WeakErrorFamily family = make_weak_error_family(kind);
        const WeakErrorReport report =
            run_weak_error_study(family, family.default_g, horizon, Estimator::exact);
        std::ofstream out = art.open("weak_error_" + report.family + ".csv");
        write_weak_error_report(out, report);
        Json entry;
        entry["g"] = family.default_g;
        entry["order1_slope"] = report.fit1.slope;
        entry["order1_slope_se"] = report.fit1.std_error;
        entry["order2_slope"] = report.fit2.slope;
        entry["order2_slope_se"] = report.fit2.std_error;
        summary[report.family] = entry;
    }
    return summary;
}

double trapezoid_auc(const std::vector<TrainLogRow>& log) {
    if (log.empty()) return kNaN;
    if (log.size() < 2) return log.front().loss;
    double area = 0.0;
    for (std::size_t k = 1; k < log.size(); ++k)
        area += 0.5 * (log[k].loss + log[k - 1].loss) *
                static_cast<double>(log[k].step - log[k - 1].step);
    const double range = static_cast<double>(log.back().step - log.front().step);
    return range > 0.0 ? area / range : log.back().loss;
}

Json spread_stats(std::vector<double> values) {
    if (values.empty()) return Json();
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    const double median =
        n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    Json stats;
    stats["best"] = values.front();
    stats["median"] = median;
    stats["worst"] = values.back();
    return stats;
}

// Shared train-option plumbing for cmd_train and cmd_sweep.
TrainOptions base_train_options(const Json& config, const FiniteSumObjective& obj,
                                std::uint64_t seed) {
    TrainOptions opt;
    opt.eta = get_double(config, "eta", 0.1);
    if (opt.eta <= 0.0) fail_field("eta", "must be > 0");
    opt.steps = get_long(config, "steps", 1000);
    if (opt.steps < 1) fail_field("steps", "must be >= 1");
    opt.batch_size = static_cast<int>(get_long(config, "batch_size", 1));
    if (opt.batch_size < 1) fail_field("batch_size", "must be >= 1");
    opt.seed = seed;
    opt.replica = static_cast<int>(get_long(config, "replica", 0));
    opt.mu = get_double(config, "mu", 0.9);
    opt.mu_max = get_double(config, "mu_max", 0.99);
    opt.u0 = get_double(config, "u0", 1.0);
    opt.mu0 = get_double(config, "mu0", 0.5);
    opt.beta0 = get_double(config, "beta0", 0.9);
    for (const auto& [key, value] : {std::pair<const char*, double>{"mu", opt.mu},
                                     {"mu_max", opt.mu_max},
                                     {"u0", opt.u0},
                                     {"mu0", opt.mu0},
                                     {"beta0", opt.beta0}})
        if (value < 0.0 || value > 1.0) fail_field(key, "must lie in [0, 1]");
    const std::string rule = get_string(config, "beta_rule", "clip");
    if (rule == "clip")
        opt.beta_rule = BetaRule::clip;
    else if (rule == "affine")
        opt.beta_rule = BetaRule::affine;
    else
        fail_field("beta_rule", "unknown rule '" + rule + "'; available: clip, affine");
    opt.log_stride = get_long(config, "log_stride", 1);
    if (opt.log_stride < 1) fail_field("log_stride", "must be >= 1");
    opt.divergence_threshold = get_double(config, "divergence_threshold", 1e10);
    const Json* x0 = find_key(config, "x0");
    if (x0) {
        opt.x0 = as_vector(*x0, "x0");
        if (opt.x0.size() != obj.dim)
            fail_field("x0", "expected " + std::to_string(obj.dim) + " components");
    }
    return opt;
}

void echo_train_options(Json& resolved, const TrainOptions& opt) {
    resolved["eta"] = opt.eta;
    resolved["steps"] = opt.steps;
    resolved["batch_size"] = opt.batch_size;
    resolved["seed"] = opt.seed;
    resolved["replica"] = opt.replica;
    resolved["mu"] = opt.mu;
    resolved["mu_max"] = opt.mu_max;
    resolved["u0"] = opt.u0;
    resolved["mu0"] = opt.mu0;
    resolved["beta0"] = opt.beta0;
    resolved["beta_rule"] = opt.beta_rule == BetaRule::clip ? "clip" : "affine";
    resolved["log_stride"] = opt.log_stride;
    resolved["divergence_threshold"] = opt.divergence_threshold;
}

}  // namespace

const std::vector<std::string>& figure_names() {
    static const std::vector<std::string> names = {"fig1", "fig2", "fig4", "sm-fig7"};
    return names;
}

FiniteSumObjective objective_by_name(const std::string& name, const Json& params) {
    const Json p = normalize_objective_params(name, params);
    if (name == "quadratic1d") return make_quadratic1d();
    if (name == "eggcarton") return make_eggcarton(p.at("delta"), p.at("epsilon"));
    if (name == "weak-convex") return make_weak_error_family(WeakFamily::convex).objective;
    if (name == "weak-nonconvex") return make_weak_error_family(WeakFamily::nonconvex).objective;
    if (name == "diag-quadratic")
        return make_diag_quadratic(as_vector(p.at("a"), "objective.a"),
                                   as_vector(p.at("b"), "objective.b"),
                                   as_vector(p.at("sigma"), "objective.sigma"));
    std::vector<int> widths;
    for (const auto& w : p.at("widths")) widths.push_back(static_cast<int>(w.get<long long>()));
    return make_synthetic_classifier(widths, static_cast<int>(p.at("n_samples").get<long long>()),
                                     static_cast<std::uint64_t>(p.at("data_seed").get<long long>()));
}

int cmd_figure(const std::string& name, const CliOverrides& overrides) {
    const auto start = Clock::now();
    const auto& names = figure_names();
    if (std::find(names.begin(), names.end(), name) == names.end())
        throw std::invalid_argument("unknown figure '" + name +
                                    "'; available: " + joined(names));

    const std::uint64_t seed = overrides.has_seed ? overrides.seed : 0;
    const std::string out_dir =
        overrides.out_dir.empty() ? "out/" + name : overrides.out_dir;
    ArtifactDir art(out_dir);

    Json resolved;
    resolved["command"] = "figure";
    resolved["figure"] = name;
    resolved["out"] = out_dir;

    Json summary;
    if (name == "sm-fig7") {
        summary = run_smfig7(art);
    } else {
        const int default_replicas = name == "fig1" ? 5000 : name == "fig2" ? 1000 : 10000;
        const int replicas =
            overrides.replicas >= 0 ? static_cast<int>(overrides.replicas) : default_replicas;
        if (replicas < 2) throw std::invalid_argument("figures need at least 2 replicas");
        resolved["seed"] = seed;
        resolved["replicas"] = replicas;
        if (name == "fig1") summary = run_fig1(art, seed, replicas);
        if (name == "fig2") summary = run_fig2(art, seed, replicas);
        if (name == "fig4") summary = run_fig4(art, seed, replicas);
    }

    art.write_json("summary.json", summary);
    art.finalize(resolved, start);
    return 0;
}

int cmd_simulate(const Json& config, const CliOverrides& overrides) {
    const auto start = Clock::now();
    static const std::vector<std::string> kinds = {"sgd",  "msgd",   "lr-adjusted",
                                                   "sme", "sme-lr", "sme-momentum"};
    const std::string kind = as_string(require_key(config, "kind"), "kind");
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
        fail_field("kind", "unknown kind '" + kind + "'; available: " + joined(kinds));

    const Json objective_cfg = resolve_objective_config(config);
    const FiniteSumObjective obj =
        objective_by_name(objective_cfg.at("name").get<std::string>(), objective_cfg);

    const double eta = as_double(require_key(config, "eta"), "eta");
    if (eta <= 0.0) fail_field("eta", "must be > 0");
    const std::uint64_t seed = resolve_seed(config, overrides);
    const long replicas =
        overrides.replicas >= 0 ? overrides.replicas : get_long(config, "replicas", 1);
    if (replicas < 1) fail_field("replicas", "must be >= 1");
    const Vector x0 = resolve_x0(config, obj);
    const double divergence_threshold = get_double(config, "divergence_threshold", 1e10);
    const std::string out_dir = resolve_out_dir(config, overrides, "out/simulate");
    const long stride = get_long(config, "record_stride", 1);
    if (stride < 1) fail_field("record_stride", "must be >= 1");

    Json resolved = config;
    resolved["command"] = "simulate";
    resolved["kind"] = kind;
    resolved["objective"] = objective_cfg;
    resolved["eta"] = eta;
    resolved["seed"] = seed;
    resolved["replicas"] = replicas;
    resolved["x0"] = to_list(x0);
    resolved["record_stride"] = stride;
    resolved["divergence_threshold"] = divergence_threshold;
    resolved["out"] = out_dir;

    std::function<Trajectory(int)> runner;
    double row_dt = eta;

    const bool discrete = kind == "sgd" || kind == "msgd" || kind == "lr-adjusted";
    if (discrete) {
        const long steps = as_long(require_key(config, "steps"), "steps");
        if (steps < 1) fail_field("steps", "must be >= 1");
        const int batch_size = static_cast<int>(get_long(config, "batch_size", 1));
        if (batch_size < 1) fail_field("batch_size", "must be >= 1");
        const bool record_objective = get_bool(config, "record_objective", false);
        const std::string sampling = get_string(config, "sampling", "iid");
        if (sampling != "iid" && sampling != "shuffle")
            fail_field("sampling", "unknown sampling '" + sampling + "'; available: iid, shuffle");

        SGDConfig base;
        base.eta = eta;
        base.steps = steps;
        base.batch_size = batch_size;
        base.x0 = x0;
        base.seed = seed;
        base.sampling = sampling == "iid" ? Sampling::iid : Sampling::epoch_shuffle;
        base.record_stride = stride;
        base.record_objective = record_objective;
        base.divergence_threshold = divergence_threshold;

        resolved["steps"] = steps;
        resolved["batch_size"] = batch_size;
        resolved["record_objective"] = record_objective;
        resolved["sampling"] = sampling;

        if (kind == "sgd") {
            runner = [&obj, base](int replica) {
                SGDConfig cfg = base;
                cfg.replica = replica;
                return run_sgd(obj, cfg);
            };
        } else if (kind == "msgd") {
            const double mu = get_double(config, "mu", 0.9);
            if (mu < 0.0 || mu > 1.0) fail_field("mu", "must lie in [0, 1]");
            resolved["mu"] = mu;
            runner = [&obj, base, mu](int replica) {
                SGDConfig cfg = base;
                cfg.replica = replica;
                return run_msgd(obj, cfg, [mu](long) { return mu; });
            };
        } else {
            const double u = get_double(config, "u", 1.0);
            if (u < 0.0 || u > 1.0) fail_field("u", "must lie in [0, 1]");
            resolved["u"] = u;
            runner = [&obj, base, u](int replica) {
                SGDConfig cfg = base;
                cfg.replica = replica;
                return run_lr_adjusted(obj, cfg, [u](long) { return u; });
            };
        }
    } else {
        const long em_substeps = get_long(config, "em_substeps", 10);
        if (em_substeps < 1) fail_field("em_substeps", "must be >= 1");
        const double dt = get_double(config, "dt", eta / static_cast<double>(em_substeps));
        if (dt <= 0.0) fail_field("dt", "must be > 0");
        long steps = 0;
        if (const Json* T = find_key(config, "T")) {
            const double horizon = as_double(*T, "T");
            if (horizon <= 0.0) fail_field("T", "must be > 0");
            steps = std::max(1L, std::lround(horizon / dt));
            resolved["T"] = horizon;
        } else {
            steps = as_long(require_key(config, "steps"), "steps");
            if (steps < 1) fail_field("steps", "must be >= 1");
        }
        resolved["dt"] = dt;
        resolved["steps"] = steps;

        SDESystem system;
        Vector z0 = x0;
        if (kind == "sme") {
            const long order = get_long(config, "order", 1);
            if (order != 1 && order != 2) fail_field("order", "must be 1 or 2");
            resolved["order"] = order;
            system = order == 1 ? build_sme_order1(obj, eta) : build_sme_order2(obj, eta);
        } else if (kind == "sme-lr") {
            const double u = get_double(config, "u", 1.0);
            if (u < 0.0 || u > 1.0) fail_field("u", "must lie in [0, 1]");
            resolved["u"] = u;
            system = build_sme_lr(obj, eta, [u](double) { return u; });
        } else {
            const double mu = get_double(config, "mu", 0.9);
            if (mu < 0.0 || mu > 1.0) fail_field("mu", "must lie in [0, 1]");
            resolved["mu"] = mu;
            // State layout (V, X): velocities start at rest.
            z0 = Vector::Zero(2 * obj.dim);
            z0.tail(obj.dim) = x0;
        }
        if (kind == "sme-momentum") {
            const double mu = resolved["mu"].get<double>();
            system = build_sme_momentum(obj, eta, [mu](double) { return mu; });
        }

        IntegratorConfig base;
        base.dt = dt;
        base.steps = steps;
        base.x0 = z0;
        base.seed = seed;
        base.record_stride = stride;
        base.divergence_threshold = divergence_threshold;
        runner = [system, base](int replica) {
            IntegratorConfig cfg = base;
            cfg.replica = replica;
            return euler_maruyama(system, cfg);
        };
        row_dt = dt;
    }

    try {
        ArtifactDir art(out_dir);
        if (replicas == 1) {
            const Trajectory traj = runner(0);
            std::ofstream out = art.open("trajectory.csv");
            write_trajectory(out, traj, row_dt);
        } else {
            const EnsembleMoments moments =
                ensemble_moments(runner, static_cast<int>(replicas));
            std::ofstream out = art.open("moments.csv");
            write_moments(out, moments, row_dt);
        }
        art.finalize(resolved, start);
    } catch (const DivergenceError& err) {
        std::cerr << "simulation diverged: " << err.what() << "\n";
        return 3;
    }
    return 0;
}

int cmd_train(const Json& config, const CliOverrides& overrides) {
    const auto start = Clock::now();
    const Json objective_cfg = resolve_objective_config(config);
    const FiniteSumObjective obj =
        objective_by_name(objective_cfg.at("name").get<std::string>(), objective_cfg);

    const std::string optimizer = as_string(require_key(config, "optimizer"), "optimizer");
    const auto& known = optimizer_names();
    if (std::find(known.begin(), known.end(), optimizer) == known.end())
        fail_field("optimizer", "unknown optimizer '" + optimizer +
                                    "'; available: " + joined(known));

    TrainOptions opt = base_train_options(config, obj, resolve_seed(config, overrides));
    opt.optimizer = optimizer;
    const std::string out_dir = resolve_out_dir(config, overrides, "out/train");

    Json resolved = config;
    resolved["command"] = "train";
    resolved["optimizer"] = optimizer;
    resolved["objective"] = objective_cfg;
    resolved["out"] = out_dir;
    echo_train_options(resolved, opt);

    const TrainResult result = train(obj, opt);

    ArtifactDir art(out_dir);
    {
        std::ofstream out = art.open("train_log.csv");
        write_train_log(out, result);
    }
    Json summary;
    summary["optimizer"] = optimizer;
    summary["eta"] = opt.eta;
    summary["steps"] = opt.steps;
    summary["seed"] = opt.seed;
    summary["diverged"] = result.diverged;
    summary["divergence_step"] = result.divergence_step;
    summary["initial_loss"] = result.initial_loss;
    summary["final_loss"] = result.final_loss;
    summary["auc"] = trapezoid_auc(result.log);
    summary["final_x"] = to_list(result.final_x);
    art.write_json("summary.json", summary);
    art.finalize(resolved, start);

    if (result.diverged) {
        std::cerr << "training diverged at step " << result.divergence_step << "\n";
        return 3;
    }
    return 0;
}

int cmd_sweep(const Json& config, const CliOverrides& overrides) {
    const auto start = Clock::now();
    const Json objective_cfg = resolve_objective_config(config);
    const FiniteSumObjective obj =
        objective_by_name(objective_cfg.at("name").get<std::string>(), objective_cfg);

    std::vector<std::string> optimizers;
    if (const Json* list = find_key(config, "optimizers")) {
        if (!list->is_array() || list->empty())
            fail_field("optimizers", "expected a non-empty list of optimizer names");
        for (std::size_t i = 0; i < list->size(); ++i)
            optimizers.push_back(
                as_string((*list)[i], "optimizers[" + std::to_string(i) + "]"));
    } else {
        optimizers.push_back(as_string(require_key(config, "optimizer"), "optimizer"));
    }
    const auto& known = optimizer_names();
    for (const std::string& name : optimizers)
        if (std::find(known.begin(), known.end(), name) == known.end())
            fail_field("optimizers", "unknown optimizer '" + name +
                                         "'; available: " + joined(known));

    const std::uint64_t seed = resolve_seed(config, overrides);

    // Learning-rate points: an explicit list, or a grid/log-uniform range
    // with per-point sampling streams keyed by (seed, points + index) so
    // they never collide with the training streams (seed, index).
    std::vector<double> etas;
    std::string sampling = "grid";
    std::string scale = "log";
    if (const Json* list = find_key(config, "etas")) {
        if (!list->is_array() || list->empty())
            fail_field("etas", "expected a non-empty list of learning rates");
        for (std::size_t i = 0; i < list->size(); ++i) {
            etas.push_back(as_double((*list)[i], "etas[" + std::to_string(i) + "]"));
            if (etas.back() <= 0.0)
                fail_field("etas[" + std::to_string(i) + "]", "must be > 0");
        }
    } else {
        const double eta_min = as_double(require_key(config, "eta_min"), "eta_min");
        const double eta_max = as_double(require_key(config, "eta_max"), "eta_max");
        if (eta_min <= 0.0) fail_field("eta_min", "must be > 0");
        if (eta_max < eta_min) fail_field("eta_max", "must be >= eta_min");
        const long points = get_long(config, "points", 10);
        if (points < 1) fail_field("points", "must be >= 1");
        scale = get_string(config, "scale", "log");
        if (scale != "log" && scale != "linear")
            fail_field("scale", "unknown scale '" + scale + "'; available: log, linear");
        sampling = get_string(config, "sampling", "grid");
        if (sampling != "grid" && sampling != "random")
            fail_field("sampling", "unknown sampling '" + sampling +
                                       "'; available: grid, random");
        const double lo = scale == "log" ? std::log(eta_min) : eta_min;
        const double hi = scale == "log" ? std::log(eta_max) : eta_max;
        for (long i = 0; i < points; ++i) {
            double position;
            if (sampling == "random") {
                RngStream stream = make_stream(seed, static_cast<std::uint64_t>(points + i));
                position = stream.uniform();
            } else {
                position = points == 1 ? 0.0
                                       : static_cast<double>(i) / static_cast<double>(points - 1);
            }
            const double value = lo + position * (hi - lo);
            etas.push_back(scale == "log" ? std::exp(value) : value);
        }
    }

    TrainOptions base = base_train_options(config, obj, seed);
    const std::string out_dir = resolve_out_dir(config, overrides, "out/sweep");

    Json resolved = config;
    resolved["command"] = "sweep";
    resolved["objective"] = objective_cfg;
    resolved["optimizers"] = optimizers;
    resolved["etas"] = etas;
    resolved["sampling"] = sampling;
    resolved["scale"] = scale;
    resolved["out"] = out_dir;
    echo_train_options(resolved, base);
    resolved.erase("replica");  // per-point replicas are derived from the index

    ArtifactDir art(out_dir);
    std::ofstream table = art.open("sweep.csv");
    CsvWriter csv(table);
    csv.header({"optimizer", "point", "eta", "status", "final_loss", "auc",
                "divergence_step"});

    Json summary;
    summary["etas"] = etas;
    Json per_optimizer;
    for (const std::string& optimizer : optimizers) {
        std::vector<double> final_losses, aucs;
        long n_diverged = 0, n_failed = 0;
        for (std::size_t i = 0; i < etas.size(); ++i) {
            TrainOptions opt = base;
            opt.optimizer = optimizer;
            opt.eta = etas[i];
            opt.replica = static_cast<int>(i);
            std::string status = "ok";
            double final_loss = kNaN, auc = kNaN;
            long divergence_step = -1;
            try {
                const TrainResult result = train(obj, opt);
                final_loss = result.final_loss;
                auc = trapezoid_auc(result.log);
                if (result.diverged) {
                    status = "diverged";
                    divergence_step = result.divergence_step;
                    ++n_diverged;
                } else {
                    final_losses.push_back(final_loss);
                    aucs.push_back(auc);
                }
            } catch (const std::exception&) {
                status = "failed";
                ++n_failed;
            }
            csv.text_row({optimizer, std::to_string(i), format_double(etas[i]), status,
                          format_double(final_loss), format_double(auc),
                          std::to_string(divergence_step)});
        }
        Json entry;
        entry["n_points"] = static_cast<long>(etas.size());
        entry["n_ok"] = static_cast<long>(etas.size()) - n_diverged - n_failed;
        entry["n_diverged"] = n_diverged;
        entry["n_failed"] = n_failed;
        entry["final_loss"] = spread_stats(final_losses);
        entry["auc"] = spread_stats(aucs);
        per_optimizer[optimizer] = entry;
    }
    summary["optimizers"] = per_optimizer;
    art.write_json("summary.json", summary);
    art.finalize(resolved, start);
    return 0;
}

}  // namespace smelab
