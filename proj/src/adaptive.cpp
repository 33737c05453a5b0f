#include "smelab/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "smelab/rng.hpp"

namespace smelab {

namespace {

constexpr double kTiny = 1e-30;

void check_dims(const EMAState& state, const Vector& x, const Vector& g) {
    if (x.size() != state.g_bar.size() || g.size() != state.g_bar.size())
        throw std::invalid_argument("dimension mismatch in EMA update");
    if (!g.allFinite()) throw std::invalid_argument("non-finite gradient observation");
}

void check_control_range(double value, const char* what) {
    if (!(value >= 0.0 && value <= 1.0))
        throw std::invalid_argument(std::string(what) + " must lie in [0,1]");
}

void check_iterate(const Vector& x, long step, double threshold) {
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > threshold)
        throw DivergenceError(step, 0,
                              x.allFinite() ? x.cwiseAbs().maxCoeff()
                                            : std::numeric_limits<double>::infinity());
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

EMAState::EMAState(int dim, double beta0) {
    if (dim < 1) throw std::invalid_argument("dimension must be positive");
    if (!(beta0 >= beta_min && beta0 <= beta_max))
        throw std::invalid_argument("beta0 outside [beta_min, beta_max]");
    g_bar = Vector::Zero(dim);
    g2_bar = Vector::Zero(dim);
    x_bar = Vector::Zero(dim);
    x2_bar = Vector::Zero(dim);
    xg_bar = Vector::Zero(dim);
    beta = Vector::Constant(dim, beta0);
}

void ema_update(EMAState& state, const Vector& x, const Vector& g) {
    check_dims(state, x, g);
    if (state.k == 0) {
        state.g_bar = g;
        state.g2_bar = g.cwiseProduct(g);
        state.x_bar = x;
        state.x2_bar = x.cwiseProduct(x);
        state.xg_bar = x.cwiseProduct(g);
    } else {
        for (long i = 0; i < x.size(); ++i) {
            const double b = state.beta(i);
            const double w = 1.0 - b;
            state.g_bar(i) = b * state.g_bar(i) + w * g(i);
            state.g2_bar(i) = b * state.g2_bar(i) + w * g(i) * g(i);
            state.x_bar(i) = b * state.x_bar(i) + w * x(i);
            state.x2_bar(i) = b * state.x2_bar(i) + w * x(i) * x(i);
            state.xg_bar(i) = b * state.xg_bar(i) + w * x(i) * g(i);
        }
    }
    ++state.k;
}

Vector beta_heuristic(const EMAState& state) {
    Vector out(state.g_bar.size());
    for (long i = 0; i < out.size(); ++i) {
        if (state.g2_bar(i) < kTiny) {
            out(i) = state.beta_min;
            continue;
        }
        const double raw =
            (state.g2_bar(i) - state.g_bar(i) * state.g_bar(i)) / state.g2_bar(i);
        out(i) = state.rule == BetaRule::clip
                     ? std::clamp(raw, state.beta_min, state.beta_max)
                     : state.beta_min + (state.beta_max - state.beta_min) * clamp01(raw);
    }
    return out;
}

RegressionEstimate regress_quadratic(const EMAState& state) {
    if (state.k < 1)
        throw std::invalid_argument("regression requires at least one observation");
    const long d = state.g_bar.size();
    RegressionEstimate est;
    est.a = Vector::Zero(d);
    est.b = Vector::Zero(d);
    est.Sigma = Vector::Zero(d);
    for (long i = 0; i < d; ++i) {
        est.Sigma(i) =
            std::max(0.0, state.g2_bar(i) - state.g_bar(i) * state.g_bar(i));
        const double var_x = state.x2_bar(i) - state.x_bar(i) * state.x_bar(i);
        if (var_x < kTiny) {
            est.b(i) = state.x_bar(i);  // degenerate: no curvature information
            continue;
        }
        const double a = (state.xg_bar(i) - state.g_bar(i) * state.x_bar(i)) / var_x;
        est.a(i) = a;
        est.b(i) = std::abs(a) < kTiny ? state.x_bar(i)
                                       : state.x_bar(i) - state.g_bar(i) / a;
    }
    return est;
}

Vector csgd_policy(const RegressionEstimate& est, const Vector& x_bar, double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    Vector u(est.a.size());
    for (long i = 0; i < u.size(); ++i) {
        if (est.a(i) <= 0.0) {
            u(i) = 1.0;
            continue;
        }
        const double noise = eta * est.Sigma(i);
        if (noise < kTiny) {
            u(i) = 1.0;
            continue;
        }
        const double dist = x_bar(i) - est.b(i);
        u(i) = std::min(1.0, est.a(i) * dist * dist / noise);
    }
    return u;
}

Vector cmsgd_policy(const RegressionEstimate& est, const Vector& x, double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    Vector mu(est.a.size());
    for (long i = 0; i < mu.size(); ++i) {
        if (est.a(i) <= 0.0) {
            mu(i) = 1.0;
            continue;
        }
        const double cap = std::max(0.0, 1.0 - 2.0 * std::sqrt(est.a(i) * eta));
        const double noise = eta * est.Sigma(i);
        if (noise < kTiny) {
            mu(i) = cap;
            continue;
        }
        const double dist2 = (x(i) - est.b(i)) * (x(i) - est.b(i));
        const double away =
            dist2 < kTiny ? 0.0
                          : std::max(0.0, 1.0 - noise / (2.0 * est.a(i) * dist2));
        mu(i) = std::min(cap, away);
    }
    return mu;
}

CsgdState::CsgdState(int dim, double eta, double u0, double beta0, BetaRule rule)
    : ema(dim, beta0), eta(eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    check_control_range(u0, "u0");
    ema.rule = rule;
    u = Vector::Constant(dim, u0);
}

CmsgdState::CmsgdState(int dim, double eta, double mu0, double beta0, BetaRule rule)
    : ema(dim, beta0), eta(eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    check_control_range(mu0, "mu0");
    ema.rule = rule;
    mu = Vector::Constant(dim, mu0);
    v = Vector::Zero(dim);
}

Vector csgd_step(CsgdState& state, const Vector& x, const Vector& g) {
    ema_update(state.ema, x, g);
    const Vector u_star = csgd_policy(regress_quadratic(state.ema), state.ema.x_bar, state.eta);
    const Vector u_pre = state.u;
    state.u = state.ema.beta.cwiseProduct(state.u) +
              (Vector::Ones(x.size()) - state.ema.beta).cwiseProduct(u_star);
    state.ema.beta = beta_heuristic(state.ema);
    Vector next = x - state.eta * u_pre.cwiseProduct(g);
    check_iterate(next, state.ema.k, state.divergence_threshold);
    return next;
}

Vector cmsgd_step(CmsgdState& state, const Vector& x, const Vector& g) {
    ema_update(state.ema, x, g);
    const Vector mu_star = cmsgd_policy(regress_quadratic(state.ema), x, state.eta);
    const Vector mu_pre = state.mu;
    state.mu = state.ema.beta.cwiseProduct(state.mu) +
               (Vector::Ones(x.size()) - state.ema.beta).cwiseProduct(mu_star);
    state.ema.beta = beta_heuristic(state.ema);
    state.v = mu_pre.cwiseProduct(state.v) - state.eta * g;
    Vector next = x + state.v;
    check_iterate(next, state.ema.k, state.divergence_threshold);
    return next;
}

Vector adagrad_step(AdagradState& state, const Vector& x, const Vector& g,
                    double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    state.G += g.cwiseProduct(g);
    return x - eta * g.cwiseQuotient(
                        (state.G.array() + state.eps).sqrt().matrix());
}

Vector adam_step(AdamState& state, const Vector& x, const Vector& g, double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    ++state.k;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * g;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(state.beta1, state.k);
    const double c2 = 1.0 - std::pow(state.beta2, state.k);
    const Vector m_hat = state.m / c1;
    const Vector v_hat = state.v / c2;
    return x - eta * m_hat.cwiseQuotient(
                        (v_hat.array().sqrt() + state.eps).matrix());
}

double msgd_annealed_mu(long k, double mu_max) {
    if (k < 0) throw std::invalid_argument("step index must be >= 0");
    const double q = static_cast<double>(k / 250 + 1);
    return std::min(1.0 - 1.0 / (2.0 * q), mu_max);
}

const std::vector<std::string>& optimizer_names() {
    static const std::vector<std::string> names = {
        "sgd", "msgd", "msgd-a", "csgd", "cmsgd", "adagrad", "adam"};
    return names;
}

TrainResult train(const FiniteSumObjective& obj, const TrainOptions& options) {
    if (options.steps < 0) throw std::invalid_argument("steps must be >= 0");
    if (options.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(options.eta > 0.0)) throw std::invalid_argument("eta must be positive");
    check_control_range(options.mu, "mu");
    check_control_range(options.mu_max, "mu_max");

    const auto& names = optimizer_names();
    if (std::find(names.begin(), names.end(), options.optimizer) == names.end())
        throw std::invalid_argument("unknown optimizer '" + options.optimizer + "'");

    Vector x = options.x0.size() == obj.dim ? options.x0 : obj.initial_point();
    if (options.x0.size() != 0 && options.x0.size() != obj.dim)
        throw std::invalid_argument("x0 dimension mismatch");

    RngStream stream = make_stream(options.seed, static_cast<std::uint64_t>(options.replica));
    auto batch_gradient = [&](const Vector& at) {
        Vector g = Vector::Zero(obj.dim);
        for (int b = 0; b < options.batch_size; ++b)
            g += obj.sample_grad(static_cast<int>(stream.uniform_int(obj.n)), at);
        return Vector(g / options.batch_size);
    };

    CsgdState csgd(obj.dim, options.eta, options.u0, options.beta0, options.beta_rule);
    CmsgdState cmsgd(obj.dim, options.eta, options.mu0, options.beta0, options.beta_rule);
    csgd.divergence_threshold = options.divergence_threshold;
    cmsgd.divergence_threshold = options.divergence_threshold;
    AdagradState adagrad(obj.dim);
    AdamState adam(obj.dim);
    Vector v = Vector::Zero(obj.dim);  // msgd / msgd-a velocity

    TrainResult result;
    result.initial_loss = obj.value(x);

    auto log_row = [&](long step) {
        TrainLogRow row;
        row.step = step;
        row.loss = obj.value(x);
        if (options.optimizer == "csgd") {
            row.mean_u = csgd.u.mean();
            row.mean_beta = csgd.ema.beta.mean();
        } else if (options.optimizer == "cmsgd") {
            row.mean_mu = cmsgd.mu.mean();
            row.mean_beta = cmsgd.ema.beta.mean();
        } else if (options.optimizer == "msgd") {
            row.mean_mu = options.mu;
        } else if (options.optimizer == "msgd-a") {
            row.mean_mu = msgd_annealed_mu(step, options.mu_max);
        }
        result.log.push_back(row);
    };

    const long stride = std::max<long>(1, options.log_stride);
    log_row(0);
    for (long k = 0; k < options.steps; ++k) {
        const Vector g = batch_gradient(x);
        Vector next;
        try {
            if (options.optimizer == "sgd") {
                next = x - options.eta * g;
            } else if (options.optimizer == "msgd" || options.optimizer == "msgd-a") {
                const double mu_k = options.optimizer == "msgd"
                                        ? options.mu
                                        : msgd_annealed_mu(k, options.mu_max);
                v = mu_k * v - options.eta * g;
                next = x + v;
            } else if (options.optimizer == "csgd") {
                next = csgd_step(csgd, x, g);
            } else if (options.optimizer == "cmsgd") {
                next = cmsgd_step(cmsgd, x, g);
            } else if (options.optimizer == "adagrad") {
                next = adagrad_step(adagrad, x, g, options.eta);
            } else {
                next = adam_step(adam, x, g, options.eta);
            }
            check_iterate(next, k + 1, options.divergence_threshold);
        } catch (const DivergenceError& err) {
            result.diverged = true;
            result.divergence_step = err.step();
            break;
        }
        x = next;
        if ((k + 1) % stride == 0 || k + 1 == options.steps) log_row(k + 1);
    }

    result.final_x = x;
    result.final_loss = obj.value(x);
    return result;
}

}  // namespace smelab
