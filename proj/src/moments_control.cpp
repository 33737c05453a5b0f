#include "smelab/moments_control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "smelab/ode.hpp"

namespace smelab {

namespace {

constexpr double kNoiseFloor = 1e-30;

void check_model(const QuadraticModel& model) {
    if (!(model.eta > 0.0)) throw std::invalid_argument("model.eta must be positive");
    if (model.Sigma < 0.0) throw std::invalid_argument("model.Sigma must be >= 0");
}

void check_positive_curvature(const QuadraticModel& model) {
    check_model(model);
    if (!(model.a > 0.0)) throw std::invalid_argument("requires curvature a > 0");
}

long grid_steps(double T, double h) {
    if (!(T > 0.0)) throw std::invalid_argument("horizon must be positive");
    if (!(h > 0.0)) throw std::invalid_argument("step must be positive");
    return std::max<long>(1, std::lround(T / h));
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Shared RK4 driver for the scalar paths; `rate` sees (t, m) and `control`
// is only used for reporting.
template <typename Rate, typename Control>
ScalarMomentPath scalar_path(const Rate& rate, const Control& control, double m0,
                             double T, double h) {
    const long steps = grid_steps(T, h);
    const double h_eff = T / steps;
    ScalarMomentPath path;
    path.times.reserve(steps + 1);
    path.values.reserve(steps + 1);
    path.controls.reserve(steps + 1);
    double m = m0;
    path.times.push_back(0.0);
    path.values.push_back(m);
    path.controls.push_back(control(0.0, m));
    for (long k = 0; k < steps; ++k) {
        m = rk4_step(rate, m, k * h_eff, h_eff);
        const double t = (k + 1) * h_eff;
        path.times.push_back(t);
        path.values.push_back(m);
        path.controls.push_back(control(t, m));
    }
    return path;
}

}  // namespace

double lr_moment_rate(const QuadraticModel& model, double m, double u) {
    return -2.0 * model.a * u * m + 0.5 * model.a * model.eta * model.Sigma * u * u;
}

double lr_steady_state(const QuadraticModel& model, double u) {
    return model.eta * model.Sigma * u / 4.0;
}

double lr_constant_u_moment(const QuadraticModel& model, double m0, double u,
                            double t) {
    const double minf = lr_steady_state(model, u);
    return minf + (m0 - minf) * std::exp(-2.0 * model.a * u * t);
}

ScalarMomentPath integrate_lr_moment(const QuadraticModel& model,
                                     const std::function<double(double)>& u_schedule,
                                     double m0, double T, double h) {
    check_model(model);
    auto rate = [&](double t, double m) {
        return lr_moment_rate(model, m, clamp01(u_schedule(t)));
    };
    auto control = [&](double t, double) { return clamp01(u_schedule(t)); };
    return scalar_path(rate, control, m0, T, h);
}

ScalarMomentPath integrate_lr_feedback(const QuadraticModel& model, double m0,
                                       double T, double h) {
    check_model(model);
    auto rate = [&](double, double m) {
        return lr_moment_rate(model, m, optimal_u_feedback(m, model));
    };
    auto control = [&](double, double m) { return optimal_u_feedback(m, model); };
    return scalar_path(rate, control, m0, T, h);
}

double optimal_u_feedback(double m, const QuadraticModel& model) {
    check_model(model);
    if (model.a <= 0.0) return 1.0;
    if (m <= 0.0) return 0.0;
    const double noise = model.eta * model.Sigma;
    if (noise < kNoiseFloor) return 1.0;
    return clamp01(2.0 * m / noise);
}

double lr_transition_time(const QuadraticModel& model, double m0) {
    check_model(model);
    const double noise = model.eta * model.Sigma;
    if (model.a <= 0.0 || noise < kNoiseFloor)
        return std::numeric_limits<double>::infinity();
    const double ratio = 4.0 * m0 / noise;
    if (ratio <= 1.0) return 0.0;
    return std::log(ratio - 1.0) / (2.0 * model.a);
}

double lr_annealing_schedule(double t, const QuadraticModel& model, double m0) {
    check_model(model);
    const double noise = model.eta * model.Sigma;
    if (model.a <= 0.0 || noise < kNoiseFloor || 4.0 * m0 / noise <= 1.0)
        return optimal_u_feedback(m0, model);
    const double tstar = lr_transition_time(model, m0);
    if (t <= tstar) return 1.0;
    return 1.0 / (1.0 + model.a * (t - tstar));
}

double transition_time_quadratic(double eta, double x0) {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    if (x0 == 0.0) throw std::invalid_argument("x0 must be nonzero");
    return std::log1p((eta + 1.0) / eta * x0 * x0) / (4.0 * (1.0 + eta));
}

MomentumSystem momentum_system(double mu, const QuadraticModel& model) {
    check_model(model);
    if (mu < 0.0 || mu > 1.0) throw std::invalid_argument("mu must lie in [0,1]");
    const double a = model.a;
    const double eta = model.eta;
    MomentumSystem sys;
    sys.A = Matrix::Zero(3, 3);
    sys.A(0, 2) = 1.0 / eta;
    sys.A(1, 1) = -2.0 * (1.0 - mu) / eta;
    sys.A(1, 2) = -2.0;
    sys.A(2, 0) = -2.0 * a;
    sys.A(2, 1) = a / eta;
    sys.A(2, 2) = -(1.0 - mu) / eta;
    sys.B = Vector::Zero(3);
    sys.B(1) = eta * model.Sigma;
    return sys;
}

MomentumMomentPath integrate_momentum_moments(
    const QuadraticModel& model, const std::function<double(double)>& mu_schedule,
    const MomentStateM& M0, double T, double h) {
    check_model(model);
    const long steps = grid_steps(T, h);
    const double h_eff = T / steps;

    auto rate = [&](double t, const Vector& M) {
        MomentumSystem sys = momentum_system(clamp01(mu_schedule(t)), model);
        return Vector(sys.A * M + sys.B);
    };

    MomentumMomentPath path;
    path.times.reserve(steps + 1);
    path.states.reserve(steps + 1);
    path.controls.reserve(steps + 1);
    Vector M(3);
    M << M0.Ef, M0.Ev2, M0.Evg;
    path.times.push_back(0.0);
    path.states.push_back(M0);
    path.controls.push_back(clamp01(mu_schedule(0.0)));
    for (long k = 0; k < steps; ++k) {
        M = rk4_step(rate, M, k * h_eff, h_eff);
        const double t = (k + 1) * h_eff;
        path.times.push_back(t);
        path.states.push_back(MomentStateM{M(0), M(1), M(2)});
        path.controls.push_back(clamp01(mu_schedule(t)));
    }
    return path;
}

std::complex<double> dominant_eigenvalue(double mu, const QuadraticModel& model) {
    check_positive_curvature(model);
    const double damping = 1.0 - mu;
    const double disc = damping * damping - 4.0 * model.a * model.eta;
    if (disc >= 0.0)
        return {(-damping + std::sqrt(disc)) / model.eta, 0.0};
    return {-damping / model.eta, std::sqrt(-disc) / model.eta};
}

double mu_opt(const QuadraticModel& model) {
    check_positive_curvature(model);
    return std::max(1.0 - 2.0 * std::sqrt(model.a * model.eta), 0.0);
}

MomentStateM momentum_steady_state(double mu, const QuadraticModel& model) {
    check_positive_curvature(model);
    if (mu < 0.0 || mu >= 1.0)
        throw std::invalid_argument("steady state requires 0 <= mu < 1");
    const double damping = 1.0 - mu;
    MomentStateM M;
    M.Ef = model.eta * model.Sigma / (4.0 * damping);
    M.Ev2 = model.eta * model.eta * model.Sigma / (2.0 * damping);
    M.Evg = 0.0;
    return M;
}

ScalarMomentPath integrate_averaged(const QuadraticModel& model,
                                    const std::function<double(double)>& mu_schedule,
                                    double m0, double T, double h) {
    check_positive_curvature(model);
    auto mu_at = [&](double t) {
        const double mu = clamp01(mu_schedule(t));
        if (mu >= 1.0)
            throw std::invalid_argument("averaged dynamics undefined at mu = 1");
        return mu;
    };
    auto rate = [&](double t, double m) {
        const double mu = mu_at(t);
        const double minf = model.eta * model.Sigma / (4.0 * (1.0 - mu));
        return dominant_eigenvalue(mu, model).real() * (m - minf);
    };
    auto control = [&](double t, double) { return mu_at(t); };
    return scalar_path(rate, control, m0, T, h);
}

double optimal_mu_feedback(double m, const QuadraticModel& model) {
    check_model(model);
    if (model.a <= 0.0) return 1.0;
    if (m <= 0.0) return 0.0;
    const double cap = mu_opt(model);
    const double noise = model.eta * model.Sigma;
    if (noise < kNoiseFloor) return cap;
    return std::min(cap, std::max(0.0, 1.0 - noise / (4.0 * m)));
}

}  // namespace smelab
