#pragma once

#include "smelab/objectives.hpp"
#include "smelab/types.hpp"

namespace smelab {

// Leading-order expansion of the SME around the gradient-flow mean path:
// X_t ~ N(X0_t, eta * S_t) with S' = -S H_t - H_t S + Sigma_t, S_0 = 0.
struct AsymptoticPath {
    std::vector<double> times;
    std::vector<Vector> mean_path;  // X0_t
    std::vector<Matrix> S_path;     // scaled covariance S_t
    double eta = 0.0;

    double horizon() const { return times.empty() ? 0.0 : times.back(); }
};

// RK4 solution of x' = -grad f(x) on [0, T]. The step is adjusted to the
// nearest divisor of T so the grid lands exactly on the horizon.
Trajectory integrate_gradient_flow(const FiniteSumObjective& obj, const Vector& x0,
                                   double T, double h);

// RK4 solution of S' = -S H_t - H_t S + Sigma_t along a previously computed
// mean path (same grid; stage values interpolate the mean path linearly).
// The result is symmetrized at every step.
std::vector<Matrix> integrate_covariance_ode(const FiniteSumObjective& obj,
                                             const Trajectory& mean_path, double h);

// Convenience driver running both integrations. h <= 0 selects the default
// min(eta, 1e-3).
AsymptoticPath compute_asymptotic_path(const FiniteSumObjective& obj, double eta,
                                       const Vector& x0, double T, double h = 0.0);

// N(X0_t, eta S_t) at time t, linearly interpolated between grid points.
// Out-of-horizon times are rejected.
GaussianSummary leading_order_distribution(const AsymptoticPath& path, double t);

// One-shot form: integrates up to t with default settings, then queries.
GaussianSummary leading_order_distribution(const FiniteSumObjective& obj, double eta,
                                           const Vector& x0, double t);

// Unique symmetric solution of S H + H S = Sigma for SPD H, via the
// vectorized (Kronecker) linear system. Singular or indefinite H rejected.
Matrix lyapunov_steady_state(const Matrix& H, const Matrix& Sigma);

}  // namespace smelab
