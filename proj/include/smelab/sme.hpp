#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "smelab/objectives.hpp"
#include "smelab/types.hpp"

namespace smelab {

// An SDE dX = drift(X, t) dt + diffusion(X, t) dW. Closures are read-only
// and shareable; integration replicas own their state and RNG stream.
struct SDESystem {
    int dim = 0;
    std::function<Vector(const Vector&, double)> drift;
    std::function<Matrix(const Vector&, double)> diffusion;
    std::string label;
};

struct IntegratorConfig {
    double dt = 0.0;
    long steps = 0;
    Vector x0;
    std::uint64_t seed = 0;
    int replica = 0;
    long record_stride = 1;
    double divergence_threshold = 1e10;
};

// Symmetric PSD square root by eigendecomposition; negative eigenvalues are
// clamped to 0 before rooting (values below -1e-10 are still clamped, but
// the input must be symmetric within 1e-10). Dimensions 1 and 2 use closed
// forms so per-step diffusion evaluation stays cheap.
Matrix psd_sqrt(const Matrix& m);

// dX = -grad f dt + (eta Sigma(X))^{1/2} dW.
SDESystem build_sme_order1(const FiniteSumObjective& obj, double eta);

// dX = -grad(f + (eta/4)|grad f|^2) dt + (eta Sigma(X))^{1/2} dW;
// the corrected drift is -grad f - (eta/2) Hf grad f.
SDESystem build_sme_order2(const FiniteSumObjective& obj, double eta);

// dX = -u(t) grad f dt + u(t) (eta Sigma(X))^{1/2} dW, u clipped to [0,1].
SDESystem build_sme_lr(const FiniteSumObjective& obj, double eta,
                       const std::function<double(double)>& u_schedule);

// Coupled pair on state z = (V, X) of dimension 2d:
//   dV = (-(1-mu(t))/eta V - grad f(X)) dt + (eta Sigma(X))^{1/2} dW
//   dX = V/eta dt
SDESystem build_sme_momentum(const FiniteSumObjective& obj, double eta,
                             const std::function<double(double)>& mu_schedule);

// X_{k+1} = X_k + dt * drift + sqrt(dt) * diffusion * Z_k.
Trajectory euler_maruyama(const SDESystem& system, const IntegratorConfig& cfg);

// Marginal of dX = -theta (X - xi) dt + sigma dW started at x0:
// mean x0 e^{-theta t} + xi (1 - e^{-theta t}),
// variance sigma^2/(2 theta) (1 - e^{-2 theta t}).
GaussianSummary ou_exact_moments(double theta, double xi, double sigma, double x0,
                                 double t);

// Order-2 SME of quadratic1d: theta = 2(1+eta), xi = 0, sigma = 2 sqrt(eta).
GaussianSummary quadratic_sme_distribution(double eta, double x0, double t);

}  // namespace smelab
