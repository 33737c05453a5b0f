#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "smelab/types.hpp"

namespace smelab {

// Marks an objective whose per-sample gradients are affine in x with
// state-independent noise: sample gradients average to a.*(x-b) and have
// per-dimension noise variance sigma. Enables exact moment oracles and
// constant-diffusion fast paths.
struct DiagQuadraticInfo {
    Vector a;
    Vector b;
    Vector sigma;
};

// Finite-sum objective f(x) = (1/n) sum_i f_i(x) with per-sample access.
// Sample indices are 0-based in [0, n). Instances are immutable after
// construction and safe for concurrent read-only evaluation.
struct FiniteSumObjective {
    std::string name;
    int n = 0;
    int dim = 0;

    std::function<double(int, const Vector&)> sample_value;
    std::function<Vector(int, const Vector&)> sample_gradient;
    // Null when only the finite-difference fallback is available.
    std::function<Matrix(const Vector&)> analytic_hessian;

    std::optional<DiagQuadraticInfo> diag_quadratic;

    // Preferred starting point; empty means the origin. The synthetic
    // classifier stores its deterministic weight initialization here.
    Vector default_x0;

    double value(const Vector& x) const;
    double sample(int i, const Vector& x) const;
    Vector sample_grad(int i, const Vector& x) const;

    // (1/n) sum_i grad f_i(x).
    Vector full_gradient(const Vector& x) const;

    // Sigma(x) = (1/n) sum_i (grad f - grad f_i)(grad f - grad f_i)^T.
    Matrix gradient_covariance(const Vector& x) const;

    // Analytic Hessian when available, otherwise central finite differences
    // of the full gradient with per-component step max(1e-5, 1e-7*|x_j|).
    Matrix hessian(const Vector& x) const;

    bool has_analytic_hessian() const { return static_cast<bool>(analytic_hessian); }

    Vector initial_point() const {
        return default_x0.size() == dim ? default_x0 : Vector(Vector::Zero(dim));
    }
};

// f(x) = x^2 realized as the two-sample average of (x-1)^2 - 1 and
// (x+1)^2 - 1; gradient noise variance is 4 everywhere.
FiniteSumObjective make_quadratic1d();

// f(x) = (x1^2 + x2^2 + delta cos(x1/eps) cos(x2/eps)) / 3 as a 3-sample sum.
FiniteSumObjective make_eggcarton(double delta, double epsilon);

enum class WeakFamily { convex, nonconvex };

// A weak-error test family together with the default polynomial test
// function g (coefficients c0..cp, lowest degree first).
struct WeakErrorFamily {
    FiniteSumObjective objective;
    std::vector<double> default_g;
    WeakFamily kind;
};

// convex:    f_i = (x - g_i)^2, g_i in {+1,-1};  f = x^2 + 1, g = x+x^2+x^3
// nonconvex: f_i = (x - g_i)^2 + g_i x^3;        f = x^2 + 1, g = x
WeakErrorFamily make_weak_error_family(WeakFamily kind);

// Separable quadratic f(x) = 1/2 sum_j a_j (x_j - b_j)^2 with constant
// per-dimension gradient-noise variance sigma_j. Realized as n = 2d samples:
// one +- pair per dimension perturbing only that coordinate by
// sqrt(d * sigma_j), which yields exactly Sigma(x) = diag(sigma) and reduces
// to the two-sample gradients a(x-b) +- sqrt(sigma) at d = 1.
FiniteSumObjective make_diag_quadratic(const Vector& a, const Vector& b,
                                       const Vector& sigma);

// Small tanh network with softmax cross-entropy plus l2 penalty over a
// deterministic two-class Gaussian-blob dataset (widths front = 2 inputs,
// back = 2 classes). Gradients by backpropagation, per sample.
FiniteSumObjective make_synthetic_classifier(const std::vector<int>& widths,
                                             int n_samples, std::uint64_t seed);

}  // namespace smelab
