#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smelab/objectives.hpp"
#include "smelab/types.hpp"

namespace smelab {

// Polynomial test function g(x) = sum_p coeffs[p] x^p (lowest degree first,
// degree at most 6).
using Polynomial = std::vector<double>;

double evaluate_polynomial(const Polynomial& g, double x);

// E g(X) for X ~ N(mean, variance) via the raw-moment recursion
// m_p = mean m_{p-1} + (p-1) variance m_{p-2}.
double gaussian_polynomial_expectation(double mean, double variance,
                                       const Polynomial& g);

// Exact raw moments E x_N^p, p = 0..max_degree, of the discrete SGD iterates
// on a weak-error family, from the closed linear recursions of the update.
// The convex family supports degrees up to 6; the nonconvex family only the
// mean (its higher moments do not close).
std::vector<double> discrete_moment_oracle(const WeakErrorFamily& family,
                                           double eta, long steps, int max_degree,
                                           double x0);

enum class Estimator { exact, monte_carlo };

struct WeakErrorOptions {
    double x0 = 1.0;
    long replicas = 100000;   // Monte Carlo estimator only
    std::uint64_t seed = 0;   // Monte Carlo estimator only
    long em_substeps = 10;    // SME integrator step dt = eta / em_substeps
};

struct WeakErrorPoint {
    double eta = 0.0;
    int order = 1;
    double value = 0.0;      // E_w = |E g(X_{N eta}) - E g(x_N)|
    double std_error = 0.0;  // 0 for the exact estimator
};

// Weak error at one learning rate with N = floor(T/eta) SGD steps. The
// exact estimator pairs the discrete moment oracle with the OU closed form
// of the SME (both families have linear SME drift); the Monte Carlo
// estimator runs an SGD ensemble against an Euler-Maruyama ensemble and
// reports the combined standard error.
WeakErrorPoint weak_error(const WeakErrorFamily& family, const Polynomial& g,
                          double eta, double T, int order, Estimator estimator,
                          const WeakErrorOptions& options = {});

struct OrderFit {
    double slope = 0.0;
    double std_error = 0.0;
    int used_points = 0;
    int excluded_points = 0;  // non-positive E_w dropped before the log fit
};

// Least-squares slope of log E_w against log eta with its standard error.
// Fewer than 3 usable points is an error.
OrderFit convergence_order(const std::vector<double>& etas,
                           const std::vector<double>& errors);

std::vector<double> default_eta_grid();  // {0.05, 0.02, 0.01, 0.005, 0.002}

struct WeakErrorReport {
    std::string family;
    std::string estimator;
    double T = 0.0;
    std::vector<WeakErrorPoint> order1;
    std::vector<WeakErrorPoint> order2;
    OrderFit fit1;
    OrderFit fit2;
};

// Full grid study for both SME orders on one family.
WeakErrorReport run_weak_error_study(const WeakErrorFamily& family,
                                     const Polynomial& g, double T,
                                     Estimator estimator,
                                     const WeakErrorOptions& options = {},
                                     std::vector<double> etas = default_eta_grid());

}  // namespace smelab
