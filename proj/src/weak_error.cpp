#include "smelab/weak_error.hpp"

#include <cmath>
#include <stdexcept>

#include "smelab/sgd_sim.hpp"
#include "smelab/sme.hpp"

namespace smelab {

namespace {

constexpr int kMaxDegree = 6;

int polynomial_degree(const Polynomial& g) {
    int degree = 0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        if (!std::isfinite(g[p])) throw std::invalid_argument("non-finite coefficient");
        if (g[p] != 0.0) degree = static_cast<int>(p);
    }
    return degree;
}

// Pascal's triangle up to row `n`.
std::vector<std::vector<double>> binomials(int n) {
    std::vector<std::vector<double>> c(n + 1);
    for (int i = 0; i <= n; ++i) {
        c[i].assign(i + 1, 1.0);
        for (int j = 1; j < i; ++j) c[i][j] = c[i - 1][j - 1] + c[i - 1][j];
    }
    return c;
}

// E g(x_N) for the OU marginal of the SME at t = N eta. Both families have
// linear SME drift: -2x at order 1 and -2(1+eta)x at order 2 (the cubic
// sample terms of the nonconvex family cancel in the full gradient). Only
// the convex family has an OU variance; the nonconvex path is restricted to
// degree <= 1 where the variance does not enter.
double sme_expectation(const WeakErrorFamily& family, const Polynomial& g,
                       double eta, double t, int order, double x0) {
    const double theta = order == 1 ? 2.0 : 2.0 * (1.0 + eta);
    GaussianSummary ou = ou_exact_moments(theta, 0.0, 2.0 * std::sqrt(eta), x0, t);
    if (family.kind == WeakFamily::nonconvex && polynomial_degree(g) > 1)
        throw std::invalid_argument(
            "nonconvex family supports only degree <= 1 test functions");
    return gaussian_polynomial_expectation(ou.mean(0), ou.covariance(0, 0), g);
}

struct SampleStats {
    double mean = 0.0;
    double std_error = 0.0;
};

// Mean of g over the final iterates of `run`, with its standard error.
template <typename Run>
SampleStats ensemble_g(const Run& run, const Polynomial& g, long replicas) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (long r = 0; r < replicas; ++r) {
        const double value = evaluate_polynomial(g, run(r));
        sum += value;
        sum_sq += value * value;
    }
    SampleStats stats;
    stats.mean = sum / replicas;
    const double var =
        std::max(0.0, (sum_sq - replicas * stats.mean * stats.mean) / (replicas - 1));
    stats.std_error = std::sqrt(var / replicas);
    return stats;
}

void check_weak_inputs(double eta, double T, int order) {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
    if (order != 1 && order != 2) throw std::invalid_argument("order must be 1 or 2");
}

}  // namespace

double evaluate_polynomial(const Polynomial& g, double x) {
    double value = 0.0;
    for (std::size_t p = g.size(); p-- > 0;) value = value * x + g[p];
    return value;
}

double gaussian_polynomial_expectation(double mean, double variance,
                                       const Polynomial& g) {
    if (variance < 0.0) throw std::invalid_argument("variance must be >= 0");
    const int degree = polynomial_degree(g);
    if (degree > kMaxDegree)
        throw std::invalid_argument("polynomial degree above 6 not supported");
    std::vector<double> m(degree + 1, 1.0);
    if (degree >= 1) m[1] = mean;
    for (int p = 2; p <= degree; ++p) m[p] = mean * m[p - 1] + (p - 1) * variance * m[p - 2];
    double value = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p)
        if (p <= static_cast<std::size_t>(degree)) value += g[p] * m[p];
    return value;
}

std::vector<double> discrete_moment_oracle(const WeakErrorFamily& family,
                                           double eta, long steps, int max_degree,
                                           double x0) {
    if (!(eta >= 0.0)) throw std::invalid_argument("eta must be >= 0");
    if (steps < 0) throw std::invalid_argument("steps must be >= 0");
    if (max_degree < 0 || max_degree > kMaxDegree)
        throw std::invalid_argument("max_degree must lie in [0, 6]");
    if (family.kind == WeakFamily::nonconvex && max_degree > 1)
        throw std::invalid_argument(
            "nonconvex family moments close only up to degree 1");

    std::vector<double> m(max_degree + 1);
    for (int p = 0; p <= max_degree; ++p) m[p] = std::pow(x0, p);

    if (family.kind == WeakFamily::nonconvex) {
        // x' = (1-2eta)x + gamma(2eta - 3eta x^2) with E gamma = 0 and gamma
        // independent of x, so the mean recursion closes on its own.
        const double c = 1.0 - 2.0 * eta;
        for (long k = 0; k < steps; ++k)
            if (max_degree >= 1) m[1] *= c;
        return m;
    }

    // Convex family: x' = (1-2eta)x + 2 eta gamma with gamma = +-1, so
    // E x'^p expands binomially with E gamma^q = (q even).
    const double c = 1.0 - 2.0 * eta;
    const auto choose = binomials(max_degree);
    for (long k = 0; k < steps; ++k) {
        std::vector<double> next(max_degree + 1, 0.0);
        next[0] = 1.0;
        for (int p = 1; p <= max_degree; ++p) {
            double acc = 0.0;
            for (int j = p; j >= 0; j -= 2)  // p - j even
                acc += choose[p][j] * std::pow(c, j) * m[j] * std::pow(2.0 * eta, p - j);
            next[p] = acc;
        }
        m = next;
    }
    return m;
}

WeakErrorPoint weak_error(const WeakErrorFamily& family, const Polynomial& g,
                          double eta, double T, int order, Estimator estimator,
                          const WeakErrorOptions& options) {
    check_weak_inputs(eta, T, order);
    const long steps = static_cast<long>(std::floor(T / eta));
    const double t = steps * eta;
    const int degree = polynomial_degree(g);

    WeakErrorPoint point;
    point.eta = eta;
    point.order = order;

    if (estimator == Estimator::exact) {
        const auto moments = discrete_moment_oracle(family, eta, steps, degree, options.x0);
        double discrete = 0.0;
        for (std::size_t p = 0; p < g.size(); ++p)
            if (p <= static_cast<std::size_t>(degree)) discrete += g[p] * moments[p];
        point.value = std::abs(sme_expectation(family, g, eta, t, order, options.x0) - discrete);
        return point;
    }

    if (options.replicas < 2) throw std::invalid_argument("need at least 2 replicas");
    if (options.em_substeps < 1) throw std::invalid_argument("em_substeps must be >= 1");

    Vector x0(1);
    x0 << options.x0;

    SGDConfig sgd_cfg;
    sgd_cfg.eta = eta;
    sgd_cfg.steps = steps;
    sgd_cfg.x0 = x0;
    sgd_cfg.seed = options.seed;
    sgd_cfg.record_stride = std::max<long>(1, steps);
    SampleStats sgd = ensemble_g(
        [&](long r) {
            SGDConfig cfg = sgd_cfg;
            cfg.replica = static_cast<int>(r);
            return run_sgd(family.objective, cfg).states.back()(0);
        },
        g, options.replicas);

    SDESystem sme = order == 1 ? build_sme_order1(family.objective, eta)
                               : build_sme_order2(family.objective, eta);
    IntegratorConfig em_cfg;
    em_cfg.dt = eta / options.em_substeps;
    em_cfg.steps = steps * options.em_substeps;
    em_cfg.x0 = x0;
    em_cfg.seed = options.seed + 1;
    em_cfg.record_stride = std::max<long>(1, em_cfg.steps);
    SampleStats sde = ensemble_g(
        [&](long r) {
            IntegratorConfig cfg = em_cfg;
            cfg.replica = static_cast<int>(r);
            return euler_maruyama(sme, cfg).states.back()(0);
        },
        g, options.replicas);

    point.value = std::abs(sde.mean - sgd.mean);
    point.std_error = std::hypot(sgd.std_error, sde.std_error);
    return point;
}

OrderFit convergence_order(const std::vector<double>& etas,
                           const std::vector<double>& errors) {
    if (etas.size() != errors.size())
        throw std::invalid_argument("grid and error vectors differ in length");
    std::vector<double> lx, ly;
    int excluded = 0;
    for (std::size_t i = 0; i < etas.size(); ++i) {
        if (!(etas[i] > 0.0)) throw std::invalid_argument("eta grid must be positive");
        if (errors[i] > 0.0 && std::isfinite(errors[i])) {
            lx.push_back(std::log(etas[i]));
            ly.push_back(std::log(errors[i]));
        } else {
            ++excluded;
        }
    }
    const int n = static_cast<int>(lx.size());
    if (n < 3) throw std::invalid_argument("need at least 3 positive weak-error points");

    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx <= 0.0) throw std::invalid_argument("degenerate eta grid");

    OrderFit fit;
    fit.slope = sxy / sxx;
    fit.used_points = n;
    fit.excluded_points = excluded;
    if (n > 2) {
        double ssr = 0.0;
        const double intercept = my - fit.slope * mx;
        for (int i = 0; i < n; ++i) {
            const double resid = ly[i] - intercept - fit.slope * lx[i];
            ssr += resid * resid;
        }
        fit.std_error = std::sqrt(ssr / (n - 2) / sxx);
    }
    return fit;
}

std::vector<double> default_eta_grid() { return {0.05, 0.02, 0.01, 0.005, 0.002}; }

WeakErrorReport run_weak_error_study(const WeakErrorFamily& family,
                                     const Polynomial& g, double T,
                                     Estimator estimator,
                                     const WeakErrorOptions& options,
                                     std::vector<double> etas) {
    WeakErrorReport report;
    report.family = family.kind == WeakFamily::convex ? "convex" : "nonconvex";
    report.estimator = estimator == Estimator::exact ? "exact" : "monte_carlo";
    report.T = T;
    std::vector<double> e1, e2;
    for (double eta : etas) {
        report.order1.push_back(weak_error(family, g, eta, T, 1, estimator, options));
        report.order2.push_back(weak_error(family, g, eta, T, 2, estimator, options));
        e1.push_back(report.order1.back().value);
        e2.push_back(report.order2.back().value);
    }
    report.fit1 = convergence_order(etas, e1);
    report.fit2 = convergence_order(etas, e2);
    return report;
}

}  // namespace smelab
