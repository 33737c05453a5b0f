#include "smelab/sme.hpp"

#include <cmath>

#include "smelab/rng.hpp"

namespace smelab {

namespace {

Matrix psd_sqrt_eigen(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    Vector lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

// Constant diagonal diffusion for objectives carrying the diag-quadratic tag.
Matrix constant_diffusion(const DiagQuadraticInfo& info, double eta) {
    return Matrix((eta * info.sigma).cwiseSqrt().asDiagonal());
}

}  // namespace

Matrix psd_sqrt(const Matrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("psd_sqrt needs a square matrix");
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("psd_sqrt input is not symmetric within 1e-10");
    const long d = m.rows();
    if (d == 1) {
        Matrix r(1, 1);
        r(0, 0) = std::sqrt(std::max(m(0, 0), 0.0));
        return r;
    }
    if (d == 2) {
        const double tr = m(0, 0) + m(1, 1);
        const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
        if (det >= 0.0 && tr >= 0.0) {
            // sqrt(M) = (M + sqrt(det) I) / sqrt(tr + 2 sqrt(det)) for PSD M
            const double sd = std::sqrt(det);
            const double denom2 = tr + 2.0 * sd;
            if (denom2 <= 0.0) return Matrix::Zero(2, 2);
            Matrix r = m;
            r(0, 0) += sd;
            r(1, 1) += sd;
            return r / std::sqrt(denom2);
        }
        // an eigenvalue is negative; fall through to the clamping path
    }
    return psd_sqrt_eigen(m);
}

SDESystem build_sme_order1(const FiniteSumObjective& obj, double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    SDESystem sys;
    sys.dim = obj.dim;
    sys.label = "sme-order1:" + obj.name;
    sys.drift = [obj](const Vector& x, double) { return Vector(-obj.full_gradient(x)); };
    if (obj.diag_quadratic) {
        Matrix d = constant_diffusion(*obj.diag_quadratic, eta);
        sys.diffusion = [d](const Vector&, double) { return d; };
    } else {
        sys.diffusion = [obj, eta](const Vector& x, double) {
            return psd_sqrt(eta * obj.gradient_covariance(x));
        };
    }
    return sys;
}

SDESystem build_sme_order2(const FiniteSumObjective& obj, double eta) {
    SDESystem sys = build_sme_order1(obj, eta);
    sys.label = "sme-order2:" + obj.name;
    sys.drift = [obj, eta](const Vector& x, double) {
        Vector g = obj.full_gradient(x);
        return Vector(-g - (eta / 2.0) * (obj.hessian(x) * g));
    };
    return sys;
}

SDESystem build_sme_lr(const FiniteSumObjective& obj, double eta,
                       const std::function<double(double)>& u_schedule) {
    SDESystem base = build_sme_order1(obj, eta);
    SDESystem sys;
    sys.dim = obj.dim;
    sys.label = "sme-lr:" + obj.name;
    sys.drift = [base, u_schedule](const Vector& x, double t) {
        double u = std::clamp(u_schedule(t), 0.0, 1.0);
        return Vector(u * base.drift(x, t));
    };
    sys.diffusion = [base, u_schedule](const Vector& x, double t) {
        double u = std::clamp(u_schedule(t), 0.0, 1.0);
        return Matrix(u * base.diffusion(x, t));
    };
    return sys;
}

SDESystem build_sme_momentum(const FiniteSumObjective& obj, double eta,
                             const std::function<double(double)>& mu_schedule) {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    const int d = obj.dim;
    SDESystem sys;
    sys.dim = 2 * d;
    sys.label = "sme-momentum:" + obj.name;
    sys.drift = [obj, eta, mu_schedule, d](const Vector& z, double t) {
        Vector v = z.head(d);
        Vector x = z.tail(d);
        double mu = mu_schedule(t);
        Vector out(2 * d);
        out.head(d) = -((1.0 - mu) / eta) * v - obj.full_gradient(x);
        out.tail(d) = v / eta;
        return out;
    };
    std::function<Matrix(const Vector&)> root;
    if (obj.diag_quadratic) {
        Matrix c = constant_diffusion(*obj.diag_quadratic, eta);
        root = [c](const Vector&) { return c; };
    } else {
        root = [obj, eta](const Vector& x) {
            return psd_sqrt(eta * obj.gradient_covariance(x));
        };
    }
    sys.diffusion = [root, d](const Vector& z, double) {
        Matrix out = Matrix::Zero(2 * d, 2 * d);
        out.topLeftCorner(d, d) = root(z.tail(d));
        return out;
    };
    return sys;
}

Trajectory euler_maruyama(const SDESystem& system, const IntegratorConfig& cfg) {
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (cfg.steps < 0) throw std::invalid_argument("steps must be >= 0");
    if (cfg.x0.size() != system.dim)
        throw std::invalid_argument("x0 dimension does not match SDE system");
    if (cfg.record_stride < 1) throw std::invalid_argument("record_stride must be >= 1");

    RngStream stream = make_stream(cfg.seed, static_cast<std::uint64_t>(cfg.replica));
    const double sqrt_dt = std::sqrt(cfg.dt);

    Trajectory traj;
    Vector x = cfg.x0;
    auto record = [&](long k) {
        traj.times.push_back(k * cfg.dt);
        traj.states.push_back(x);
    };
    record(0);

    Vector z(system.dim);
    for (long k = 0; k < cfg.steps; ++k) {
        const double t = k * cfg.dt;  // schedules sampled at the left endpoint
        for (int j = 0; j < system.dim; ++j) z[j] = stream.normal();
        x = x + cfg.dt * system.drift(x, t) + sqrt_dt * (system.diffusion(x, t) * z);
        double mag = x.cwiseAbs().maxCoeff();
        if (!std::isfinite(mag) || mag > cfg.divergence_threshold)
            throw DivergenceError(k + 1, cfg.replica, mag);
        if ((k + 1) % cfg.record_stride == 0 || k + 1 == cfg.steps) record(k + 1);
    }
    return traj;
}

GaussianSummary ou_exact_moments(double theta, double xi, double sigma, double x0,
                                 double t) {
    if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
    if (t < 0.0) throw std::invalid_argument("time must be >= 0");
    GaussianSummary g;
    g.time = t;
    const double decay = std::exp(-theta * t);
    g.mean = Vector::Constant(1, x0 * decay + xi * (1.0 - decay));
    g.covariance = Matrix::Constant(
        1, 1, sigma * sigma / (2.0 * theta) * (1.0 - std::exp(-2.0 * theta * t)));
    return g;
}

GaussianSummary quadratic_sme_distribution(double eta, double x0, double t) {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    return ou_exact_moments(2.0 * (1.0 + eta), 0.0, 2.0 * std::sqrt(eta), x0, t);
}

}  // namespace smelab
