#include "smelab/asymptotics.hpp"

#include <cmath>

#include "smelab/ode.hpp"

namespace smelab {

namespace {

long grid_steps(double T, double h) {
    if (!(T > 0.0)) throw std::invalid_argument("horizon must be positive");
    if (!(h > 0.0)) throw std::invalid_argument("step must be positive");
    return std::max<long>(1, std::lround(T / h));
}

void check_divergent(const Vector& x, double t) {
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e10)
        throw DivergenceError(static_cast<long>(t * 1e6), 0, x.cwiseAbs().maxCoeff());
}

}  // namespace

Trajectory integrate_gradient_flow(const FiniteSumObjective& obj, const Vector& x0,
                                   double T, double h) {
    if (x0.size() != obj.dim) throw std::invalid_argument("x0 dimension mismatch");
    const long steps = grid_steps(T, h);
    const double h_eff = T / steps;

    auto rhs = [&obj](double, const Vector& x) { return Vector(-obj.full_gradient(x)); };
    Trajectory traj;
    traj.times.reserve(steps + 1);
    traj.states.reserve(steps + 1);
    Vector x = x0;
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    for (long k = 0; k < steps; ++k) {
        x = rk4_step(rhs, x, k * h_eff, h_eff);
        check_divergent(x, (k + 1) * h_eff);
        traj.times.push_back((k + 1) * h_eff);
        traj.states.push_back(x);
    }
    return traj;
}

std::vector<Matrix> integrate_covariance_ode(const FiniteSumObjective& obj,
                                             const Trajectory& mean_path, double h) {
    if (mean_path.size() < 2)
        throw std::invalid_argument("mean path needs at least two grid points");
    const double grid_h = mean_path.times[1] - mean_path.times[0];
    if (std::abs(grid_h - h) > 1e-12 * std::max(1.0, std::abs(h)))
        throw std::invalid_argument("covariance step must match the mean-path grid");

    const int d = obj.dim;
    std::vector<Matrix> S_path;
    S_path.reserve(mean_path.size());
    Matrix S = Matrix::Zero(d, d);
    S_path.push_back(S);

    for (std::size_t k = 0; k + 1 < mean_path.size(); ++k) {
        const Vector& xa = mean_path.states[k];
        const Vector& xb = mean_path.states[k + 1];
        Vector xm = 0.5 * (xa + xb);  // linear interpolation at the half step

        auto rhs_at = [&obj](const Matrix& Sv, const Vector& x) {
            Matrix H = obj.hessian(x);
            Matrix Sig = obj.gradient_covariance(x);
            return Matrix(-Sv * H - H * Sv + Sig);
        };
        Matrix k1 = rhs_at(S, xa);
        Matrix k2 = rhs_at(S + 0.5 * h * k1, xm);
        Matrix k3 = rhs_at(S + 0.5 * h * k2, xm);
        Matrix k4 = rhs_at(S + h * k3, xb);
        S += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        S = 0.5 * (S + S.transpose());
        S_path.push_back(S);
    }
    return S_path;
}

AsymptoticPath compute_asymptotic_path(const FiniteSumObjective& obj, double eta,
                                       const Vector& x0, double T, double h) {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    if (h <= 0.0) h = std::min(eta, 1e-3);
    Trajectory mean = integrate_gradient_flow(obj, x0, T, h);
    const double h_eff = mean.times[1] - mean.times[0];

    AsymptoticPath path;
    path.times = mean.times;
    path.mean_path = mean.states;
    path.S_path = integrate_covariance_ode(obj, mean, h_eff);
    path.eta = eta;
    return path;
}

GaussianSummary leading_order_distribution(const AsymptoticPath& path, double t) {
    if (path.times.empty()) throw std::invalid_argument("empty asymptotic path");
    const double T = path.horizon();
    if (t < -1e-12 || t > T + 1e-12)
        throw std::out_of_range("time outside the integrated horizon");
    t = std::clamp(t, 0.0, T);

    const double h = path.times.size() > 1 ? path.times[1] - path.times[0] : 1.0;
    const std::size_t i =
        std::min(path.times.size() - 2, static_cast<std::size_t>(std::max(0.0, t / h)));
    const double w = std::clamp((t - path.times[i]) / h, 0.0, 1.0);

    GaussianSummary g;
    g.time = t;
    g.mean = (1.0 - w) * path.mean_path[i] + w * path.mean_path[i + 1];
    g.covariance = path.eta * ((1.0 - w) * path.S_path[i] + w * path.S_path[i + 1]);
    return g;
}

GaussianSummary leading_order_distribution(const FiniteSumObjective& obj, double eta,
                                           const Vector& x0, double t) {
    if (t < 0.0) throw std::out_of_range("time must be >= 0");
    if (t == 0.0) {
        GaussianSummary g;
        g.time = 0.0;
        g.mean = x0;
        g.covariance = Matrix::Zero(obj.dim, obj.dim);
        return g;
    }
    AsymptoticPath path = compute_asymptotic_path(obj, eta, x0, t);
    return leading_order_distribution(path, t);
}

Matrix lyapunov_steady_state(const Matrix& H, const Matrix& Sigma) {
    const long d = H.rows();
    if (H.cols() != d || Sigma.rows() != d || Sigma.cols() != d)
        throw std::invalid_argument("lyapunov_steady_state needs square same-size inputs");
    if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("H must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    const double lam_min = es.eigenvalues().minCoeff();
    const double lam_max = es.eigenvalues().cwiseAbs().maxCoeff();
    if (!(lam_min > 1e-12 * std::max(1.0, lam_max)))
        throw std::invalid_argument("H must be symmetric positive definite");

    // (I (x) H + H (x) I) vec(S) = vec(Sigma), SPD because eigenvalues are
    // the pairwise sums lam_i + lam_j > 0.
    Matrix K = Matrix::Zero(d * d, d * d);
    Matrix I = Matrix::Identity(d, d);
    for (long i = 0; i < d; ++i)
        for (long j = 0; j < d; ++j)
            for (long k = 0; k < d; ++k)
                for (long l = 0; l < d; ++l)
                    K(i * d + k, j * d + l) = I(i, j) * H(k, l) + H(i, j) * I(k, l);

    Eigen::Map<const Vector> rhs(Sigma.data(), d * d);
    Vector s = K.ldlt().solve(rhs);
    Matrix S = Eigen::Map<const Matrix>(s.data(), d, d);
    return 0.5 * (S + S.transpose());
}

}  // namespace smelab
