#include "smelab/objectives.hpp"

#include <cmath>
#include <memory>

namespace smelab {

namespace {

void check_index(int i, int n) {
    if (i < 0 || i >= n)
        throw std::invalid_argument("sample index " + std::to_string(i) +
                                    " out of range [0, " + std::to_string(n) + ")");
}

void check_point(const Vector& x, int dim) {
    if (x.size() != dim)
        throw std::invalid_argument("point has dimension " + std::to_string(x.size()) +
                                    ", objective expects " + std::to_string(dim));
    if (!x.allFinite()) throw std::invalid_argument("non-finite evaluation point");
}

}  // namespace

double FiniteSumObjective::value(const Vector& x) const {
    check_point(x, dim);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += sample_value(i, x);
    return s / n;
}

double FiniteSumObjective::sample(int i, const Vector& x) const {
    check_index(i, n);
    check_point(x, dim);
    return sample_value(i, x);
}

Vector FiniteSumObjective::sample_grad(int i, const Vector& x) const {
    check_index(i, n);
    check_point(x, dim);
    return sample_gradient(i, x);
}

Vector FiniteSumObjective::full_gradient(const Vector& x) const {
    check_point(x, dim);
    Vector g = Vector::Zero(dim);
    for (int i = 0; i < n; ++i) g += sample_gradient(i, x);
    return g / n;
}

Matrix FiniteSumObjective::gradient_covariance(const Vector& x) const {
    check_point(x, dim);
    if (n == 1) return Matrix::Zero(dim, dim);
    std::vector<Vector> grads(n);
    Vector mean = Vector::Zero(dim);
    for (int i = 0; i < n; ++i) {
        grads[i] = sample_gradient(i, x);
        mean += grads[i];
    }
    mean /= n;
    Matrix sigma = Matrix::Zero(dim, dim);
    for (int i = 0; i < n; ++i) {
        Vector d = mean - grads[i];
        sigma.noalias() += d * d.transpose();
    }
    sigma /= n;
    return 0.5 * (sigma + sigma.transpose());
}

Matrix FiniteSumObjective::hessian(const Vector& x) const {
    check_point(x, dim);
    if (analytic_hessian) {
        Matrix h = analytic_hessian(x);
        return 0.5 * (h + h.transpose());
    }
    if (!sample_gradient)
        throw std::runtime_error("objective '" + name +
                                 "' provides neither analytic nor numeric Hessian");
    Matrix h(dim, dim);
    Vector xp = x, xm = x;
    for (int j = 0; j < dim; ++j) {
        double step = std::max(1e-5, 1e-7 * std::abs(x[j]));
        xp[j] = x[j] + step;
        xm[j] = x[j] - step;
        h.col(j) = (full_gradient(xp) - full_gradient(xm)) / (2.0 * step);
        xp[j] = x[j];
        xm[j] = x[j];
    }
    return 0.5 * (h + h.transpose());
}

FiniteSumObjective make_quadratic1d() {
    FiniteSumObjective obj;
    obj.name = "quadratic1d";
    obj.n = 2;
    obj.dim = 1;
    // gamma = +1 for sample 0, -1 for sample 1
    obj.sample_value = [](int i, const Vector& x) {
        double gamma = i == 0 ? 1.0 : -1.0;
        double d = x[0] - gamma;
        return d * d - 1.0;
    };
    obj.sample_gradient = [](int i, const Vector& x) {
        double gamma = i == 0 ? 1.0 : -1.0;
        Vector g(1);
        g[0] = 2.0 * (x[0] - gamma);
        return g;
    };
    obj.analytic_hessian = [](const Vector&) {
        Matrix h(1, 1);
        h(0, 0) = 2.0;
        return h;
    };
    DiagQuadraticInfo info;
    info.a = Vector::Constant(1, 2.0);
    info.b = Vector::Zero(1);
    info.sigma = Vector::Constant(1, 4.0);
    obj.diag_quadratic = info;
    return obj;
}

FiniteSumObjective make_eggcarton(double delta, double epsilon) {
    if (epsilon == 0.0) throw std::invalid_argument("eggcarton requires epsilon != 0");
    FiniteSumObjective obj;
    obj.name = "eggcarton";
    obj.n = 3;
    obj.dim = 2;
    obj.sample_value = [delta, epsilon](int i, const Vector& x) {
        switch (i) {
            case 0: return x[0] * x[0];
            case 1: return x[1] * x[1];
            default: return delta * std::cos(x[0] / epsilon) * std::cos(x[1] / epsilon);
        }
    };
    obj.sample_gradient = [delta, epsilon](int i, const Vector& x) {
        Vector g = Vector::Zero(2);
        switch (i) {
            case 0:
                g[0] = 2.0 * x[0];
                break;
            case 1:
                g[1] = 2.0 * x[1];
                break;
            default:
                g[0] = -(delta / epsilon) * std::sin(x[0] / epsilon) * std::cos(x[1] / epsilon);
                g[1] = -(delta / epsilon) * std::cos(x[0] / epsilon) * std::sin(x[1] / epsilon);
        }
        return g;
    };
    obj.analytic_hessian = [delta, epsilon](const Vector& x) {
        double c1 = std::cos(x[0] / epsilon), c2 = std::cos(x[1] / epsilon);
        double s1 = std::sin(x[0] / epsilon), s2 = std::sin(x[1] / epsilon);
        double w = delta / (epsilon * epsilon);
        Matrix h(2, 2);
        h(0, 0) = (2.0 - w * c1 * c2) / 3.0;
        h(1, 1) = (2.0 - w * c1 * c2) / 3.0;
        h(0, 1) = w * s1 * s2 / 3.0;
        h(1, 0) = h(0, 1);
        return h;
    };
    return obj;
}

WeakErrorFamily make_weak_error_family(WeakFamily kind) {
    WeakErrorFamily fam;
    fam.kind = kind;
    FiniteSumObjective& obj = fam.objective;
    obj.n = 2;
    obj.dim = 1;
    if (kind == WeakFamily::convex) {
        obj.name = "weak-convex";
        obj.sample_value = [](int i, const Vector& x) {
            double gamma = i == 0 ? 1.0 : -1.0;
            double d = x[0] - gamma;
            return d * d;
        };
        obj.sample_gradient = [](int i, const Vector& x) {
            double gamma = i == 0 ? 1.0 : -1.0;
            Vector g(1);
            g[0] = 2.0 * (x[0] - gamma);
            return g;
        };
        DiagQuadraticInfo info;
        info.a = Vector::Constant(1, 2.0);
        info.b = Vector::Zero(1);
        info.sigma = Vector::Constant(1, 4.0);
        obj.diag_quadratic = info;
        fam.default_g = {0.0, 1.0, 1.0, 1.0};  // x + x^2 + x^3
    } else {
        obj.name = "weak-nonconvex";
        obj.sample_value = [](int i, const Vector& x) {
            double gamma = i == 0 ? 1.0 : -1.0;
            double d = x[0] - gamma;
            return d * d + gamma * x[0] * x[0] * x[0];
        };
        obj.sample_gradient = [](int i, const Vector& x) {
            double gamma = i == 0 ? 1.0 : -1.0;
            Vector g(1);
            g[0] = 2.0 * (x[0] - gamma) + 3.0 * gamma * x[0] * x[0];
            return g;
        };
        fam.default_g = {0.0, 1.0};  // x
    }
    obj.analytic_hessian = [kind](const Vector& x) {
        Matrix h(1, 1);
        // cubic terms cancel in f, so f = x^2 + 1 for both families
        h(0, 0) = 2.0;
        (void)x;
        (void)kind;
        return h;
    };
    return fam;
}

FiniteSumObjective make_diag_quadratic(const Vector& a, const Vector& b,
                                       const Vector& sigma) {
    const int d = static_cast<int>(a.size());
    if (b.size() != d || sigma.size() != d)
        throw std::invalid_argument("diag_quadratic parameter sizes disagree");
    if ((sigma.array() < 0.0).any())
        throw std::invalid_argument("diag_quadratic requires sigma >= 0");

    // Noise amplitude per pair: sample 2j+s perturbs only dimension j so the
    // per-draw covariance comes out exactly diag(sigma).
    Vector amp(d);
    for (int j = 0; j < d; ++j) amp[j] = std::sqrt(d * sigma[j]);

    auto quad = [a, b](const Vector& x) {
        double s = 0.0;
        for (int j = 0; j < a.size(); ++j) {
            double dj = x[j] - b[j];
            s += 0.5 * a[j] * dj * dj;
        }
        return s;
    };

    FiniteSumObjective obj;
    obj.name = "diag-quadratic";
    obj.n = 2 * d;
    obj.dim = d;
    obj.sample_value = [quad, amp, b](int i, const Vector& x) {
        int j = i / 2;
        double sign = (i % 2 == 0) ? 1.0 : -1.0;
        return quad(x) + sign * amp[j] * (x[j] - b[j]);
    };
    obj.sample_gradient = [a, b, amp](int i, const Vector& x) {
        int j = i / 2;
        double sign = (i % 2 == 0) ? 1.0 : -1.0;
        Vector g = (a.array() * (x - b).array()).matrix();
        g[j] += sign * amp[j];
        return g;
    };
    obj.analytic_hessian = [a](const Vector&) { return Matrix(a.asDiagonal()); };
    DiagQuadraticInfo info;
    info.a = a;
    info.b = b;
    info.sigma = sigma;
    obj.diag_quadratic = info;
    return obj;
}

}  // namespace smelab
