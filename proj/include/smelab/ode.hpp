#pragma once

#include <functional>
#include <vector>

namespace smelab {

// One classical RK4 step for any state supporting scaled addition.
// Works for double as well as Eigen types.
template <typename State, typename Rhs>
State rk4_step(const Rhs& f, const State& y, double t, double h) {
    State k1 = f(t, y);
    State k2 = f(t + 0.5 * h, State(y + 0.5 * h * k1));
    State k3 = f(t + 0.5 * h, State(y + 0.5 * h * k2));
    State k4 = f(t + h, State(y + h * k3));
    return State(y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

// Integrates y' = f(t, y) on [0, T] with `steps` uniform RK4 steps,
// recording every grid point including t = 0.
template <typename State, typename Rhs>
std::vector<State> rk4_integrate(const Rhs& f, State y0, double T, long steps) {
    std::vector<State> path;
    path.reserve(steps + 1);
    path.push_back(y0);
    const double h = T / steps;
    State y = y0;
    for (long k = 0; k < steps; ++k) {
        y = rk4_step(f, y, k * h, h);
        path.push_back(y);
    }
    return path;
}

}  // namespace smelab
