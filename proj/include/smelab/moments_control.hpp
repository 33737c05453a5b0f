#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "smelab/types.hpp"

namespace smelab {

// Scalar prototype f(x) = 1/2 a (x-b)^2 with constant gradient-noise
// variance Sigma, optimized with learning rate eta. All control-theoretic
// formulas below are expressed in these four numbers.
struct QuadraticModel {
    double a = 0.0;
    double b = 0.0;
    double Sigma = 0.0;
    double eta = 0.0;
};

// Moment vector of the momentum SME: M = (E f(X), E V^2, E[V f'(X)]).
struct MomentStateM {
    double Ef = 0.0;
    double Ev2 = 0.0;
    double Evg = 0.0;
};

// Scalar moment path with the control value applied at each grid time.
struct ScalarMomentPath {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> controls;

    std::size_t size() const { return times.size(); }
    double final_value() const { return values.empty() ? 0.0 : values.back(); }
};

struct MomentumMomentPath {
    std::vector<double> times;
    std::vector<MomentStateM> states;
    std::vector<double> controls;

    std::size_t size() const { return times.size(); }
};

// dm/dt = -2 a u m + 1/2 a eta Sigma u^2 for m(t) = E f(X_t) under the
// learning-rate-adjusted SME.
double lr_moment_rate(const QuadraticModel& model, double m, double u);

// Fixed point of the rate at constant u: eta Sigma u / 4.
double lr_steady_state(const QuadraticModel& model, double u);

// Closed form at constant u: m_inf(u) + (m0 - m_inf(u)) e^{-2 a u t}.
double lr_constant_u_moment(const QuadraticModel& model, double m0, double u,
                            double t);

// RK4 path of the moment ODE under a time-indexed schedule u(t) in [0,1].
ScalarMomentPath integrate_lr_moment(const QuadraticModel& model,
                                     const std::function<double(double)>& u_schedule,
                                     double m0, double T, double h);

// Closed-loop RK4 path with u_t = optimal_u_feedback(m_t, model).
ScalarMomentPath integrate_lr_feedback(const QuadraticModel& model, double m0,
                                       double T, double h);

// u* = 1 for a <= 0; otherwise clamp(2m/(eta Sigma), 0, 1). Degenerate
// cases: m <= 0 with a > 0 means "at the optimum", u* = 0; vanishing noise
// (eta Sigma < 1e-30) means full speed, u* = 1.
double optimal_u_feedback(double m, const QuadraticModel& model);

// Switch time (1/(2a)) log(4 m0/(eta Sigma) - 1) at which the closed-loop
// control leaves u = 1; 0 when the start is already in the fluctuation
// regime, +infinity when there is no noise to anneal against (or a <= 0).
double lr_transition_time(const QuadraticModel& model, double m0);

// Open-loop realization of the feedback law: u = 1 for t <= t*, then
// 1/(1 + a (t - t*)). When 4 m0/(eta Sigma) <= 1 (or the model is
// degenerate) there is no descent phase and the feedback value at m0 is
// returned for all t.
double lr_annealing_schedule(double t, const QuadraticModel& model, double m0);

// Crossover time of the solvable quadratic SME where |mean| equals the
// standard deviation: t* = (1/(4(1+eta))) log(1 + ((eta+1)/eta) x0^2).
double transition_time_quadratic(double eta, double x0);

// Linear system M' = A(mu) M + B driving the momentum moments.
struct MomentumSystem {
    Matrix A;  // 3x3
    Vector B;  // 3
};
MomentumSystem momentum_system(double mu, const QuadraticModel& model);

MomentumMomentPath integrate_momentum_moments(
    const QuadraticModel& model, const std::function<double(double)>& mu_schedule,
    const MomentStateM& M0, double T, double h);

// lambda(mu) = -(1/eta) [(1-mu) - sqrt((1-mu)^2 - 4 a eta)] with the
// principal complex square root once the discriminant turns negative.
std::complex<double> dominant_eigenvalue(double mu, const QuadraticModel& model);

// Momentum value maximizing the decay rate |Re lambda|: max(1 - 2 sqrt(a eta), 0).
double mu_opt(const QuadraticModel& model);

// M_inf = (eta Sigma/(4(1-mu)), eta^2 Sigma/(2(1-mu)), 0); mu = 1 has no
// steady state and is rejected.
MomentStateM momentum_steady_state(double mu, const QuadraticModel& model);

// Averaged scalar dynamics m' = Re(lambda(mu_t)) (m - m_inf(mu_t)).
ScalarMomentPath integrate_averaged(const QuadraticModel& model,
                                    const std::function<double(double)>& mu_schedule,
                                    double m0, double T, double h);

// mu* = 1 for a <= 0; otherwise min(mu_opt, max(0, 1 - eta Sigma/(4m))),
// with m <= 0 mapped to 0 and vanishing noise mapped to mu_opt.
double optimal_mu_feedback(double m, const QuadraticModel& model);

}  // namespace smelab
