#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smelab/objectives.hpp"
#include "smelab/types.hpp"

namespace smelab {

// How the beta heuristic maps the raw noise ratio (g2_bar - g_bar^2)/g2_bar
// into [beta_min, beta_max]: clip it directly, or stretch it affinely.
enum class BetaRule { clip, affine };

// Per-dimension exponential moving averages feeding the on-the-fly
// quadratic regression. The first observation seeds the averages with the
// raw values (beta treated as 0 on step one).
struct EMAState {
    Vector g_bar;
    Vector g2_bar;
    Vector x_bar;
    Vector x2_bar;
    Vector xg_bar;
    Vector beta;
    long k = 0;  // observations absorbed
    double beta_min = 0.9;
    double beta_max = 0.999;
    BetaRule rule = BetaRule::clip;

    EMAState(int dim, double beta0 = 0.9);
};

// Per-dimension local quadratic fit: gradient model a (x - b) with
// gradient-noise variance Sigma (floored at 0). Degenerate fits (no x
// variance yet, or vanishing slope) report a = 0 so policies take their
// a <= 0 branch.
struct RegressionEstimate {
    Vector a;
    Vector b;
    Vector Sigma;
};

// Absorb one (x, gradient) observation with the current beta.
void ema_update(EMAState& state, const Vector& x, const Vector& g);

// Per-dimension beta from the noise ratio; g2_bar below 1e-30 maps to
// beta_min.
Vector beta_heuristic(const EMAState& state);

// Ordinary-least-squares slope/intercept plus noise variance from the
// stored averages. Requires at least one absorbed observation.
RegressionEstimate regress_quadratic(const EMAState& state);

// u* per dimension: 1 when a <= 0 or the noise eta*Sigma vanishes, else
// min(1, a (x_bar - b)^2 / (eta Sigma)).
Vector csgd_policy(const RegressionEstimate& est, const Vector& x_bar, double eta);

// mu* per dimension: 1 when a <= 0; else the smaller of the rate cap
// max(0, 1 - 2 sqrt(a eta)) and max(0, 1 - eta Sigma / (2a (x-b)^2)), with
// x = b mapping the second term to 0 and vanishing noise to the cap.
Vector cmsgd_policy(const RegressionEstimate& est, const Vector& x, double eta);

struct CsgdState {
    EMAState ema;
    Vector u;
    double eta;
    double divergence_threshold = 1e10;

    CsgdState(int dim, double eta, double u0 = 1.0, double beta0 = 0.9,
              BetaRule rule = BetaRule::clip);
};

struct CmsgdState {
    EMAState ema;
    Vector mu;
    Vector v;
    double eta;
    double divergence_threshold = 1e10;

    CmsgdState(int dim, double eta, double mu0 = 0.5, double beta0 = 0.9,
               BetaRule rule = BetaRule::clip);
};

// One cSGD step on gradient sample g at x. Per-dimension order: absorb the
// observation, regress, compute u*, blend u with the pre-heuristic beta,
// refresh beta, then move with the pre-update u: x' = x - eta u_k g.
// Divergent iterates abort.
Vector csgd_step(CsgdState& state, const Vector& x, const Vector& g);

// One cMSGD step: as above but blending mu, then v' = mu_k v - eta g and
// x' = x + v' with the pre-update mu.
Vector cmsgd_step(CmsgdState& state, const Vector& x, const Vector& g);

struct AdagradState {
    Vector G;
    double eps = 1e-8;

    explicit AdagradState(int dim) : G(Vector::Zero(dim)) {}
};

// G += g^2; x' = x - eta g / sqrt(G + eps), per dimension.
Vector adagrad_step(AdagradState& state, const Vector& x, const Vector& g,
                    double eta);

struct AdamState {
    Vector m;
    Vector v;
    long k = 0;  // completed steps; bias correction uses k+1
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(int dim)
        : m(Vector::Zero(dim)), v(Vector::Zero(dim)) {}
};

// Bias-corrected Adam update x' = x - eta m_hat / (sqrt(v_hat) + eps).
Vector adam_step(AdamState& state, const Vector& x, const Vector& g, double eta);

// Annealed momentum mu_k = min(1 - 1/(2 (floor(k/250) + 1)), mu_max), the
// 2^{-1-log2(floor(k/250)+1)} schedule written without the logarithm.
double msgd_annealed_mu(long k, double mu_max);

// Names accepted by train(): sgd, msgd, msgd-a, csgd, cmsgd, adagrad, adam.
const std::vector<std::string>& optimizer_names();

struct TrainOptions {
    std::string optimizer = "sgd";
    double eta = 0.1;
    long steps = 1000;
    int batch_size = 1;
    std::uint64_t seed = 0;
    int replica = 0;
    double mu = 0.9;       // fixed-momentum msgd
    double mu_max = 0.99;  // msgd-a cap
    double u0 = 1.0;       // csgd initial adjustment
    double mu0 = 0.5;      // cmsgd initial momentum
    double beta0 = 0.9;
    BetaRule beta_rule = BetaRule::clip;
    long log_stride = 1;
    double divergence_threshold = 1e10;
    Vector x0;  // empty selects the objective's initial point
};

struct TrainLogRow {
    long step = 0;
    double loss = 0.0;
    double mean_u = 1.0;
    double mean_mu = 0.0;
    double mean_beta = 0.0;
};

struct TrainResult {
    bool diverged = false;
    long divergence_step = -1;
    double initial_loss = 0.0;
    double final_loss = 0.0;  // at the last finite iterate
    Vector final_x;
    std::vector<TrainLogRow> log;
};

// Runs a named optimizer with i.i.d. mini-batch sampling from the replica's
// RNG stream, logging loss and control diagnostics every log_stride steps.
// Divergence is recorded in the result, never thrown.
TrainResult train(const FiniteSumObjective& obj, const TrainOptions& options);

}  // namespace smelab
