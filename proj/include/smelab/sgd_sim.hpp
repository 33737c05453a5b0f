#pragma once

#include <cstdint>
#include <functional>

#include "smelab/objectives.hpp"
#include "smelab/types.hpp"

namespace smelab {

enum class Sampling { iid, epoch_shuffle };
enum class ExecPolicy { serial, parallel };

// Configuration of one discrete simulation run. `replica` selects the RNG
// stream (seed, replica) so ensembles can fan out deterministically.
struct SGDConfig {
    double eta = 0.0;
    long steps = 0;
    int batch_size = 1;
    Vector x0;
    std::uint64_t seed = 0;
    int replica = 0;
    Sampling sampling = Sampling::iid;
    long record_stride = 1;         // state recorded at k = 0, stride, ..., and at the final step
    bool record_objective = false;  // full f(x_k) at recorded steps (extra cost)
    double divergence_threshold = 1e10;
};

// x_{k+1} = x_k - eta * gbar_k with gbar_k the mean gradient over batch_size
// indices drawn from the replica's stream.
Trajectory run_sgd(const FiniteSumObjective& obj, const SGDConfig& cfg);

// v_{k+1} = mu_k v_k - eta * gbar_k; x_{k+1} = x_k + v_{k+1}; v_0 = 0.
// mu_schedule maps the step index k to mu_k in [0, 1].
Trajectory run_msgd(const FiniteSumObjective& obj, const SGDConfig& cfg,
                    const std::function<double(long)>& mu_schedule);

// x_{k+1} = x_k - eta * u_k * gbar_k with u_k clipped to [0, 1].
Trajectory run_lr_adjusted(const FiniteSumObjective& obj, const SGDConfig& cfg,
                           const std::function<double(long)>& u_schedule);

// Sample mean and covariance (1/(R-1) normalization) across replicas of any
// trajectory-producing runner. All replicas must share the recording grid.
// Partial sums are accumulated per fixed-size replica block and combined in
// block order, so serial and parallel policies produce bit-identical output.
// A diverging replica aborts the ensemble; the error of the lowest replica
// index is propagated.
EnsembleMoments ensemble_moments(const std::function<Trajectory(int)>& runner,
                                 int replicas,
                                 ExecPolicy policy = ExecPolicy::parallel);

// Exact E x_k, E x_k^2, E x_k^3 per dimension for diag-quadratic objectives
// (affine sample gradients, symmetric state-independent noise), by iterating
// the closed linear recursions of the SGD update.
struct ExactMoments {
    Vector m1;  // E x_k
    Vector m2;  // E x_k^2
    Vector m3;  // E x_k^3
};

ExactMoments exact_quadratic_moments(const FiniteSumObjective& obj, double eta,
                                     const Vector& x0, long k, int batch_size = 1);

}  // namespace smelab
