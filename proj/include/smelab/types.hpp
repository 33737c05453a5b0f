#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace smelab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr const char* kVersion = "smelab 0.1.0";

// Thrown when an iterate leaves the admissible region (non-finite or beyond
// the divergence threshold). Carries enough context to report which replica
// blew up at which step instead of crashing a whole ensemble.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(long step, int replica, double magnitude)
        : std::runtime_error("iterate diverged at step " + std::to_string(step) +
                             " (replica " + std::to_string(replica) +
                             ", |x| = " + std::to_string(magnitude) + ")"),
          step_(step), replica_(replica), magnitude_(magnitude) {}

    long step() const { return step_; }
    int replica() const { return replica_; }
    double magnitude() const { return magnitude_; }

private:
    long step_;
    int replica_;
    double magnitude_;
};

// A recorded path of a discrete or SDE simulation. `times` holds t = k*eta
// for SGD runs and t = k*dt for SDE integrations. `velocities` is non-empty
// only for momentum runs; `objective_values` only when recording was
// requested (it costs a full objective evaluation per recorded step).
struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<Vector> velocities;
    std::vector<double> objective_values;

    std::size_t size() const { return states.size(); }
    bool has_velocities() const { return !velocities.empty(); }
};

// Per-recorded-step ensemble statistics over independent replicas.
// `covariance` is empty when replicas < 2 (sample covariance undefined).
struct EnsembleMoments {
    std::vector<double> times;
    std::vector<Vector> mean;
    std::vector<Matrix> covariance;
    int replicas = 0;

    std::size_t size() const { return mean.size(); }
    bool has_covariance() const { return !covariance.empty(); }
};

// Gaussian marginal N(mean, covariance) at a given time.
struct GaussianSummary {
    Vector mean;
    Matrix covariance;
    double time = 0.0;
};

}  // namespace smelab
