#include "smelab/sgd_sim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "smelab/rng.hpp"

#ifdef SMELAB_HAS_OPENMP
#include <omp.h>
#endif

namespace smelab {

namespace {

// Replicas are accumulated in fixed blocks so the reduction order (and hence
// the floating-point result) never depends on the thread count.
constexpr int kReplicaBlock = 32;

void validate(const FiniteSumObjective& obj, const SGDConfig& cfg) {
    if (!(cfg.eta > 0.0)) throw std::invalid_argument("eta must be positive");
    if (cfg.steps < 0) throw std::invalid_argument("steps must be >= 0");
    if (cfg.batch_size < 1 || cfg.batch_size > obj.n)
        throw std::invalid_argument("batch_size must be in [1, n]");
    if (cfg.x0.size() != obj.dim)
        throw std::invalid_argument("x0 dimension does not match objective");
    if (cfg.record_stride < 1) throw std::invalid_argument("record_stride must be >= 1");
}

class BatchSampler {
public:
    BatchSampler(int n, Sampling mode, RngStream& stream)
        : n_(n), mode_(mode), stream_(stream) {
        if (mode_ == Sampling::epoch_shuffle) {
            order_.resize(n_);
            std::iota(order_.begin(), order_.end(), 0);
            cursor_ = n_;  // force a shuffle on first use
        }
    }

    int next() {
        if (mode_ == Sampling::iid) return static_cast<int>(stream_.uniform_int(n_));
        if (cursor_ >= n_) {
            for (int i = n_ - 1; i > 0; --i)
                std::swap(order_[i], order_[stream_.uniform_int(i + 1)]);
            cursor_ = 0;
        }
        return order_[cursor_++];
    }

private:
    int n_;
    Sampling mode_;
    RngStream& stream_;
    std::vector<int> order_;
    int cursor_ = 0;
};

void check_divergence(const Vector& x, long step, const SGDConfig& cfg) {
    double mag = x.cwiseAbs().maxCoeff();
    if (!std::isfinite(mag) || mag > cfg.divergence_threshold)
        throw DivergenceError(step, cfg.replica, mag);
}

bool should_record(long k, const SGDConfig& cfg) {
    return k % cfg.record_stride == 0 || k == cfg.steps;
}

// Single driver for the three discrete variants; `mu` and `u` may be null.
Trajectory run_discrete(const FiniteSumObjective& obj, const SGDConfig& cfg,
                        const std::function<double(long)>* mu,
                        const std::function<double(long)>* u) {
    validate(obj, cfg);
    RngStream stream = make_stream(cfg.seed, static_cast<std::uint64_t>(cfg.replica));
    BatchSampler sampler(obj.n, cfg.sampling, stream);

    Trajectory traj;
    Vector x = cfg.x0;
    Vector v = Vector::Zero(obj.dim);
    auto record = [&](long k) {
        traj.times.push_back(k * cfg.eta);
        traj.states.push_back(x);
        if (mu) traj.velocities.push_back(v);
        if (cfg.record_objective) traj.objective_values.push_back(obj.value(x));
    };
    record(0);

    Vector gbar(obj.dim);
    for (long k = 0; k < cfg.steps; ++k) {
        gbar.setZero();
        for (int m = 0; m < cfg.batch_size; ++m)
            gbar += obj.sample_gradient(sampler.next(), x);
        gbar /= cfg.batch_size;

        if (mu) {
            v = (*mu)(k)*v - cfg.eta * gbar;
            x = x + v;
        } else if (u) {
            double uk = std::clamp((*u)(k), 0.0, 1.0);
            x = x - cfg.eta * uk * gbar;
        } else {
            x = x - cfg.eta * gbar;
        }
        check_divergence(x, k + 1, cfg);
        if (should_record(k + 1, cfg)) record(k + 1);
    }
    return traj;
}

}  // namespace

Trajectory run_sgd(const FiniteSumObjective& obj, const SGDConfig& cfg) {
    return run_discrete(obj, cfg, nullptr, nullptr);
}

Trajectory run_msgd(const FiniteSumObjective& obj, const SGDConfig& cfg,
                    const std::function<double(long)>& mu_schedule) {
    return run_discrete(obj, cfg, &mu_schedule, nullptr);
}

Trajectory run_lr_adjusted(const FiniteSumObjective& obj, const SGDConfig& cfg,
                           const std::function<double(long)>& u_schedule) {
    return run_discrete(obj, cfg, nullptr, &u_schedule);
}

EnsembleMoments ensemble_moments(const std::function<Trajectory(int)>& runner,
                                 int replicas, ExecPolicy policy) {
    if (replicas < 1) throw std::invalid_argument("replicas must be >= 1");

    const int nblocks = (replicas + kReplicaBlock - 1) / kReplicaBlock;
    struct BlockSums {
        std::vector<Vector> sx;
        std::vector<Matrix> sxx;
        std::vector<double> times;
        bool initialized = false;
    };
    std::vector<BlockSums> blocks(nblocks);
    std::vector<std::exception_ptr> failures(nblocks);
    std::vector<int> failed_replica(nblocks, -1);

    auto run_block = [&](int bi) {
        const int lo = bi * kReplicaBlock;
        const int hi = std::min(replicas, lo + kReplicaBlock);
        BlockSums& bs = blocks[bi];
        try {
            for (int r = lo; r < hi; ++r) {
                Trajectory traj = runner(r);
                if (!bs.initialized) {
                    bs.times = traj.times;
                    bs.sx.assign(traj.size(), Vector::Zero(traj.states[0].size()));
                    bs.sxx.assign(traj.size(),
                                  Matrix::Zero(traj.states[0].size(), traj.states[0].size()));
                    bs.initialized = true;
                } else if (traj.size() != bs.sx.size()) {
                    throw std::runtime_error("replicas disagree on recording grid");
                }
                for (std::size_t k = 0; k < traj.size(); ++k) {
                    bs.sx[k] += traj.states[k];
                    bs.sxx[k].noalias() += traj.states[k] * traj.states[k].transpose();
                }
            }
        } catch (...) {
            failures[bi] = std::current_exception();
            failed_replica[bi] = lo;
        }
    };

    if (policy == ExecPolicy::parallel) {
#ifdef SMELAB_HAS_OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
        for (int bi = 0; bi < nblocks; ++bi) run_block(bi);
    } else {
        for (int bi = 0; bi < nblocks; ++bi) run_block(bi);
    }

    for (int bi = 0; bi < nblocks; ++bi)
        if (failures[bi]) std::rethrow_exception(failures[bi]);

    const std::size_t T = blocks[0].sx.size();
    const long dim = blocks[0].sx[0].size();
    std::vector<Vector> sum_x(T, Vector::Zero(dim));
    std::vector<Matrix> sum_xx(T, Matrix::Zero(dim, dim));
    for (int bi = 0; bi < nblocks; ++bi) {
        if (blocks[bi].sx.size() != T)
            throw std::runtime_error("replicas disagree on recording grid");
        for (std::size_t k = 0; k < T; ++k) {
            sum_x[k] += blocks[bi].sx[k];
            sum_xx[k] += blocks[bi].sxx[k];
        }
    }

    EnsembleMoments out;
    out.replicas = replicas;
    out.times = blocks[0].times;
    out.mean.resize(T);
    for (std::size_t k = 0; k < T; ++k) out.mean[k] = sum_x[k] / replicas;
    if (replicas >= 2) {
        out.covariance.resize(T);
        for (std::size_t k = 0; k < T; ++k) {
            Matrix c = (sum_xx[k] - replicas * out.mean[k] * out.mean[k].transpose()) /
                       (replicas - 1);
            out.covariance[k] = 0.5 * (c + c.transpose());
        }
    }
    return out;
}

namespace {

ExactMoments exact_moments_impl(const DiagQuadraticInfo& info, double eta,
                                const Vector& x0, long k, int batch_size) {
    const int d = static_cast<int>(info.a.size());
    ExactMoments out{Vector(d), Vector(d), Vector(d)};
    for (int j = 0; j < d; ++j) {
        const double c = 1.0 - eta * info.a[j];
        const double nv = info.sigma[j] / batch_size;  // per-step noise variance
        // centered moments of y = x - b
        double y1 = x0[j] - info.b[j];
        double y2 = y1 * y1;
        double y3 = y1 * y1 * y1;
        for (long s = 0; s < k; ++s) {
            double n1 = c * y1;
            double n2 = c * c * y2 + eta * eta * nv;
            double n3 = c * c * c * y3 + 3.0 * c * y1 * eta * eta * nv;
            y1 = n1;
            y2 = n2;
            y3 = n3;
        }
        const double b = info.b[j];
        out.m1[j] = y1 + b;
        out.m2[j] = y2 + 2.0 * b * y1 + b * b;
        out.m3[j] = y3 + 3.0 * b * y2 + 3.0 * b * b * y1 + b * b * b;
    }
    return out;
}

}  // namespace

ExactMoments exact_quadratic_moments(const FiniteSumObjective& obj, double eta,
                                     const Vector& x0, long k, int batch_size) {
    if (!obj.diag_quadratic)
        throw std::invalid_argument(
            "exact_quadratic_moments requires an affine-gradient (diag-quadratic) objective");
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    if (k < 0) throw std::invalid_argument("step count must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (x0.size() != obj.dim) throw std::invalid_argument("x0 dimension mismatch");
    return exact_moments_impl(*obj.diag_quadratic, eta, x0, k, batch_size);
}

}  // namespace smelab
