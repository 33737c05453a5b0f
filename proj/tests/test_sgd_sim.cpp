#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "smelab/sgd_sim.hpp"

using namespace smelab;

namespace {

Vector vec1(double x) {
    Vector v(1);
    v(0) = x;
    return v;
}

SGDConfig quadratic_config(double eta, long steps, double x0, std::uint64_t seed) {
    SGDConfig cfg;
    cfg.eta = eta;
    cfg.steps = steps;
    cfg.x0 = vec1(x0);
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("noiseless SGD on a quadratic contracts by (1 - eta a) per step") {
    // sigma = 0 removes all randomness, leaving x_k = 0.8^k x_0
    const FiniteSumObjective obj =
        make_diag_quadratic(vec1(2.0), vec1(0.0), vec1(0.0));
    SGDConfig cfg = quadratic_config(0.1, 50, 1.0, 0);
    const Trajectory traj = run_sgd(obj, cfg);
    REQUIRE(traj.size() == 51);
    for (std::size_t k = 0; k < traj.size(); ++k)
        CHECK(traj.states[k](0) ==
              doctest::Approx(std::pow(0.8, static_cast<double>(k))).epsilon(1e-10));
}

TEST_CASE("msgd with mu = 0 reproduces sgd bit for bit") {
    const FiniteSumObjective obj = make_quadratic1d();
    SGDConfig cfg = quadratic_config(0.01, 200, 1.0, 42);
    const Trajectory plain = run_sgd(obj, cfg);
    const Trajectory momentum = run_msgd(obj, cfg, [](long) { return 0.0; });
    REQUIRE(plain.size() == momentum.size());
    for (std::size_t k = 0; k < plain.size(); ++k)
        CHECK(plain.states[k](0) == momentum.states[k](0));
    CHECK(momentum.has_velocities());
}

TEST_CASE("lr-adjusted with u = 1 reproduces sgd, u = 0 freezes the iterate") {
    const FiniteSumObjective obj = make_quadratic1d();
    SGDConfig cfg = quadratic_config(0.01, 100, 0.5, 7);
    const Trajectory plain = run_sgd(obj, cfg);
    const Trajectory full = run_lr_adjusted(obj, cfg, [](long) { return 1.0; });
    for (std::size_t k = 0; k < plain.size(); ++k)
        CHECK(plain.states[k](0) == full.states[k](0));

    const Trajectory frozen = run_lr_adjusted(obj, cfg, [](long) { return 0.0; });
    for (std::size_t k = 0; k < frozen.size(); ++k)
        CHECK(frozen.states[k](0) == 0.5);
}

TEST_CASE("identical seed and replica give identical paths, different replicas differ") {
    const FiniteSumObjective obj = make_quadratic1d();
    SGDConfig cfg = quadratic_config(0.05, 100, 1.0, 123);
    const Trajectory a = run_sgd(obj, cfg);
    const Trajectory b = run_sgd(obj, cfg);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a.states[k](0) == b.states[k](0));

    cfg.replica = 1;
    const Trajectory c = run_sgd(obj, cfg);
    bool any_difference = false;
    for (std::size_t k = 0; k < a.size(); ++k)
        if (a.states[k](0) != c.states[k](0)) any_difference = true;
    CHECK(any_difference);
}

TEST_CASE("mini-batching shrinks the one-step variance by the batch size") {
    // quadratic1d has n = 2 samples, so 2 is the largest admissible batch
    const FiniteSumObjective obj = make_quadratic1d();
    const int replicas = 4000;
    auto one_step_variance = [&](int batch_size) {
        const EnsembleMoments moments = ensemble_moments(
            [&](int replica) {
                SGDConfig cfg = quadratic_config(0.1, 1, 1.0, 5);
                cfg.batch_size = batch_size;
                cfg.replica = replica;
                return run_sgd(obj, cfg);
            },
            replicas);
        return moments.covariance[1](0, 0);
    };
    const double v1 = one_step_variance(1);
    const double v2 = one_step_variance(2);
    // Var x_1 = eta^2 Sigma / M; the ratio estimate carries ~2% noise
    CHECK(v1 / v2 == doctest::Approx(2.0).epsilon(0.1));
    CHECK(v1 == doctest::Approx(0.1 * 0.1 * 4.0).epsilon(0.1));

    SGDConfig oversized = quadratic_config(0.1, 1, 1.0, 5);
    oversized.batch_size = 3;
    CHECK_THROWS_AS(run_sgd(obj, oversized), std::invalid_argument);
}

TEST_CASE("ensemble mean tracks the exact moment recursion within 4 SE") {
    const FiniteSumObjective obj = make_quadratic1d();
    const double eta = 0.05;
    const int replicas = 10000;
    const EnsembleMoments moments = ensemble_moments(
        [&](int replica) {
            SGDConfig cfg = quadratic_config(eta, 100, 1.0, 2000);
            cfg.record_stride = 10;
            cfg.replica = replica;
            return run_sgd(obj, cfg);
        },
        replicas);
    for (std::size_t row = 1; row < moments.size(); ++row) {
        const long k = std::lround(moments.times[row] / eta);
        const ExactMoments exact = exact_quadratic_moments(obj, eta, vec1(1.0), k);
        const double se = std::sqrt(moments.covariance[row](0, 0) / replicas);
        CHECK(std::abs(moments.mean[row](0) - exact.m1(0)) < 4.0 * se);
    }
}

TEST_CASE("single-replica ensembles report no covariance") {
    const FiniteSumObjective obj = make_quadratic1d();
    const EnsembleMoments moments = ensemble_moments(
        [&](int replica) {
            SGDConfig cfg = quadratic_config(0.01, 10, 1.0, 3);
            cfg.replica = replica;
            return run_sgd(obj, cfg);
        },
        1);
    CHECK(moments.replicas == 1);
    CHECK_FALSE(moments.has_covariance());
    CHECK(moments.size() == 11);
}

TEST_CASE("deterministic dynamics produce zero ensemble covariance") {
    const FiniteSumObjective obj =
        make_diag_quadratic(vec1(2.0), vec1(0.0), vec1(0.0));
    const EnsembleMoments moments = ensemble_moments(
        [&](int replica) {
            SGDConfig cfg = quadratic_config(0.1, 20, 1.0, 9);
            cfg.replica = replica;
            return run_sgd(obj, cfg);
        },
        8);
    // raw-moment accumulation leaves rounding of order eps * |x|^2
    for (const Matrix& cov : moments.covariance) CHECK(std::abs(cov(0, 0)) < 1e-14);
}

TEST_CASE("long-run variance approaches eta/(1 - eta) on the quadratic") {
    const FiniteSumObjective obj = make_quadratic1d();
    const double eta = 5e-3;
    const int replicas = 2000;
    const EnsembleMoments moments = ensemble_moments(
        [&](int replica) {
            SGDConfig cfg = quadratic_config(eta, 2000, 1.0, 77);
            cfg.record_stride = 2000;
            cfg.replica = replica;
            return run_sgd(obj, cfg);
        },
        replicas);
    const double target = eta / (1.0 - eta);
    // sample variance carries sqrt(2/R) ~ 3% relative noise
    CHECK(moments.covariance.back()(0, 0) == doctest::Approx(target).epsilon(0.15));
}

TEST_CASE("serial and parallel ensemble execution are bit-identical") {
    const FiniteSumObjective obj = make_quadratic1d();
    auto runner = [&](int replica) {
        SGDConfig cfg = quadratic_config(0.02, 100, 1.0, 31);
        cfg.record_stride = 10;
        cfg.replica = replica;
        return run_sgd(obj, cfg);
    };
    const EnsembleMoments serial = ensemble_moments(runner, 333, ExecPolicy::serial);
    const EnsembleMoments parallel = ensemble_moments(runner, 333, ExecPolicy::parallel);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t k = 0; k < serial.size(); ++k) {
        CHECK(serial.mean[k](0) == parallel.mean[k](0));
        CHECK(serial.covariance[k](0, 0) == parallel.covariance[k](0, 0));
    }
}

TEST_CASE("divergence is reported with step and replica context") {
    const FiniteSumObjective obj = make_quadratic1d();
    SGDConfig cfg = quadratic_config(2.0, 1000, 1.0, 1);  // |1 - eta a| = 3 blows up
    CHECK_THROWS_AS(run_sgd(obj, cfg), DivergenceError);
    try {
        run_sgd(obj, cfg);
    } catch (const DivergenceError& err) {
        CHECK(err.replica() == 0);
        CHECK(err.step() > 0);
        CHECK(err.magnitude() > 1e10);
    }

    // the ensemble propagates the lowest diverging replica
    try {
        ensemble_moments(
            [&](int replica) {
                SGDConfig c = cfg;
                c.replica = replica;
                return run_sgd(obj, c);
            },
            16);
        CHECK(false);
    } catch (const DivergenceError& err) {
        CHECK(err.replica() == 0);
    }
}

TEST_CASE("exact moment recursion: first step and stationary second moment") {
    const FiniteSumObjective obj = make_quadratic1d();
    const double eta = 0.01;
    const ExactMoments one = exact_quadratic_moments(obj, eta, vec1(1.0), 1);
    CHECK(one.m1(0) == doctest::Approx(1.0 - 2.0 * eta).epsilon(1e-14));

    const ExactMoments steady = exact_quadratic_moments(obj, eta, vec1(1.0), 20000);
    CHECK(steady.m1(0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(steady.m2(0) == doctest::Approx(eta / (1.0 - eta)).epsilon(1e-10));

    // batching scales the stationary second moment like Sigma/M
    const ExactMoments batched = exact_quadratic_moments(obj, eta, vec1(1.0), 20000, 4);
    CHECK(batched.m2(0) == doctest::Approx(steady.m2(0) / 4.0).epsilon(1e-6));
}

TEST_CASE("epoch shuffling visits each sample once per epoch") {
    const FiniteSumObjective obj = make_quadratic1d();
    // with n = 2 the two-step update is (1 - 2 eta)^2 x + noise from both
    // samples in some order, so x_2 takes exactly two possible values
    const double eta = 0.1;
    std::set<double> observed;
    for (int replica = 0; replica < 12; ++replica) {
        SGDConfig cfg = quadratic_config(eta, 2, 1.0, 13);
        cfg.sampling = Sampling::epoch_shuffle;
        cfg.replica = replica;
        const Trajectory traj = run_sgd(obj, cfg);
        observed.insert(traj.states.back()(0));
    }
    const double c = 1.0 - 2.0 * eta;
    const double plus_first = (c * 1.0 + 2.0 * eta * 1.0) * c - 2.0 * eta;
    const double minus_first = (c * 1.0 - 2.0 * eta * 1.0) * c + 2.0 * eta;
    CHECK(observed.size() <= 2);
    for (double x : observed) {
        const bool matches = std::abs(x - plus_first) < 1e-12 ||
                             std::abs(x - minus_first) < 1e-12;
        CHECK(matches);
    }
}

TEST_CASE("recording stride keeps the final step") {
    const FiniteSumObjective obj = make_quadratic1d();
    SGDConfig cfg = quadratic_config(0.01, 103, 1.0, 5);
    cfg.record_stride = 10;
    const Trajectory traj = run_sgd(obj, cfg);
    CHECK(traj.times.front() == 0.0);
    CHECK(traj.times.back() == doctest::Approx(103 * 0.01));
    CHECK(traj.size() == 12);  // 0,10,...,100 plus the final 103
}
