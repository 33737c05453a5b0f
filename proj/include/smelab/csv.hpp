#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "smelab/asymptotics.hpp"
#include "smelab/moments_control.hpp"
#include "smelab/types.hpp"
#include "smelab/weak_error.hpp"

namespace smelab {

struct TrainResult;

// Shortest round-trip decimal rendering (printf %.17g); all CSV output
// funnels through this so identical runs produce identical bytes.
std::string format_double(double value);

// Minimal CSV emitter: a header row, then numeric rows.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void header(const std::vector<std::string>& names);
    void row(const std::vector<double>& values);
    // Mixed row for tables with label columns (e.g. optimizer names).
    void text_row(const std::vector<std::string>& cells);

private:
    std::ostream& out_;
    std::size_t columns_ = 0;
};

// step,t,x_0..x_{d-1}[,v_0..v_{d-1}][,f]. `dt` is the time per step used to
// recover the step index from the recorded times.
void write_trajectory(std::ostream& out, const Trajectory& traj, double dt);

// step,t,mean_0..mean_{d-1},cov_0_0.. (row-major upper triangle).
void write_moments(std::ostream& out, const EnsembleMoments& moments, double dt);

// t,x0_0..,S_0_0.. (row-major upper triangle of the scaled covariance).
void write_asymptotic_path(std::ostream& out, const AsymptoticPath& path);

// t,m,<control_name>.
void write_scalar_moment_path(std::ostream& out, const ScalarMomentPath& path,
                              const std::string& control_name);

// t,Ef,Ev2,Evg,mu.
void write_momentum_moment_path(std::ostream& out, const MomentumMomentPath& path);

// eta,order,e_w,std_error for both orders of a study.
void write_weak_error_report(std::ostream& out, const WeakErrorReport& report);

// step,loss,mean_u,mean_mu,mean_beta.
void write_train_log(std::ostream& out, const TrainResult& result);

}  // namespace smelab
