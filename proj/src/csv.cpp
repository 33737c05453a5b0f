#include "smelab/csv.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "smelab/adaptive.hpp"

namespace smelab {

namespace {

long step_from_time(double t, double dt) {
    return dt > 0.0 ? std::lround(t / dt) : 0;
}

void append_upper_triangle(std::vector<double>& row, const Matrix& m) {
    for (long i = 0; i < m.rows(); ++i)
        for (long j = i; j < m.cols(); ++j) row.push_back(m(i, j));
}

std::vector<std::string> upper_triangle_names(const std::string& prefix, long d) {
    std::vector<std::string> names;
    for (long i = 0; i < d; ++i)
        for (long j = i; j < d; ++j)
            names.push_back(prefix + "_" + std::to_string(i) + "_" + std::to_string(j));
    return names;
}

}  // namespace

std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

void CsvWriter::header(const std::vector<std::string>& names) {
    columns_ = names.size();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out_ << ',';
        out_ << names[i];
    }
    out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != columns_)
        throw std::invalid_argument("CSV row width does not match the header");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out_ << ',';
        out_ << format_double(values[i]);
    }
    out_ << '\n';
}

void CsvWriter::text_row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_)
        throw std::invalid_argument("CSV row width does not match the header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

void write_trajectory(std::ostream& out, const Trajectory& traj, double dt) {
    const long d = traj.states.empty() ? 0 : traj.states.front().size();
    CsvWriter csv(out);
    std::vector<std::string> names = {"step", "t"};
    for (long i = 0; i < d; ++i) names.push_back("x_" + std::to_string(i));
    if (traj.has_velocities())
        for (long i = 0; i < d; ++i) names.push_back("v_" + std::to_string(i));
    if (!traj.objective_values.empty()) names.push_back("f");
    csv.header(names);

    for (std::size_t k = 0; k < traj.size(); ++k) {
        std::vector<double> row = {static_cast<double>(step_from_time(traj.times[k], dt)),
                                   traj.times[k]};
        for (long i = 0; i < d; ++i) row.push_back(traj.states[k](i));
        if (traj.has_velocities())
            for (long i = 0; i < d; ++i) row.push_back(traj.velocities[k](i));
        if (!traj.objective_values.empty()) row.push_back(traj.objective_values[k]);
        csv.row(row);
    }
}

void write_moments(std::ostream& out, const EnsembleMoments& moments, double dt) {
    const long d = moments.mean.empty() ? 0 : moments.mean.front().size();
    CsvWriter csv(out);
    std::vector<std::string> names = {"step", "t"};
    for (long i = 0; i < d; ++i) names.push_back("mean_" + std::to_string(i));
    if (moments.has_covariance())
        for (const auto& name : upper_triangle_names("cov", d)) names.push_back(name);
    csv.header(names);

    for (std::size_t k = 0; k < moments.size(); ++k) {
        std::vector<double> row = {
            static_cast<double>(step_from_time(moments.times[k], dt)), moments.times[k]};
        for (long i = 0; i < d; ++i) row.push_back(moments.mean[k](i));
        if (moments.has_covariance()) append_upper_triangle(row, moments.covariance[k]);
        csv.row(row);
    }
}

void write_asymptotic_path(std::ostream& out, const AsymptoticPath& path) {
    const long d = path.mean_path.empty() ? 0 : path.mean_path.front().size();
    CsvWriter csv(out);
    std::vector<std::string> names = {"t"};
    for (long i = 0; i < d; ++i) names.push_back("x0_" + std::to_string(i));
    for (const auto& name : upper_triangle_names("S", d)) names.push_back(name);
    csv.header(names);

    for (std::size_t k = 0; k < path.times.size(); ++k) {
        std::vector<double> row = {path.times[k]};
        for (long i = 0; i < d; ++i) row.push_back(path.mean_path[k](i));
        append_upper_triangle(row, path.S_path[k]);
        csv.row(row);
    }
}

void write_scalar_moment_path(std::ostream& out, const ScalarMomentPath& path,
                              const std::string& control_name) {
    CsvWriter csv(out);
    csv.header({"t", "m", control_name});
    for (std::size_t k = 0; k < path.size(); ++k)
        csv.row({path.times[k], path.values[k], path.controls[k]});
}

void write_momentum_moment_path(std::ostream& out, const MomentumMomentPath& path) {
    CsvWriter csv(out);
    csv.header({"t", "Ef", "Ev2", "Evg", "mu"});
    for (std::size_t k = 0; k < path.size(); ++k)
        csv.row({path.times[k], path.states[k].Ef, path.states[k].Ev2,
                 path.states[k].Evg, path.controls[k]});
}

void write_weak_error_report(std::ostream& out, const WeakErrorReport& report) {
    CsvWriter csv(out);
    csv.header({"eta", "order", "e_w", "std_error"});
    for (const auto& point : report.order1)
        csv.row({point.eta, static_cast<double>(point.order), point.value,
                 point.std_error});
    for (const auto& point : report.order2)
        csv.row({point.eta, static_cast<double>(point.order), point.value,
                 point.std_error});
}

void write_train_log(std::ostream& out, const TrainResult& result) {
    CsvWriter csv(out);
    csv.header({"step", "loss", "mean_u", "mean_mu", "mean_beta"});
    for (const auto& row : result.log)
        csv.row({static_cast<double>(row.step), row.loss, row.mean_u, row.mean_mu,
                 row.mean_beta});
}

}  // namespace smelab
