#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smelab/config.hpp"
#include "smelab/objectives.hpp"

namespace smelab {

// Command-line overrides layered on top of a config file. A negative
// replica count and an empty output directory mean "keep the config value".
struct CliOverrides {
    bool has_seed = false;
    std::uint64_t seed = 0;
    long replicas = -1;
    std::string out_dir;
};

// Registry entries accepted by cmd_figure: fig1, fig2, fig4, sm-fig7.
const std::vector<std::string>& figure_names();

// Objectives resolvable from configs: quadratic1d, eggcarton, weak-convex,
// weak-nonconvex, diag-quadratic, synthetic-mlp. `params` supplies the
// objective's parameters (missing keys take documented defaults).
FiniteSumObjective objective_by_name(const std::string& name, const Json& params);

// All commands return a process exit code: 0 on success, 3 when a run
// diverged (artifacts are still written), and throw std::exception
// subclasses on config/usage errors (mapped to exit 1 by the CLI).
int cmd_figure(const std::string& name, const CliOverrides& overrides);
int cmd_simulate(const Json& config, const CliOverrides& overrides);
int cmd_train(const Json& config, const CliOverrides& overrides);
int cmd_sweep(const Json& config, const CliOverrides& overrides);

}  // namespace smelab
