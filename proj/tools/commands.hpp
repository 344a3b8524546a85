#pragma once

#include <iosfwd>

#include "run_config.hpp"

namespace onelap::app {

// Each command writes its files under config.out_dir and returns an exit
// code. Configuration problems are raised as ConfigError, file problems as
// IoError; run_command maps both to their codes.
int cmd_mesh(const RunConfig& config, std::ostream& log);
int cmd_solve(const RunConfig& config, std::ostream& log);
int cmd_continue(const RunConfig& config, std::ostream& log);
int cmd_certify(const RunConfig& config, std::ostream& log);

int run_command(const std::string& name, const RunConfig& config, std::ostream& log, std::ostream& err);

}  // namespace onelap::app
