#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace splitknock::cli {

using Args = std::vector<std::string>;

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumeric = 3;

// Each command takes its arguments without the program or command name and
// returns the process exit code: 0 on success, 2 on invalid input, 3 on a
// numerical failure.
int cmd_filter(const Args& args, std::ostream& out, std::ostream& err);
int cmd_simulate(const Args& args, std::ostream& out, std::ostream& err);
int cmd_cv_nu(const Args& args, std::ostream& out, std::ostream& err);
int cmd_copy_check(const Args& args, std::ostream& out, std::ostream& err);

// Dispatches on args[0] (filter, simulate, cv-nu, copy-check, --version).
int run(const Args& args, std::ostream& out, std::ostream& err);

// "LO:HI:STEP" in log10(nu) -> nu values 10^LO, 10^(LO+STEP), ..., up to HI.
std::vector<double> parse_nu_grid(std::string_view spec);

}  // namespace splitknock::cli
