#pragma once

// The policy-forge subcommands. Each returns a process exit code and never
// throws; diagnostics go to `err`, one-line summaries to `out`.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "policy_forge/robustness.hpp"

namespace policy_forge {

enum ExitCode : int {
    kExitOk = 0,
    kExitIo = 1,
    kExitParse = 2,
    kExitNumerical = 3,
    kExitPrecondition = 4,
};

int cmd_simulate(const std::filesystem::path& scenario, const std::filesystem::path& out_dir,
                 std::ostream& out, std::ostream& err);

int cmd_check(const std::filesystem::path& scenario, const std::filesystem::path& out_dir,
              std::ostream& out, std::ostream& err);

int cmd_extend(const std::filesystem::path& scenario, const std::filesystem::path& out_dir,
               std::ostream& out, std::ostream& err);

// Flags override values taken from the optional scenario, which override the
// defaults (1, 3, 10, 0, 0.01) on a 1000-step grid.
struct ToySSOptions {
    std::optional<std::filesystem::path> scenario;
    std::optional<double> c_in;
    std::optional<double> c_out;
    std::optional<double> t_end;
    std::optional<double> rate;
    std::optional<double> epsilon;
    std::optional<int> n_steps;
};

int cmd_toy_ss(const ToySSOptions& options, const std::filesystem::path& out_dir,
               std::ostream& out, std::ostream& err);

// report.json body; `names` label the parameters.
std::string report_to_json(const RobustnessReport& report, const std::vector<std::string>& names,
                           double t_end);

}  // namespace policy_forge
