// cli.hpp — run configuration, scenario dispatch, CSV/JSON output, and the
// golden-file regression comparator.
#pragma once

#include "ffscale/scenarios.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace ffscale {

// exit-code taxonomy: 2 = the physics says no (infeasible), 3 = representation
// artifact handled (clamped node), 64/65/66 = usage/data/input errors
enum ExitCode : int {
    kExitOk = 0,
    kExitInfeasible = 2,
    kExitClamped = 3,
    kExitUsage = 64,
    kExitData = 65,
    kExitNoInput = 66,
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// thrown by parse_config after printing help text; maps to exit 0
class HelpRequested : public std::exception {
public:
    const char* what() const noexcept override { return "help requested"; }
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string scenario = "two-level"; // two-level | two-spin | decreasing-field |
                                        // cd-check | invariant-check
    double alpha_bar = 2.0;
    double t0 = 10.0;
    double omega = kDefaultOmega;
    double dt = 1e-3;
    bool gauge_eliminate_v0 = true;
    double field_rate = 0.1; // decreasing-field envelope h(t) = exp(-rate t)
    std::string output_dir = ".";
    std::string format = "csv"; // csv | json
};

// flags override config-file values override defaults; unknown config keys
// rejected. Throws UsageError / IoError.
RunConfig parse_config(const std::vector<std::string>& args);

// applies a flat JSON object onto cfg (used by parse_config; exposed for tests)
void apply_config_json(const std::string& text, RunConfig& cfg);

void validate_config(const RunConfig& cfg); // throws UsageError

// 17-significant-digit formatting (round-trip exact for doubles)
std::string format_number(double v);

// runs the scenario, writes <scenario>.csv (or .json) plus events.json into
// cfg.output_dir, and returns the exit code
int execute(const RunConfig& cfg);

// columnwise max-abs-difference comparison of the CSV files in two
// directories, excluding rows flagged singular on either side; rows are
// matched on the t column. Returns 0 (pass), 1 (fail) or kExitData on schema
// mismatch.
int regress(const std::string& golden_dir, const std::string& fresh_dir, double tol,
            std::ostream& report);

} // namespace ffscale
