#pragma once

#include "utabc/prior.hpp"
#include "utabc/registry.hpp"
#include "utabc/scheduler.hpp"
#include "utabc/smc.hpp"

#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace utabc {

/// Malformed or invalid run configuration. `line` is 0 when the problem is
/// not tied to one line (for example a prior of the wrong dimension).
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& source, int line, const std::string& message);
    int line() const { return line_; }

private:
    int line_;
};

struct SchedulerConfig {
    enum class Kind { adaptive, quantile };
    Kind kind = Kind::adaptive;
    double alpha = 0.3;  // quantile schedule only
    AdaptiveOptions adaptive;
};

struct RunConfig {
    std::string model = "toy";
    std::vector<PriorFactor> prior;  // empty: the model's default prior
    std::optional<Vector> true_theta;
    int hopf_points = 500;
    std::uint64_t data_seed = ProblemSettings{}.data_seed;
    int n_particles = 500;
    std::optional<double> target_epsilon;  // default: the model's target
    long budget = 1'000'000;
    std::uint64_t seed = 1;
    std::string output_dir = "run";
    SchedulerConfig scheduler;
};

/// Flat `key = value` lines; `#` and `;` start comments. Unknown keys,
/// duplicates and unparsable values are reported with their line number.
RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

/// Builds the problem and checks the prior / ground truth against the model.
Problem make_problem(const RunConfig& config);
std::unique_ptr<ThresholdScheduler> make_scheduler(const SchedulerConfig& config);
SmcOptions make_smc_options(const RunConfig& config, const Problem& problem);

/// Canonical text form; parse_config(format_config(c)) == c.
std::string format_config(const RunConfig& config);

}  // namespace utabc
