#pragma once

#include "utabc/registry.hpp"
#include "utabc/scheduler.hpp"
#include "utabc/smc.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace utabc {

struct BenchmarkMethod {
    std::string label;  // "adaptive" or "quantile-<alpha>"
    std::function<std::unique_ptr<ThresholdScheduler>()> make;
};

struct BenchmarkDataset {
    std::string label;
    Problem problem;
    long cap = 100'000;  // simulation budget per run
};

struct BenchmarkSuite {
    std::string name;
    std::vector<BenchmarkMethod> methods;
    std::vector<BenchmarkDataset> datasets;
    int n_particles = 100;
};

struct SuiteOptions {
    int n_particles = 100;
    /// Overrides the suite's quantile grid.
    std::optional<std::vector<double>> alphas;
    /// Hopf suite only: overrides T in {100, 200, 300, 400, 500}.
    std::optional<std::vector<int>> hopf_points;
    bool include_adaptive = true;
    AdaptiveOptions adaptive;
};

/// "toy-quantile-sweep", "repressilator" or "hopf".
const std::vector<std::string>& suite_names();
BenchmarkSuite make_suite(const std::string& name, const SuiteOptions& options = {});

struct BenchmarkRow {
    std::string method;
    std::string dataset;
    int repeat = 0;
    long total_simulations = 0;
    long round_simulation_sum = 0;  // sum over the run's per-round counts
    bool failed = false;
    std::string failure_kind;  // "", "budget" or "stuck"
    std::optional<double> final_epsilon;
    double wall_time = 0.0;  // seconds
    std::optional<Vector> final_mean;
    int rounds = 0;
    Termination terminated = Termination::budget_exhausted;
};

/// Failed unless the target was reached; "stuck" when epsilon converged
/// above the target, "budget" when the cap ran out.
BenchmarkRow summarize_run(const RunResult& result, const std::string& method, const std::string& dataset, int repeat,
                           double wall_time);

/// Runs every (method, dataset, repeat) cell. Repeat r of every method uses
/// the same derived seed, so methods see common random numbers. A run that
/// throws is recorded as failed with its error as the failure kind.
std::vector<BenchmarkRow> run_suite(const BenchmarkSuite& suite, int repeats, std::uint64_t seed,
                                    const std::function<void(const BenchmarkRow&)>& on_row = {});

/// Columns: method, dataset, repeat, total_simulations, failed,
/// failure_kind, final_epsilon, wall_time, final_mean (space-separated).
void write_report_csv(const std::string& path, const std::vector<BenchmarkRow>& rows);

struct MethodStats {
    std::string method;
    std::string dataset;
    int runs = 0;
    int failures = 0;
    double median_simulations = 0.0;  // over all runs, failures included at their count
    double failure_fraction() const { return runs > 0 ? static_cast<double>(failures) / runs : 0.0; }
};

/// One entry per (method, dataset), in first-seen order.
std::vector<MethodStats> summarize(const std::vector<BenchmarkRow>& rows);

}  // namespace utabc
