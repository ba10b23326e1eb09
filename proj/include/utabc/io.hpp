#pragma once

#include "utabc/gmm.hpp"
#include "utabc/population.hpp"
#include "utabc/smc.hpp"
#include "utabc/threshold.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace utabc {

/// A numeric CSV file: one header row, then rows of numbers.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    /// Index of a named column; throws std::out_of_range.
    std::size_t column(const std::string& name) const;
};

/// Throws std::runtime_error on I/O errors or malformed rows.
CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

/// Columns theta_1..theta_L, weight, distance.
void write_population_csv(const std::string& path, const Population& pop);
/// Inverse of write_population_csv (round index and epsilon are not stored:
/// epsilon is set to the largest distance).
Population read_population_csv(const std::string& path);

/// Columns epsilon, predicted_rate, curvature and, when given, mc_rate.
void write_curve_csv(const std::string& path, const AcceptanceCurve& curve,
                     const std::vector<double>* mc_rates = nullptr);

struct RunInfo {
    std::string model;
    std::string scheduler;
    int n_particles = 0;
    double target_epsilon = 0.0;
    long budget = 0;
    std::uint64_t seed = 0;
};

nlohmann::json decision_json(const ThresholdDecision& decision, int round);
nlohmann::json mixture_json(const GaussianMixture& mixture);
/// Per-round epsilon, rule, acceptance rate and simulation counts plus the
/// run totals. Contains nothing time-dependent, so reruns are byte-identical.
nlohmann::json run_summary_json(const RunResult& result, const RunInfo& info);

/// Writes pop_<t>.csv, curve_<t>.csv (when the decision kept a curve),
/// decisions.jsonl and summary.json into `dir`, creating it if needed.
void write_run_directory(const std::string& dir, const RunResult& result, const RunInfo& info);

}  // namespace utabc
