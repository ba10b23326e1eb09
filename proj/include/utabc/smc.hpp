#pragma once

#include "utabc/models.hpp"
#include "utabc/population.hpp"
#include "utabc/prior.hpp"
#include "utabc/threshold.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace utabc {

/// The prior and the perturbation kernel share no usable support.
class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Termination { target_reached, budget_exhausted, epsilon_converged };

std::string to_string(Termination t);
Termination parse_termination(const std::string& s);

struct RunResult {
    std::vector<Population> populations;
    std::vector<ThresholdDecision> decisions;  // one per attempted round
    std::vector<long> round_simulations;       // one per attempted round; sums to total_simulations
    long total_simulations = 0;
    Termination terminated = Termination::budget_exhausted;
    std::optional<double> d_min;
};

struct SmcOptions {
    int n_particles = 500;
    double target_epsilon = 0.0;
    long budget = 1'000'000;
    std::uint64_t seed = 1;
    /// Stop once (eps_{t-1} - eps_t) / eps_{t-1} < tolerance for this many consecutive rounds.
    double convergence_tolerance = 1e-3;
    int convergence_rounds = 2;
    int max_rounds = 10'000;
    /// Called after every completed round.
    std::function<void(const Population&, const ThresholdDecision&)> on_round;
};

/// Outcome of one accept/reject loop.
struct RoundResult {
    Population population;  // complete only when `complete`
    bool complete = false;
    std::optional<double> min_distance;  // over every simulation in the loop, accepted or not
};

/// Round 1: draws from the prior until N simulations land within epsilon1.
/// Weights are all 1/N. Stops early, incomplete, when `budget` simulate calls are spent.
RoundResult rejection_round(const ModelSpec& model, const Prior& prior, const Dataset& observed, double epsilon1,
                            int n_particles, long budget, std::uint64_t seed);

/// Weighted multinomial choice from `prev`, then a kernel perturbation,
/// redrawn until the prior density is positive.
class PopulationSampler {
public:
    PopulationSampler(const Population& prev, const PerturbationKernel& kernel, const Prior& prior);
    Vector draw(RandomEngine& rng) const;

    static constexpr long max_support_rejections = 1'000'000;

private:
    const Population& prev_;
    const PerturbationKernel& kernel_;
    const Prior& prior_;
    std::vector<double> cumulative_;
};

Vector sample_and_perturb(const Population& prev, const PerturbationKernel& kernel, const Prior& prior,
                          RandomEngine& rng);

/// pi(theta) / sum_j w_j K(theta | theta_j). Unnormalized.
double compute_weight(const Vector& theta, const Population& prev, const PerturbationKernel& kernel,
                      const Prior& prior);

/// Twice the weighted covariance of `prev`, with a ridge when it is near singular.
PerturbationKernel adapt_kernel(const Population& prev);

/// Linear interpolation between order statistics: h = (n - 1) * alpha.
double quantile(std::vector<double> values, double alpha);
double quantile_threshold(const Population& prev, double alpha);

/// Resample/perturb round t >= 2 with importance weights.
RoundResult perturbation_round(const ModelSpec& model, const Prior& prior, const Dataset& observed,
                               const Population& prev, const PerturbationKernel& kernel, double epsilon,
                               int round_index, int n_particles, long budget, std::uint64_t seed);

RunResult run_abc_smc(const ModelSpec& model, const Prior& prior, const Dataset& observed,
                      ThresholdScheduler& scheduler, const SmcOptions& options);

}  // namespace utabc
