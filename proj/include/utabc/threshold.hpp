#pragma once

#include "utabc/models.hpp"
#include "utabc/population.hpp"
#include "utabc/prior.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace utabc {

/// Predicted threshold/acceptance-rate curve sampled on a grid of thresholds.
struct AcceptanceCurve {
    std::vector<double> grid;            // strictly increasing, all > 0
    std::vector<double> rates;           // smoothed acceptance estimate at each grid point
    std::vector<double> second_derivs;   // d^2 rate / d eps^2 at each grid point
    std::vector<double> sample_distances;
    double k_steep = 50.0;

    /// Smoothed acceptance estimate at an arbitrary eps > 0, from the samples
    /// (linear interpolation on the grid when there are none).
    double rate_at(double epsilon) const;
    /// Analytic second derivative at an arbitrary eps > 0, from the samples
    /// (linear interpolation on the grid when there are none).
    double curvature_at(double epsilon) const;
};

enum class ThresholdRule { elbow, cutpoint, quantile_fallback };

std::string to_string(ThresholdRule rule);

struct ThresholdDecision {
    double epsilon = 0.0;
    ThresholdRule rule = ThresholdRule::quantile_fallback;
    std::optional<double> epsilon_star;
    std::optional<double> predicted_rate;
    std::optional<double> d_min;
    /// No admissible threshold below the previous one: the run should stop.
    bool converged = false;
    /// Model evaluations the scheduler spent to reach this decision.
    long model_evaluations = 0;
    std::optional<AcceptanceCurve> curve;
    std::string note;
};

/// What a scheduler may look at when choosing the next threshold.
struct SchedulerContext {
    const ModelSpec& model;
    const Prior& prior;
    const Dataset& observed;
    int round = 1;  // the round about to run, 1-based
    int n_particles = 0;
    const Population* previous = nullptr;         // null in round 1
    const PerturbationKernel* kernel = nullptr;   // null in round 1
    std::optional<double> d_min;                   // smallest distance simulated so far
    std::uint64_t seed = 0;
};

class ThresholdScheduler {
public:
    virtual ~ThresholdScheduler() = default;
    virtual ThresholdDecision decide(const SchedulerContext& context) = 0;
    virtual std::string name() const = 0;
};

}  // namespace utabc
