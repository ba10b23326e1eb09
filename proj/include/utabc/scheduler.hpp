#pragma once

#include "utabc/gmm.hpp"
#include "utabc/models.hpp"
#include "utabc/population.hpp"
#include "utabc/prior.hpp"
#include "utabc/threshold.hpp"
#include "utabc/ut.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace utabc {

inline constexpr double max_k_steep = 500.0;

/// Smooth accept indicator: 1 / (1 + exp(k (delta / eps - 1))). Close to 1
/// for delta << eps, exactly 1/2 at delta == eps, close to 0 for delta >> eps.
/// At delta == 0 it is 1 / (1 + exp(-k)), which is the floor of the curve as eps -> 0.
double smooth_step(double delta, double epsilon, double k_steep);

/// d^2/d eps^2 of smooth_step.
double smooth_step_second_derivative(double delta, double epsilon, double k_steep);

/// Mean of smooth_step over the samples.
double smoothed_rate(std::span<const double> distances, double epsilon, double k_steep);

/// Mean of smooth_step_second_derivative over the samples.
double curvature(std::span<const double> distances, double epsilon, double k_steep);

/// Curve on grid_size points eps_i = i * 1.05 * top / grid_size, i = 1..grid_size,
/// where top = min(max(distances), grid_limit). Capping at the previous
/// threshold keeps a few far-out samples from leaving the grid too coarse
/// below it.
AcceptanceCurve build_curve(std::vector<double> distances, int grid_size, double k_steep,
                            std::optional<double> grid_limit = std::nullopt);

struct CurveOptions {
    int mixture_samples = 5000;  // M
    int grid_size = 200;
    double k_steep = 50.0;
    int max_components = 5;
    /// Fit exactly this many components instead of choosing by BIC.
    std::optional<int> components;
    /// Latin-hypercube normal scores for the M output samples.
    bool stratified = true;
    UtParams ut;
    EmOptions em;
};

struct CurvePrediction {
    AcceptanceCurve curve;
    GaussianMixture parameter_mixture;
    GaussianMixture output_mixture;
    int components = 0;
    long model_evaluations = 0;
};

using ParameterDraw = std::function<Vector(RandomEngine&)>;

/// Fits a mixture to `n_draws` parameters from `draw`, pushes it through
/// the model with the unscented transform, then samples the output mixture
/// to estimate the acceptance curve. Throws CurvePredictionFailure.
CurvePrediction predict_curve_from(const ParameterDraw& draw, int n_draws, const ModelSpec& model,
                                   const Dataset& observed, const CurveOptions& options, std::uint64_t seed,
                                   std::optional<double> grid_limit = std::nullopt);

/// Curve for the next round: draws N perturbed particles from `prev`. The
/// grid is capped at `prev.epsilon`.
CurvePrediction predict_curve(const Population& prev, const PerturbationKernel& kernel, const Prior& prior,
                              const ModelSpec& model, const Dataset& observed, const CurveOptions& options,
                              std::uint64_t seed);

/// Curve for round 1, fitted to `n_draws` prior samples.
CurvePrediction predict_prior_curve(const Prior& prior, int n_draws, const ModelSpec& model, const Dataset& observed,
                                    const CurveOptions& options, std::uint64_t seed);

struct SelectionOptions {
    double delta = 0.1;        // acceptance-rate floor for the elbow rule
    double min_rate = 1e-4;    // thresholds predicted to accept less are never chosen
    /// The curvature peak is only searched where at least this many of the
    /// M curve samples lie below eps; below that the estimate is noise.
    double min_peak_support = 25.0;
};

/// The elbow / cut-point rule. `prev_epsilon` is +inf in round 1, where the
/// grid maximum takes its place for normalization. `d_min` is absent in round 1.
/// Reports convergence when no grid point lies below `prev_epsilon`; throws
/// CurvePredictionFailure when every such point is predicted under `min_rate`.
ThresholdDecision select_threshold(const AcceptanceCurve& curve, double prev_epsilon, std::optional<double> d_min,
                                   const SelectionOptions& options = {});

/// Baseline: alpha-quantile of the previous population's distances.
ThresholdDecision quantile_decision(const Population& prev, double alpha);

struct PredictionError {
    std::vector<double> epsilons;
    std::vector<double> predicted;
    std::vector<double> monte_carlo;
    std::vector<double> mc_distances;  // failed simulations are +inf
    double mse = 0.0;
    long simulations = 0;
};

/// Fraction of `distances` at or below each grid point.
std::vector<double> hard_rates(const std::vector<double>& distances, const std::vector<double>& grid);

/// Brute-force check of a curve: simulates m_mc noisy draws from `draw`
/// and compares hard-indicator acceptance with the curve at 10 evenly
/// spaced grid points (every G/10-th grid point, ending at the grid maximum).
PredictionError curve_prediction_error(const AcceptanceCurve& curve, const ParameterDraw& draw,
                                       const ModelSpec& model, const Dataset& observed, int m_mc,
                                       std::uint64_t seed);

class QuantileScheduler final : public ThresholdScheduler {
public:
    explicit QuantileScheduler(double alpha, int pilot_size = 1000);
    ThresholdDecision decide(const SchedulerContext& context) override;
    std::string name() const override;

private:
    double alpha_;
    int pilot_size_;
};

struct AdaptiveOptions {
    CurveOptions curve;
    SelectionOptions selection;
    double fallback_alpha = 0.3;
    int pilot_size = 1000;  // prior-predictive draws for a round-1 fallback
    /// Keep every predicted curve on the decision (for curve_<t>.csv dumps).
    bool keep_curves = true;
};

class AdaptiveScheduler final : public ThresholdScheduler {
public:
    explicit AdaptiveScheduler(AdaptiveOptions options = {});
    ThresholdDecision decide(const SchedulerContext& context) override;
    std::string name() const override { return "adaptive"; }
    const AdaptiveOptions& options() const { return options_; }

private:
    AdaptiveOptions options_;
};

/// alpha-quantile of `pilot_size` prior-predictive distances; returns the
/// threshold and the number of simulate calls.
std::pair<double, long> pilot_quantile(const SchedulerContext& context, double alpha, int pilot_size);

}  // namespace utabc
