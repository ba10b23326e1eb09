#include "utabc/scheduler.hpp"

#include "utabc/log.hpp"
#include "utabc/smc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace utabc {

std::string to_string(ThresholdRule rule) {
    switch (rule) {
        case ThresholdRule::elbow: return "elbow";
        case ThresholdRule::cutpoint: return "cutpoint";
        case ThresholdRule::quantile_fallback: return "quantile-fallback";
    }
    return "unknown";
}

namespace {

// Returns (H, 1 - H) without cancellation.
std::pair<double, double> logistic_pair(double u) {
    if (u > 0.0) {
        const double e = std::exp(-u);
        return {e / (1.0 + e), 1.0 / (1.0 + e)};
    }
    const double e = std::exp(u);
    return {1.0 / (1.0 + e), e / (1.0 + e)};
}

double clamp_k(double k) {
    if (!(k > 0.0)) throw std::invalid_argument("k_steep must be positive");
    return std::min(k, max_k_steep);
}

}  // namespace

double smooth_step(double delta, double epsilon, double k_steep) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("smooth_step: epsilon must be positive");
    return logistic_pair(k_steep * (delta / epsilon - 1.0)).first;
}

double smooth_step_second_derivative(double delta, double epsilon, double k_steep) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("smooth_step: epsilon must be positive");
    const auto [h, one_minus_h] = logistic_pair(k_steep * (delta / epsilon - 1.0));
    const double a = k_steep * delta / (epsilon * epsilon);  // -du/d eps
    return h * one_minus_h * ((1.0 - 2.0 * h) * a * a - 2.0 * a / epsilon);
}

double smoothed_rate(std::span<const double> distances, double epsilon, double k_steep) {
    if (distances.empty()) return 0.0;
    double s = 0.0;
    for (double d : distances) s += smooth_step(d, epsilon, k_steep);
    return s / static_cast<double>(distances.size());
}

double curvature(std::span<const double> distances, double epsilon, double k_steep) {
    if (distances.empty()) return 0.0;
    double s = 0.0;
    for (double d : distances) s += smooth_step_second_derivative(d, epsilon, k_steep);
    return s / static_cast<double>(distances.size());
}

namespace {

// Linear interpolation on the grid, clamped at both ends.
double interpolate(const std::vector<double>& x, const std::vector<double>& y, double at) {
    if (x.empty()) throw std::invalid_argument("AcceptanceCurve: empty grid");
    if (at <= x.front()) return y.front();
    if (at >= x.back()) return y.back();
    const auto hi = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), at) - x.begin());
    const double f = (at - x[hi - 1]) / (x[hi] - x[hi - 1]);
    return y[hi - 1] + f * (y[hi] - y[hi - 1]);
}

}  // namespace

double AcceptanceCurve::rate_at(double epsilon) const {
    if (sample_distances.empty()) return interpolate(grid, rates, epsilon);
    return smoothed_rate(sample_distances, epsilon, k_steep);
}

double AcceptanceCurve::curvature_at(double epsilon) const {
    if (sample_distances.empty()) return interpolate(grid, second_derivs, epsilon);
    return curvature(sample_distances, epsilon, k_steep);
}

AcceptanceCurve build_curve(std::vector<double> distances, int grid_size, double k_steep,
                            std::optional<double> grid_limit) {
    if (distances.empty()) throw std::invalid_argument("build_curve: no samples");
    if (grid_size < 2) throw std::invalid_argument("build_curve: grid needs at least 2 points");
    AcceptanceCurve c;
    c.k_steep = clamp_k(k_steep);
    c.sample_distances = std::move(distances);
    double top = *std::max_element(c.sample_distances.begin(), c.sample_distances.end());
    if (grid_limit && *grid_limit > 0.0) top = std::min(top, *grid_limit);
    if (!(top > 0.0)) top = 1.0;
    const double step = 1.05 * top / grid_size;
    c.grid.reserve(static_cast<std::size_t>(grid_size));
    for (int i = 1; i <= grid_size; ++i) c.grid.push_back(step * i);
    c.rates.reserve(c.grid.size());
    c.second_derivs.reserve(c.grid.size());
    for (double e : c.grid) {
        c.rates.push_back(c.rate_at(e));
        c.second_derivs.push_back(c.curvature_at(e));
    }
    return c;
}

CurvePrediction predict_curve_from(const ParameterDraw& draw, int n_draws, const ModelSpec& model,
                                   const Dataset& observed, const CurveOptions& options, std::uint64_t seed,
                                   std::optional<double> grid_limit) {
    if (n_draws < 1) throw std::invalid_argument("predict_curve: need at least one parameter draw");
    if (options.mixture_samples < 1) throw std::invalid_argument("predict_curve: need M >= 1");

    RandomEngine rng = make_engine(seed, {1});
    std::vector<Vector> thetas;
    thetas.reserve(static_cast<std::size_t>(n_draws));
    for (int i = 0; i < n_draws; ++i) thetas.push_back(draw(rng));
    const std::vector<double> ones(thetas.size(), 1.0);

    CurvePrediction out;
    try {
        if (options.components) {
            out.parameter_mixture = fit_em(thetas, ones, *options.components, derive_seed(seed, {2}), options.em).mixture;
            out.components = *options.components;
        } else {
            ComponentSelection sel =
                select_components(thetas, ones, options.max_components, derive_seed(seed, {2}), options.em);
            out.parameter_mixture = std::move(sel.fit.mixture);
            out.components = sel.k;
        }
    } catch (const std::exception& e) {
        throw CurvePredictionFailure(std::string("mixture fit failed: ") + e.what());
    }

    OutputMixture om = predict_output_mixture(out.parameter_mixture, model, options.ut);
    out.model_evaluations = om.model_evaluations;
    out.output_mixture = std::move(om.mixture);

    RandomEngine sample_rng = make_engine(seed, {3});
    Matrix xs;
    try {
        xs = out.output_mixture.sample_matrix(options.mixture_samples, sample_rng, options.stratified);
    } catch (const std::exception& e) {
        throw CurvePredictionFailure(std::string("output mixture sampling failed: ") + e.what());
    }
    std::vector<double> d(static_cast<std::size_t>(xs.cols()));
    for (Eigen::Index j = 0; j < xs.cols(); ++j) {
        d[static_cast<std::size_t>(j)] = distance(Vector(xs.col(j)), observed.values, model.metric());
    }
    out.curve = build_curve(std::move(d), options.grid_size, options.k_steep, grid_limit);
    return out;
}

CurvePrediction predict_curve(const Population& prev, const PerturbationKernel& kernel, const Prior& prior,
                              const ModelSpec& model, const Dataset& observed, const CurveOptions& options,
                              std::uint64_t seed) {
    if (prev.particles.empty()) throw std::invalid_argument("predict_curve: empty population");
    const PopulationSampler sampler(prev, kernel, prior);
    return predict_curve_from([&](RandomEngine& rng) { return sampler.draw(rng); }, static_cast<int>(prev.size()),
                              model, observed, options, seed, prev.epsilon);
}

CurvePrediction predict_prior_curve(const Prior& prior, int n_draws, const ModelSpec& model, const Dataset& observed,
                                    const CurveOptions& options, std::uint64_t seed) {
    return predict_curve_from([&](RandomEngine& rng) { return prior.sample(rng); }, n_draws, model, observed, options,
                              seed);
}

namespace {

// Golden-section search for the curvature maximum inside [lo, hi].
double refine_curvature_peak(const AcceptanceCurve& curve, double lo, double hi) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = curve.curvature_at(c);
    double fd = curve.curvature_at(d);
    for (int i = 0; i < 60 && (b - a) > 1e-9 * std::max(1.0, std::abs(b)); ++i) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = curve.curvature_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = curve.curvature_at(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

ThresholdDecision select_threshold(const AcceptanceCurve& curve, double prev_epsilon, std::optional<double> d_min,
                                   const SelectionOptions& options) {
    if (curve.grid.empty() || curve.grid.size() != curve.rates.size() ||
        curve.grid.size() != curve.second_derivs.size()) {
        throw std::invalid_argument("select_threshold: malformed curve");
    }
    if (!(prev_epsilon > 0.0)) throw std::invalid_argument("select_threshold: previous epsilon must be positive");

    ThresholdDecision dec;
    dec.d_min = d_min;

    std::vector<std::size_t> admissible;
    bool any_below = false;
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        if (curve.grid[i] >= prev_epsilon) continue;
        any_below = true;
        if (curve.rates[i] >= options.min_rate) admissible.push_back(i);
    }
    if (!any_below) {
        dec.converged = true;
        dec.epsilon = prev_epsilon;
        dec.note = "no threshold on the grid below the previous one";
        return dec;
    }
    if (admissible.empty()) {
        // The last population was accepted below prev_epsilon, so a curve
        // that predicts almost nothing there is not usable.
        throw CurvePredictionFailure("predicted acceptance below the previous threshold is under the floor");
    }

    const double peak_floor =
        curve.sample_distances.empty()
            ? options.min_rate
            : std::max(options.min_rate, options.min_peak_support / static_cast<double>(curve.sample_distances.size()));
    std::optional<std::size_t> peak_index;
    for (std::size_t i : admissible) {
        if (curve.rates[i] < peak_floor) continue;
        if (!peak_index || curve.second_derivs[i] > curve.second_derivs[*peak_index]) peak_index = i;
    }
    const std::size_t peak = peak_index.value_or(admissible.back());
    const double lo = peak > 0 ? curve.grid[peak - 1] : 0.5 * curve.grid[peak];
    double hi = peak + 1 < curve.grid.size() ? curve.grid[peak + 1] : curve.grid[peak];
    if (std::isfinite(prev_epsilon)) hi = std::min(hi, prev_epsilon * (1.0 - 1e-12));
    double eps_star = curve.grid[peak];
    double peak_curv = curve.second_derivs[peak];
    if (hi > lo) {
        const double refined = refine_curvature_peak(curve, lo, hi);
        const double refined_curv = curve.curvature_at(refined);
        if (refined_curv > peak_curv && curve.rate_at(refined) >= peak_floor) {
            eps_star = refined;
            peak_curv = refined_curv;
        }
    }
    dec.epsilon_star = eps_star;
    const double rate_star = curve.rate_at(eps_star);

    // A peak on the top admissible grid point means the curve is still
    // bending upwards at the previous threshold: no elbow below it.
    const bool at_ceiling = peak == admissible.back() &&
                            (peak + 1 >= curve.grid.size() || curve.grid[peak + 1] >= prev_epsilon);
    const bool convex_section = peak_index.has_value() && !at_ceiling && peak_curv > 0.0;
    if (convex_section && (rate_star > options.delta || (d_min && eps_star > *d_min))) {
        dec.rule = ThresholdRule::elbow;
        dec.epsilon = eps_star;
        dec.predicted_rate = rate_star;
        return dec;
    }

    const double ref_eps = std::isfinite(prev_epsilon) ? prev_epsilon : curve.grid.back();
    const double ref_rate = std::isfinite(prev_epsilon) ? curve.rate_at(prev_epsilon) : curve.rates.back();
    std::size_t best = admissible.front();
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t i : admissible) {
        const double x = curve.grid[i] / ref_eps;
        const double y = curve.rates[i] / ref_rate - 1.0;
        const double score = std::sqrt(x * x + y * y);
        // ascending grid + strict comparison keeps the smallest eps on ties
        if (score < best_score * (1.0 - 1e-12)) {
            best_score = score;
            best = i;
        }
    }
    dec.rule = ThresholdRule::cutpoint;
    dec.epsilon = curve.grid[best];
    dec.predicted_rate = curve.rates[best];
    return dec;
}

ThresholdDecision quantile_decision(const Population& prev, double alpha) {
    ThresholdDecision dec;
    dec.rule = ThresholdRule::quantile_fallback;
    dec.epsilon = quantile_threshold(prev, alpha);
    return dec;
}

std::vector<double> hard_rates(const std::vector<double>& distances, const std::vector<double>& grid) {
    std::vector<double> sorted(distances);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out;
    out.reserve(grid.size());
    for (double e : grid) {
        const auto hits = std::upper_bound(sorted.begin(), sorted.end(), e) - sorted.begin();
        out.push_back(sorted.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(sorted.size()));
    }
    return out;
}

PredictionError curve_prediction_error(const AcceptanceCurve& curve, const ParameterDraw& draw,
                                       const ModelSpec& model, const Dataset& observed, int m_mc,
                                       std::uint64_t seed) {
    if (m_mc < 100) throw std::invalid_argument("curve_prediction_error: need at least 100 Monte Carlo draws");
    if (curve.grid.size() < 10) throw std::invalid_argument("curve_prediction_error: grid too coarse");

    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(m_mc));
    PredictionError out;
    for (int j = 0; j < m_mc; ++j) {
        RandomEngine rng = make_engine(seed, {static_cast<std::uint64_t>(j)});
        const Vector theta = draw(rng);
        ++out.simulations;
        try {
            d.push_back(distance(simulate(model, theta, rng), observed, model.metric()));
        } catch (const SimulationFailure&) {
            d.push_back(std::numeric_limits<double>::infinity());
        }
    }
    const std::size_t g = curve.grid.size();
    double sq = 0.0;
    for (std::size_t i = 1; i <= 10; ++i) {
        const std::size_t idx = (g * i) / 10 - 1;
        const double eps = curve.grid[idx];
        const double mc = hard_rates(d, {eps}).front();
        out.epsilons.push_back(eps);
        out.predicted.push_back(curve.rates[idx]);
        out.monte_carlo.push_back(mc);
        sq += (curve.rates[idx] - mc) * (curve.rates[idx] - mc);
    }
    out.mse = sq / 10.0;
    out.mc_distances = std::move(d);
    return out;
}

std::pair<double, long> pilot_quantile(const SchedulerContext& ctx, double alpha, int pilot_size) {
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(pilot_size));
    long sims = 0;
    for (int j = 0; j < pilot_size; ++j) {
        RandomEngine rng = make_engine(ctx.seed, {0x9170ULL, static_cast<std::uint64_t>(j)});
        const Vector theta = ctx.prior.sample(rng);
        ++sims;
        try {
            d.push_back(distance(simulate(ctx.model, theta, rng), ctx.observed, ctx.model.metric()));
        } catch (const SimulationFailure&) {
        }
    }
    if (d.empty()) throw std::runtime_error("pilot_quantile: every prior-predictive simulation failed");
    return {quantile(std::move(d), alpha), sims};
}

QuantileScheduler::QuantileScheduler(double alpha, int pilot_size) : alpha_(alpha), pilot_size_(pilot_size) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("QuantileScheduler: alpha must lie in (0, 1)");
    if (pilot_size < 1) throw std::invalid_argument("QuantileScheduler: pilot size must be positive");
}

std::string QuantileScheduler::name() const {
    std::ostringstream os;
    os << "quantile-" << alpha_;
    return os.str();
}

ThresholdDecision QuantileScheduler::decide(const SchedulerContext& ctx) {
    if (!ctx.previous) {
        ThresholdDecision dec;
        dec.rule = ThresholdRule::quantile_fallback;
        std::tie(dec.epsilon, dec.model_evaluations) = pilot_quantile(ctx, alpha_, pilot_size_);
        dec.d_min = ctx.d_min;
        return dec;
    }
    ThresholdDecision dec = quantile_decision(*ctx.previous, alpha_);
    dec.d_min = ctx.d_min;
    if (!(dec.epsilon < ctx.previous->epsilon)) dec.converged = true;
    return dec;
}

AdaptiveScheduler::AdaptiveScheduler(AdaptiveOptions options) : options_(std::move(options)) {
    if (!(options_.selection.delta >= 0.0 && options_.selection.delta <= 1.0)) {
        throw std::invalid_argument("AdaptiveScheduler: delta must lie in [0, 1]");
    }
    if (options_.curve.max_components < 1) throw std::invalid_argument("AdaptiveScheduler: K_max must be >= 1");
    options_.curve.k_steep = clamp_k(options_.curve.k_steep);
}

ThresholdDecision AdaptiveScheduler::decide(const SchedulerContext& ctx) {
    const bool first = ctx.previous == nullptr;
    long evaluations = 0;
    try {
        CurvePrediction pred =
            first ? predict_prior_curve(ctx.prior, ctx.n_particles, ctx.model, ctx.observed, options_.curve, ctx.seed)
                  : predict_curve(*ctx.previous, *ctx.kernel, ctx.prior, ctx.model, ctx.observed, options_.curve,
                                  ctx.seed);
        evaluations = pred.model_evaluations;
        const double prev_eps = first ? std::numeric_limits<double>::infinity() : ctx.previous->epsilon;
        ThresholdDecision dec =
            select_threshold(pred.curve, prev_eps, first ? std::nullopt : ctx.d_min, options_.selection);
        dec.d_min = ctx.d_min;
        dec.model_evaluations = evaluations;
        if (options_.keep_curves) dec.curve = std::move(pred.curve);
        return dec;
    } catch (const CurvePredictionFailure& e) {
        std::ostringstream os;
        os << "round " << ctx.round << ": curve prediction failed (" << e.what() << "); using the "
           << options_.fallback_alpha << " quantile";
        log::warn(os.str());
        ThresholdDecision dec;
        dec.rule = ThresholdRule::quantile_fallback;
        dec.note = e.what();
        dec.d_min = ctx.d_min;
        if (first) {
            long sims = 0;
            std::tie(dec.epsilon, sims) = pilot_quantile(ctx, options_.fallback_alpha, options_.pilot_size);
            dec.model_evaluations = evaluations + sims;
        } else {
            dec.epsilon = quantile_threshold(*ctx.previous, options_.fallback_alpha);
            dec.model_evaluations = evaluations;
            if (!(dec.epsilon < ctx.previous->epsilon)) dec.converged = true;
        }
        return dec;
    }
}

}  // namespace utabc
