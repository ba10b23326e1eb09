#include "utabc/smc.hpp"

#include "utabc/log.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace utabc {

std::string to_string(Termination t) {
    switch (t) {
        case Termination::target_reached: return "target-reached";
        case Termination::budget_exhausted: return "budget-exhausted";
        case Termination::epsilon_converged: return "epsilon-converged";
    }
    return "unknown";
}

Termination parse_termination(const std::string& s) {
    if (s == "target-reached") return Termination::target_reached;
    if (s == "budget-exhausted") return Termination::budget_exhausted;
    if (s == "epsilon-converged") return Termination::epsilon_converged;
    throw std::invalid_argument("unknown termination '" + s + "'");
}

namespace {

// Proposal streams are keyed by (round, proposal counter) so that the
// accepted set depends only on the seed.
template <typename Propose>
RoundResult accept_reject_loop(const ModelSpec& model, const Dataset& observed, double epsilon, int round_index,
                               int n_particles, long budget, std::uint64_t seed, Propose&& propose) {
    RoundResult result;
    result.population.round_index = round_index;
    result.population.epsilon = epsilon;
    result.population.particles.reserve(static_cast<std::size_t>(n_particles));

    long sims = 0;
    for (std::uint64_t j = 0; static_cast<int>(result.population.particles.size()) < n_particles; ++j) {
        if (sims >= budget) break;
        RandomEngine rng = make_engine(seed, {static_cast<std::uint64_t>(round_index), j});
        Vector theta = propose(rng);
        ++sims;
        double d = 0.0;
        try {
            d = distance(simulate(model, theta, rng), observed, model.metric());
        } catch (const SimulationFailure&) {
            continue;
        }
        if (!result.min_distance || d < *result.min_distance) result.min_distance = d;
        if (d <= epsilon) result.population.particles.push_back(Particle{std::move(theta), 0.0, d});
    }
    result.population.proposals = sims;
    result.population.simulations_used = sims;
    result.complete = static_cast<int>(result.population.particles.size()) == n_particles;
    return result;
}

void check_round_args(double epsilon, int n_particles) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("threshold must be positive");
    if (n_particles < 2) throw std::invalid_argument("need at least 2 particles");
}

}  // namespace

RoundResult rejection_round(const ModelSpec& model, const Prior& prior, const Dataset& observed, double epsilon1,
                            int n_particles, long budget, std::uint64_t seed) {
    check_round_args(epsilon1, n_particles);
    if (prior.dim() != model.parameter_dim()) throw std::invalid_argument("prior and model dimensions differ");
    auto result = accept_reject_loop(model, observed, epsilon1, 1, n_particles, budget, seed,
                                     [&](RandomEngine& rng) { return prior.sample(rng); });
    for (auto& p : result.population.particles) p.weight = 1.0 / n_particles;
    return result;
}

PopulationSampler::PopulationSampler(const Population& prev, const PerturbationKernel& kernel, const Prior& prior)
    : prev_(prev), kernel_(kernel), prior_(prior) {
    if (prev.particles.empty()) throw std::invalid_argument("cannot resample an empty population");
    cumulative_.reserve(prev.size());
    double acc = 0.0;
    for (const auto& p : prev.particles) {
        acc += p.weight;
        cumulative_.push_back(acc);
    }
    if (!(acc > 0.0)) throw std::invalid_argument("population weights sum to zero");
}

Vector PopulationSampler::draw(RandomEngine& rng) const {
    std::uniform_real_distribution<double> unif(0.0, cumulative_.back());
    for (long attempt = 0; attempt < max_support_rejections; ++attempt) {
        const double u = unif(rng);
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        if (it == cumulative_.end()) --it;
        const auto idx = static_cast<std::size_t>(it - cumulative_.begin());
        Vector theta = kernel_.perturb(prev_.particles[idx].theta, rng);
        if (prior_.in_support(theta)) return theta;
    }
    throw ConfigurationError("perturbation kernel keeps leaving the prior support");
}

Vector sample_and_perturb(const Population& prev, const PerturbationKernel& kernel, const Prior& prior,
                          RandomEngine& rng) {
    return PopulationSampler(prev, kernel, prior).draw(rng);
}

double compute_weight(const Vector& theta, const Population& prev, const PerturbationKernel& kernel,
                      const Prior& prior) {
    const double pi = prior.density(theta);
    if (pi == 0.0) return 0.0;
    // log-sum-exp over the mixture so that far-away kernels cannot underflow
    // the whole denominator
    std::vector<double> terms;
    terms.reserve(prev.size());
    double peak = -std::numeric_limits<double>::infinity();
    for (const auto& p : prev.particles) {
        if (p.weight <= 0.0) continue;
        const double l = std::log(p.weight) + kernel.log_density(theta, p.theta);
        terms.push_back(l);
        peak = std::max(peak, l);
    }
    if (terms.empty() || !std::isfinite(peak)) {
        throw std::domain_error("compute_weight: kernel mixture density is zero at theta");
    }
    double sum = 0.0;
    for (double l : terms) sum += std::exp(l - peak);
    return std::exp(std::log(pi) - peak - std::log(sum));
}

PerturbationKernel adapt_kernel(const Population& prev) {
    if (prev.size() < 2) throw std::invalid_argument("adapt_kernel: need at least 2 particles");
    const auto thetas = prev.thetas();
    const auto weights = prev.weights();
    Matrix cov = 2.0 * weighted_covariance(thetas, weights);
    const auto dim = static_cast<double>(cov.rows());

    bool regularized = false;
    if (min_eigenvalue(cov) < 1e-10) {
        double scale = cov.trace() / dim;
        if (!(scale > 0.0)) {
            // All particles coincide; fall back to the particle magnitude.
            const Vector mean = weighted_mean(thetas, weights);
            scale = std::max(1.0, mean.squaredNorm() / dim);
            log::warn("adapt_kernel: all particles identical, using the regularization floor as kernel covariance");
        }
        cov += 1e-8 * scale * Matrix::Identity(cov.rows(), cov.cols());
        regularized = true;
    }
    PerturbationKernel kernel(cov);
    kernel.regularized = regularized;
    return kernel;
}

double quantile(std::vector<double> values, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("quantile: alpha must lie in (0, 1)");
    if (values.empty()) throw std::invalid_argument("quantile: empty sample");
    std::sort(values.begin(), values.end());
    const double h = static_cast<double>(values.size() - 1) * alpha;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double quantile_threshold(const Population& prev, double alpha) { return quantile(prev.distances(), alpha); }

RoundResult perturbation_round(const ModelSpec& model, const Prior& prior, const Dataset& observed,
                               const Population& prev, const PerturbationKernel& kernel, double epsilon,
                               int round_index, int n_particles, long budget, std::uint64_t seed) {
    check_round_args(epsilon, n_particles);
    const PopulationSampler sampler(prev, kernel, prior);
    auto result = accept_reject_loop(model, observed, epsilon, round_index, n_particles, budget, seed,
                                     [&](RandomEngine& rng) { return sampler.draw(rng); });
    if (!result.complete) return result;
    for (auto& p : result.population.particles) p.weight = compute_weight(p.theta, prev, kernel, prior);
    result.population.normalize_weights();
    return result;
}

RunResult run_abc_smc(const ModelSpec& model, const Prior& prior, const Dataset& observed,
                      ThresholdScheduler& scheduler, const SmcOptions& options) {
    if (options.n_particles < 2) throw std::invalid_argument("run_abc_smc: need N >= 2");
    if (options.budget < options.n_particles) throw std::invalid_argument("run_abc_smc: budget must be >= N");
    if (prior.dim() != model.parameter_dim()) throw std::invalid_argument("run_abc_smc: prior/model dimension mismatch");
    if (observed.values.size() != model.output_dim()) {
        throw std::invalid_argument("run_abc_smc: observed data dimension mismatch");
    }

    RunResult run;
    int slow_rounds = 0;
    std::optional<PerturbationKernel> kernel;

    for (int t = 1; t <= options.max_rounds; ++t) {
        const Population* prev = run.populations.empty() ? nullptr : &run.populations.back();
        if (prev) kernel = adapt_kernel(*prev);

        SchedulerContext ctx{model,
                             prior,
                             observed,
                             t,
                             options.n_particles,
                             prev,
                             prev ? &*kernel : nullptr,
                             run.d_min,
                             derive_seed(options.seed, {static_cast<std::uint64_t>(t), 0x5c4ed01eULL})};
        ThresholdDecision decision = scheduler.decide(ctx);
        run.total_simulations += decision.model_evaluations;

        if (decision.converged || (prev && !(decision.epsilon < prev->epsilon))) {
            if (prev && !decision.converged) {
                std::ostringstream os;
                os << "round " << t << ": scheduler proposed eps=" << decision.epsilon
                   << " which does not decrease from " << prev->epsilon << "; stopping";
                log::info(os.str());
            }
            run.round_simulations.push_back(decision.model_evaluations);
            run.decisions.push_back(std::move(decision));
            run.terminated = Termination::epsilon_converged;
            return run;
        }

        const long remaining = options.budget - run.total_simulations;
        if (remaining <= 0) {
            run.round_simulations.push_back(decision.model_evaluations);
            run.decisions.push_back(std::move(decision));
            run.terminated = Termination::budget_exhausted;
            return run;
        }

        RoundResult round = prev ? perturbation_round(model, prior, observed, *prev, *kernel, decision.epsilon, t,
                                                      options.n_particles, remaining, options.seed)
                                 : rejection_round(model, prior, observed, decision.epsilon, options.n_particles,
                                                   remaining, options.seed);
        run.total_simulations += round.population.proposals;
        if (round.min_distance && (!run.d_min || *round.min_distance < *run.d_min)) run.d_min = round.min_distance;

        if (!round.complete) {
            run.round_simulations.push_back(decision.model_evaluations + round.population.proposals);
            run.decisions.push_back(std::move(decision));
            run.terminated = Termination::budget_exhausted;
            return run;
        }

        round.population.simulations_used = round.population.proposals + decision.model_evaluations;
        if (options.on_round) options.on_round(round.population, decision);
        {
            std::ostringstream os;
            os << "round " << t << ": eps=" << decision.epsilon << " rule=" << to_string(decision.rule)
               << " acceptance=" << round.population.acceptance_rate() << " total_sims=" << run.total_simulations;
            log::info(os.str());
        }

        const double eps = round.population.epsilon;
        if (prev) {
            const double rel = (prev->epsilon - eps) / prev->epsilon;
            slow_rounds = rel < options.convergence_tolerance ? slow_rounds + 1 : 0;
        }
        run.round_simulations.push_back(round.population.simulations_used);
        run.decisions.push_back(std::move(decision));
        run.populations.push_back(std::move(round.population));

        if (eps <= options.target_epsilon) {
            run.terminated = Termination::target_reached;
            return run;
        }
        if (slow_rounds >= options.convergence_rounds) {
            run.terminated = Termination::epsilon_converged;
            return run;
        }
        if (run.total_simulations >= options.budget) {
            run.terminated = Termination::budget_exhausted;
            return run;
        }
    }
    run.terminated = Termination::epsilon_converged;
    return run;
}

}  // namespace utabc
