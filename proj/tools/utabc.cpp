#include "utabc/benchmark.hpp"
#include "utabc/config.hpp"
#include "utabc/io.hpp"
#include "utabc/log.hpp"
#include "utabc/scheduler.hpp"
#include "utabc/smc.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <limits>

namespace {

enum ExitCode { ok = 0, runtime_failure = 1, config_failure = 2, budget_exhausted = 3, stuck = 4 };

using namespace utabc;

int cmd_run(const std::string& config_path, const std::string& out_override, std::optional<std::uint64_t> seed) {
    RunConfig config = load_config(config_path);
    if (seed) config.seed = *seed;
    if (!out_override.empty()) config.output_dir = out_override;
    const Problem problem = make_problem(config);
    auto scheduler = make_scheduler(config.scheduler);
    const SmcOptions options = make_smc_options(config, problem);
    const RunResult result = run_abc_smc(problem.model, problem.prior, problem.observed, *scheduler, options);

    const RunInfo info{config.model, scheduler->name(), config.n_particles, problem.target_epsilon, config.budget,
                       config.seed};
    write_run_directory(config.output_dir, result, info);
    std::cout << "terminated: " << to_string(result.terminated) << "\n"
              << "rounds: " << result.populations.size() << "\n"
              << "total simulations: " << result.total_simulations << "\n";
    if (!result.populations.empty()) {
        const Population& last = result.populations.back();
        std::cout << "final epsilon: " << last.epsilon << "\n"
                  << "posterior mean: " << last.weighted_mean().transpose() << "\n";
    }
    std::cout << "output: " << config.output_dir << "\n";
    switch (result.terminated) {
        case Termination::target_reached: return ok;
        case Termination::budget_exhausted: return budget_exhausted;
        case Termination::epsilon_converged: return stuck;
    }
    return runtime_failure;
}

int cmd_benchmark(const std::string& suite_name, int repeats, std::uint64_t seed, const std::string& out,
                  int particles, const std::vector<int>& points, const std::vector<double>& alphas) {
    SuiteOptions options;
    options.n_particles = particles;
    if (!points.empty()) options.hopf_points = points;
    if (!alphas.empty()) options.alphas = alphas;
    const BenchmarkSuite suite = make_suite(suite_name, options);
    const auto rows = run_suite(suite, repeats, seed, [](const BenchmarkRow& r) {
        std::ostringstream os;
        os << r.dataset << " " << r.method << " #" << r.repeat << ": " << r.total_simulations << " simulations"
           << (r.failed ? " (failed: " + r.failure_kind + ")" : "");
        log::info(os.str());
    });
    const std::filesystem::path path(out);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    write_report_csv(out, rows);

    std::cout << std::left << std::setw(16) << "dataset" << std::setw(16) << "method" << std::right << std::setw(12)
              << "median sims" << std::setw(10) << "failed" << "\n";
    for (const auto& s : summarize(rows)) {
        std::cout << std::left << std::setw(16) << s.dataset << std::setw(16) << s.method << std::right
                  << std::setw(12) << s.median_simulations << std::setw(7) << s.failures << "/" << s.runs << "\n";
    }
    std::cout << "report: " << out << "\n";
    return ok;
}

int cmd_curve(const std::string& config_path, const std::string& population_path, bool mc_check, int mc_draws,
              const std::string& out_dir, std::optional<std::uint64_t> seed) {
    RunConfig config = load_config(config_path);
    if (seed) config.seed = *seed;
    const Problem problem = make_problem(config);
    const CurveOptions& curve_options = config.scheduler.adaptive.curve;

    std::optional<Population> pop;
    std::optional<PerturbationKernel> kernel;
    ParameterDraw draw;
    int n_draws = config.n_particles;
    if (!population_path.empty()) {
        if (!std::filesystem::exists(population_path)) {
            throw std::runtime_error("population file not found: " + population_path);
        }
        pop = read_population_csv(population_path);
        if (pop->dim() != problem.model.parameter_dim()) {
            throw ConfigError(population_path, 0, "population dimension does not match the model");
        }
        kernel = adapt_kernel(*pop);
        n_draws = static_cast<int>(pop->size());
        draw = [&, sampler = std::make_shared<PopulationSampler>(*pop, *kernel, problem.prior)](RandomEngine& rng) {
            return sampler->draw(rng);
        };
    } else {
        draw = [&](RandomEngine& rng) { return problem.prior.sample(rng); };
    }

    const CurvePrediction pred =
        predict_curve_from(draw, n_draws, problem.model, problem.observed, curve_options, config.seed);
    std::optional<double> d_min;
    double prev_eps = std::numeric_limits<double>::infinity();
    if (pop) {
        prev_eps = pop->epsilon;
        const auto d = pop->distances();
        d_min = *std::min_element(d.begin(), d.end());
    }
    const ThresholdDecision decision = select_threshold(pred.curve, prev_eps, d_min, config.scheduler.adaptive.selection);

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path base(out_dir);
    std::optional<PredictionError> check;
    if (mc_check) {
        check = curve_prediction_error(pred.curve, draw, problem.model, problem.observed, mc_draws,
                                       derive_seed(config.seed, {0xc4ecULL}));
        const auto mc = hard_rates(check->mc_distances, pred.curve.grid);
        write_curve_csv((base / "curve.csv").string(), pred.curve, &mc);
        CsvTable t;
        t.header = {"epsilon", "predicted_rate", "mc_rate"};
        for (std::size_t i = 0; i < check->epsilons.size(); ++i) {
            t.rows.push_back({check->epsilons[i], check->predicted[i], check->monte_carlo[i]});
        }
        write_csv((base / "curve_check.csv").string(), t);
    } else {
        write_curve_csv((base / "curve.csv").string(), pred.curve);
    }
    {
        std::ofstream mix((base / "mixture.json").string());
        mix << nlohmann::json{{"parameter", mixture_json(pred.parameter_mixture)},
                              {"output", mixture_json(pred.output_mixture)}}
                   .dump(2)
            << '\n';
    }

    std::cout << "components: " << pred.components << "\n"
              << "model evaluations: " << pred.model_evaluations << "\n"
              << "epsilon*: " << decision.epsilon_star.value_or(std::numeric_limits<double>::quiet_NaN()) << "\n"
              << "rule: " << to_string(decision.rule) << "\n"
              << "chosen epsilon: " << decision.epsilon << "\n";
    if (check) std::cout << "mc mse: " << check->mse << " (" << check->simulations << " simulations)\n";
    std::cout << "output: " << out_dir << "\n";
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ABC SMC with unscented-transform threshold selection"};
    app.require_subcommand(1);
    app.fallthrough();
    bool verbose = false;
    bool quiet = false;
    app.add_flag("-v,--verbose", verbose, "Log every round");
    app.add_flag("-q,--quiet", quiet, "Suppress warnings");

    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;

    auto* run = app.add_subcommand("run", "Run one inference from a config file");
    run->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "Run directory (overrides the config)");
    run->add_option("--seed", seed, "Seed (overrides the config)");

    std::string suite;
    int repeats = 10;
    std::uint64_t bench_seed = 1;
    int particles = 100;
    std::vector<int> points;
    std::vector<double> alphas;
    std::string report = "report.csv";
    auto* bench = app.add_subcommand("benchmark", "Run a benchmark suite");
    bench->add_option("--suite", suite, "Suite name")->required()->check(CLI::IsMember(suite_names()));
    bench->add_option("--repeats", repeats, "Repeats per cell")->check(CLI::PositiveNumber);
    bench->add_option("--seed", bench_seed, "Base seed");
    bench->add_option("--out", report, "Report CSV path");
    bench->add_option("--particles", particles, "Population size N")->check(CLI::Range(2, 1'000'000));
    bench->add_option("--points", points, "Hopf data sizes T (hopf suite)")->delimiter(',');
    bench->add_option("--alphas", alphas, "Quantile schedules to compare")->delimiter(',');

    std::string population;
    bool mc_check = false;
    int mc_draws = 10'000;
    std::string curve_out = "curve";
    auto* curve = app.add_subcommand("curve", "Predict the threshold/acceptance-rate curve for one round");
    curve->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    curve->add_option("--population", population, "pop_<t>.csv to predict the next round from (default: prior)");
    curve->add_flag("--mc-check", mc_check, "Compare against brute-force Monte Carlo");
    curve->add_option("--mc-draws", mc_draws, "Monte Carlo simulations for --mc-check")->check(CLI::Range(100, 100'000'000));
    curve->add_option("--out", curve_out, "Output directory");
    curve->add_option("--seed", seed, "Seed (overrides the config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_failure;
    }
    log::set_level(quiet ? log::Level::quiet : verbose ? log::Level::info : log::Level::warning);

    try {
        if (*run) return cmd_run(config_path, out, seed);
        if (*bench) return cmd_benchmark(suite, repeats, bench_seed, report, particles, points, alphas);
        if (*curve) return cmd_curve(config_path, population, mc_check, mc_draws, curve_out, seed);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_failure;
    } catch (const ConfigurationError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return config_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return runtime_failure;
    }
    return runtime_failure;
}
