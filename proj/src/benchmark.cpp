#include "utabc/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <sstream>

namespace utabc {

namespace {

std::string quantile_label(double alpha) {
    std::ostringstream os;
    os << "quantile-" << alpha;
    return os.str();
}

void add_methods(BenchmarkSuite& suite, const std::vector<double>& alphas, const SuiteOptions& options) {
    for (double a : alphas) {
        suite.methods.push_back({quantile_label(a), [a] { return std::make_unique<QuantileScheduler>(a); }});
    }
    if (options.include_adaptive) {
        suite.methods.push_back(
            {"adaptive", [opts = options.adaptive] { return std::make_unique<AdaptiveScheduler>(opts); }});
    }
}

}  // namespace

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"toy-quantile-sweep", "repressilator", "hopf"};
    return names;
}

BenchmarkSuite make_suite(const std::string& name, const SuiteOptions& options) {
    BenchmarkSuite suite;
    suite.name = name;
    suite.n_particles = options.n_particles;
    if (name == "toy-quantile-sweep") {
        add_methods(suite, options.alphas.value_or(std::vector<double>{0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}),
                    options);
        suite.datasets.push_back({"toy", make_problem("toy"), 1'000'000});
    } else if (name == "repressilator") {
        add_methods(suite, options.alphas.value_or(std::vector<double>{0.1, 0.3, 0.5, 0.7, 0.9}), options);
        suite.datasets.push_back({"repressilator", make_problem("repressilator"), 1'000'000});
    } else if (name == "hopf") {
        add_methods(suite, options.alphas.value_or(std::vector<double>{0.01, 0.1, 0.3, 0.5, 0.7, 0.9}), options);
        for (int t : options.hopf_points.value_or(std::vector<int>{100, 200, 300, 400, 500})) {
            ProblemSettings s;
            s.hopf_points = t;
            suite.datasets.push_back({"hopf-T" + std::to_string(t), make_problem("hopf", s), 100'000});
        }
    } else {
        throw std::invalid_argument("unknown suite '" + name + "'");
    }
    return suite;
}

BenchmarkRow summarize_run(const RunResult& result, const std::string& method, const std::string& dataset, int repeat,
                           double wall_time) {
    BenchmarkRow row;
    row.method = method;
    row.dataset = dataset;
    row.repeat = repeat;
    row.total_simulations = result.total_simulations;
    for (long s : result.round_simulations) row.round_simulation_sum += s;
    row.terminated = result.terminated;
    row.failed = result.terminated != Termination::target_reached;
    if (result.terminated == Termination::budget_exhausted) row.failure_kind = "budget";
    if (result.terminated == Termination::epsilon_converged) row.failure_kind = "stuck";
    row.wall_time = wall_time;
    row.rounds = static_cast<int>(result.populations.size());
    if (!result.populations.empty()) {
        row.final_epsilon = result.populations.back().epsilon;
        row.final_mean = result.populations.back().weighted_mean();
    }
    return row;
}

std::vector<BenchmarkRow> run_suite(const BenchmarkSuite& suite, int repeats, std::uint64_t seed,
                                    const std::function<void(const BenchmarkRow&)>& on_row) {
    if (repeats < 1) throw std::invalid_argument("run_suite: repeats must be >= 1");
    std::vector<BenchmarkRow> rows;
    for (std::size_t d = 0; d < suite.datasets.size(); ++d) {
        const BenchmarkDataset& ds = suite.datasets[d];
        for (const auto& method : suite.methods) {
            for (int r = 0; r < repeats; ++r) {
                SmcOptions o;
                o.n_particles = suite.n_particles;
                o.target_epsilon = ds.problem.target_epsilon;
                o.budget = ds.cap;
                o.seed = derive_seed(seed, {d, static_cast<std::uint64_t>(r)});
                const auto start = std::chrono::steady_clock::now();
                BenchmarkRow row;
                try {
                    auto scheduler = method.make();
                    const RunResult result = run_abc_smc(ds.problem.model, ds.problem.prior, ds.problem.observed,
                                                         *scheduler, o);
                    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
                    row = summarize_run(result, method.label, ds.label, r, elapsed.count());
                } catch (const std::exception& e) {
                    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
                    row.method = method.label;
                    row.dataset = ds.label;
                    row.repeat = r;
                    row.failed = true;
                    row.failure_kind = std::string("error: ") + e.what();
                    row.wall_time = elapsed.count();
                }
                if (on_row) on_row(row);
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

void write_report_csv(const std::string& path, const std::vector<BenchmarkRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    out << "method,dataset,repeat,total_simulations,failed,failure_kind,final_epsilon,wall_time,final_mean\n";
    for (const auto& r : rows) {
        std::string kind = r.failure_kind;
        std::replace(kind.begin(), kind.end(), ',', ';');
        out << r.method << ',' << r.dataset << ',' << r.repeat << ',' << r.total_simulations << ','
            << (r.failed ? 1 : 0) << ',' << kind << ',';
        if (r.final_epsilon) out << *r.final_epsilon;
        out << ',' << r.wall_time << ',';
        if (r.final_mean) {
            for (Eigen::Index i = 0; i < r.final_mean->size(); ++i) out << (i ? " " : "") << (*r.final_mean)[i];
        }
        out << '\n';
    }
}

std::vector<MethodStats> summarize(const std::vector<BenchmarkRow>& rows) {
    std::vector<MethodStats> out;
    std::map<std::pair<std::string, std::string>, std::vector<double>> sims;
    for (const auto& r : rows) {
        const auto key = std::make_pair(r.method, r.dataset);
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const MethodStats& s) { return s.method == r.method && s.dataset == r.dataset; });
        if (it == out.end()) {
            out.push_back({r.method, r.dataset, 0, 0, 0.0});
            it = std::prev(out.end());
        }
        ++it->runs;
        if (r.failed) ++it->failures;
        sims[key].push_back(static_cast<double>(r.total_simulations));
    }
    for (auto& s : out) {
        auto v = sims[{s.method, s.dataset}];
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        s.median_simulations = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    }
    return out;
}

}  // namespace utabc
