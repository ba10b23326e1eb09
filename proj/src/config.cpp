#include "utabc/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace utabc {

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(line > 0 ? source + ":" + std::to_string(line) + ": " + message : source + ": " + message),
      line_(line) {}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> words(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    for (std::string w; is >> w;) out.push_back(w);
    return out;
}

double to_double(const std::string& s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw std::invalid_argument("expected a number, got '" + s + "'");
    }
    return v;
}

template <class Int>
Int to_integer(const std::string& s) {
    Int v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw std::invalid_argument("expected an integer, got '" + s + "'");
    return v;
}

double positive(double v, const char* what) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + " must be positive");
    return v;
}

PriorFactor parse_prior_factor(const std::string& value) {
    const auto w = words(value);
    if (w.size() == 3 && w[0] == "uniform") return PriorFactor::uniform(to_double(w[1]), to_double(w[2]));
    if (w.size() == 3 && w[0] == "normal") return PriorFactor::normal(to_double(w[1]), to_double(w[2]));
    if (w.size() == 5 && w[0] == "normal" && w[3] == "truncate") {
        return PriorFactor::normal(to_double(w[1]), to_double(w[2]), to_double(w[4]));
    }
    throw std::invalid_argument("expected 'normal <mean> <variance> [truncate <low>]' or 'uniform <low> <high>'");
}

Vector parse_vector(const std::string& value) {
    const auto w = words(value);
    if (w.empty()) throw std::invalid_argument("expected at least one number");
    Vector v(static_cast<Eigen::Index>(w.size()));
    for (std::size_t i = 0; i < w.size(); ++i) v[static_cast<Eigen::Index>(i)] = to_double(w[i]);
    return v;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table{
        {"model", [](RunConfig& c, const std::string& v) { c.model = v; }},
        {"true_theta", [](RunConfig& c, const std::string& v) { c.true_theta = parse_vector(v); }},
        {"hopf_points",
         [](RunConfig& c, const std::string& v) {
             c.hopf_points = to_integer<int>(v);
             if (c.hopf_points < 1) throw std::invalid_argument("hopf_points must be >= 1");
         }},
        {"data_seed", [](RunConfig& c, const std::string& v) { c.data_seed = to_integer<std::uint64_t>(v); }},
        {"n_particles",
         [](RunConfig& c, const std::string& v) {
             c.n_particles = to_integer<int>(v);
             if (c.n_particles < 2) throw std::invalid_argument("n_particles must be >= 2");
         }},
        {"target_epsilon", [](RunConfig& c, const std::string& v) { c.target_epsilon = positive(to_double(v), "target_epsilon"); }},
        {"budget",
         [](RunConfig& c, const std::string& v) {
             c.budget = to_integer<long>(v);
             if (c.budget < 1) throw std::invalid_argument("budget must be positive");
         }},
        {"seed", [](RunConfig& c, const std::string& v) { c.seed = to_integer<std::uint64_t>(v); }},
        {"output", [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
        {"scheduler",
         [](RunConfig& c, const std::string& v) {
             if (v == "adaptive") c.scheduler.kind = SchedulerConfig::Kind::adaptive;
             else if (v == "quantile") c.scheduler.kind = SchedulerConfig::Kind::quantile;
             else throw std::invalid_argument("scheduler must be 'adaptive' or 'quantile'");
         }},
        {"alpha",
         [](RunConfig& c, const std::string& v) {
             c.scheduler.alpha = to_double(v);
             if (!(c.scheduler.alpha > 0.0 && c.scheduler.alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
         }},
        {"delta",
         [](RunConfig& c, const std::string& v) {
             const double d = to_double(v);
             if (d < 0.0 || d > 1.0) throw std::invalid_argument("delta must lie in [0, 1]");
             c.scheduler.adaptive.selection.delta = d;
         }},
        {"mixture_samples",
         [](RunConfig& c, const std::string& v) {
             c.scheduler.adaptive.curve.mixture_samples = to_integer<int>(v);
             if (c.scheduler.adaptive.curve.mixture_samples < 100) throw std::invalid_argument("mixture_samples must be >= 100");
         }},
        {"grid_size",
         [](RunConfig& c, const std::string& v) {
             c.scheduler.adaptive.curve.grid_size = to_integer<int>(v);
             if (c.scheduler.adaptive.curve.grid_size < 10) throw std::invalid_argument("grid_size must be >= 10");
         }},
        {"k_steep",
         [](RunConfig& c, const std::string& v) {
             const double k = positive(to_double(v), "k_steep");
             if (k > max_k_steep) throw std::invalid_argument("k_steep is capped at 500");
             c.scheduler.adaptive.curve.k_steep = k;
         }},
        {"max_components",
         [](RunConfig& c, const std::string& v) {
             c.scheduler.adaptive.curve.max_components = to_integer<int>(v);
             if (c.scheduler.adaptive.curve.max_components < 1) throw std::invalid_argument("max_components must be >= 1");
         }},
        {"stratified",
         [](RunConfig& c, const std::string& v) {
             if (v == "true") c.scheduler.adaptive.curve.stratified = true;
             else if (v == "false") c.scheduler.adaptive.curve.stratified = false;
             else throw std::invalid_argument("stratified must be 'true' or 'false'");
         }},
        {"ut_alpha", [](RunConfig& c, const std::string& v) { c.scheduler.adaptive.curve.ut.alpha = positive(to_double(v), "ut_alpha"); }},
        {"ut_beta", [](RunConfig& c, const std::string& v) { c.scheduler.adaptive.curve.ut.beta = to_double(v); }},
        {"ut_kappa", [](RunConfig& c, const std::string& v) { c.scheduler.adaptive.curve.ut.kappa = to_double(v); }},
        {"fallback_alpha",
         [](RunConfig& c, const std::string& v) {
             const double a = to_double(v);
             if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("fallback_alpha must lie in (0, 1)");
             c.scheduler.adaptive.fallback_alpha = a;
         }},
    };
    return table;
}

}  // namespace

RunConfig parse_config(std::istream& in, const std::string& source) {
    RunConfig config;
    std::map<std::string, int> seen;
    std::map<int, std::pair<int, PriorFactor>> prior_lines;  // dimension -> (line, factor)
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto cut = raw.find_first_of("#;");
        const std::string line = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(source, line_no, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(source, line_no, "missing key");
        if (value.empty()) throw ConfigError(source, line_no, "missing value for '" + key + "'");
        if (auto [it, fresh] = seen.emplace(key, line_no); !fresh) {
            throw ConfigError(source, line_no, "'" + key + "' already set on line " + std::to_string(it->second));
        }
        try {
            if (key.rfind("prior.", 0) == 0) {
                const int dim = to_integer<int>(key.substr(6));
                if (dim < 1) throw std::invalid_argument("prior dimensions are numbered from 1");
                prior_lines.emplace(dim, std::make_pair(line_no, parse_prior_factor(value)));
                continue;
            }
            const auto& table = setters();
            const auto it = table.find(key);
            if (it == table.end()) throw std::invalid_argument("unknown key '" + key + "'");
            it->second(config, value);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(source, line_no, e.what());
        }
    }
    int expected = 1;
    for (const auto& [dim, entry] : prior_lines) {
        if (dim != expected) {
            throw ConfigError(source, entry.first, "prior." + std::to_string(expected) + " is missing");
        }
        config.prior.push_back(entry.second);
        ++expected;
    }
    return config;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, 0, "cannot open file");
    return parse_config(in, path);
}

Problem make_problem(const RunConfig& config) {
    ProblemSettings settings;
    settings.hopf_points = config.hopf_points;
    settings.data_seed = config.data_seed;
    if (!config.prior.empty()) settings.prior = Prior(config.prior);
    settings.true_theta = config.true_theta;
    Problem problem = [&] {
        try {
            return make_problem(config.model, settings);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("config", 0, e.what());
        }
    }();
    if (config.target_epsilon) problem.target_epsilon = *config.target_epsilon;
    return problem;
}

std::unique_ptr<ThresholdScheduler> make_scheduler(const SchedulerConfig& config) {
    if (config.kind == SchedulerConfig::Kind::quantile) return std::make_unique<QuantileScheduler>(config.alpha);
    return std::make_unique<AdaptiveScheduler>(config.adaptive);
}

SmcOptions make_smc_options(const RunConfig& config, const Problem& problem) {
    SmcOptions o;
    o.n_particles = config.n_particles;
    o.target_epsilon = problem.target_epsilon;
    o.budget = config.budget;
    o.seed = config.seed;
    return o;
}

std::string format_config(const RunConfig& c) {
    std::ostringstream os;
    os.precision(17);
    os << "model = " << c.model << '\n';
    for (std::size_t i = 0; i < c.prior.size(); ++i) {
        const auto& f = c.prior[i];
        os << "prior." << i + 1 << " = " << f.describe() << '\n';
    }
    if (c.true_theta) {
        os << "true_theta =";
        for (double v : *c.true_theta) os << ' ' << v;
        os << '\n';
    }
    os << "hopf_points = " << c.hopf_points << '\n'
       << "data_seed = " << c.data_seed << '\n'
       << "n_particles = " << c.n_particles << '\n';
    if (c.target_epsilon) os << "target_epsilon = " << *c.target_epsilon << '\n';
    os << "budget = " << c.budget << '\n' << "seed = " << c.seed << '\n' << "output = " << c.output_dir << '\n';
    const auto& a = c.scheduler.adaptive;
    if (c.scheduler.kind == SchedulerConfig::Kind::quantile) {
        os << "scheduler = quantile\n" << "alpha = " << c.scheduler.alpha << '\n';
    } else {
        os << "scheduler = adaptive\n"
           << "delta = " << a.selection.delta << '\n'
           << "mixture_samples = " << a.curve.mixture_samples << '\n'
           << "grid_size = " << a.curve.grid_size << '\n'
           << "k_steep = " << a.curve.k_steep << '\n'
           << "max_components = " << a.curve.max_components << '\n'
           << "stratified = " << (a.curve.stratified ? "true" : "false") << '\n'
           << "ut_alpha = " << a.curve.ut.alpha << '\n'
           << "ut_beta = " << a.curve.ut.beta << '\n';
        if (a.curve.ut.kappa) os << "ut_kappa = " << *a.curve.ut.kappa << '\n';
        os << "fallback_alpha = " << a.fallback_alpha << '\n';
    }
    return os.str();
}

}  // namespace utabc
