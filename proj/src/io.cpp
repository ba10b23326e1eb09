#include "utabc/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace utabc {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    return out;
}

nlohmann::json optional_number(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json vector_json(const Vector& v) {
    nlohmann::json a = nlohmann::json::array();
    for (double x : v) a.push_back(x);
    return a;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw std::out_of_range("no column '" + name + "'");
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    t.header = split(line);
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != t.header.size()) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(t.header.size()) + " columns");
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(c, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != c.size() || c.empty()) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad number '" + c + "'");
            }
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_csv(const std::string& path, const CsvTable& table) {
    auto out = open_out(path);
    for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << '\n';
    }
}

void write_population_csv(const std::string& path, const Population& pop) {
    CsvTable t;
    const int dim = pop.dim();
    for (int i = 1; i <= dim; ++i) t.header.push_back("theta_" + std::to_string(i));
    t.header.emplace_back("weight");
    t.header.emplace_back("distance");
    for (const auto& p : pop.particles) {
        std::vector<double> row(p.theta.begin(), p.theta.end());
        row.push_back(p.weight);
        row.push_back(p.distance);
        t.rows.push_back(std::move(row));
    }
    write_csv(path, t);
}

Population read_population_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    const std::size_t w = t.column("weight");
    const std::size_t d = t.column("distance");
    if (w < 1 || w + 2 != t.header.size() || d != w + 1) {
        throw std::runtime_error(path + ": expected columns theta_1..theta_L, weight, distance");
    }
    Population pop;
    for (const auto& row : t.rows) {
        Particle p;
        p.theta = Eigen::Map<const Vector>(row.data(), static_cast<Eigen::Index>(w));
        p.weight = row[w];
        p.distance = row[d];
        pop.epsilon = std::max(pop.epsilon, p.distance);
        pop.particles.push_back(std::move(p));
    }
    if (pop.particles.size() < 2) throw std::runtime_error(path + ": need at least two particles");
    pop.normalize_weights();
    return pop;
}

void write_curve_csv(const std::string& path, const AcceptanceCurve& curve, const std::vector<double>* mc_rates) {
    CsvTable t;
    t.header = {"epsilon", "predicted_rate", "curvature"};
    if (mc_rates) {
        if (mc_rates->size() != curve.grid.size()) throw std::invalid_argument("write_curve_csv: mc_rates size mismatch");
        t.header.emplace_back("mc_rate");
    }
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        std::vector<double> row{curve.grid[i], curve.rates[i], curve.second_derivs[i]};
        if (mc_rates) row.push_back((*mc_rates)[i]);
        t.rows.push_back(std::move(row));
    }
    write_csv(path, t);
}

nlohmann::json decision_json(const ThresholdDecision& d, int round) {
    return {{"round", round},
            {"rule", to_string(d.rule)},
            {"epsilon", d.epsilon},
            {"epsilon_star", optional_number(d.epsilon_star)},
            {"predicted_rate", optional_number(d.predicted_rate)},
            {"d_min", optional_number(d.d_min)},
            {"converged", d.converged},
            {"model_evaluations", d.model_evaluations},
            {"note", d.note}};
}

nlohmann::json mixture_json(const GaussianMixture& mixture) {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : mixture.components()) {
        nlohmann::json cov = nlohmann::json::array();
        for (Eigen::Index i = 0; i < c.covariance.rows(); ++i) cov.push_back(vector_json(c.covariance.row(i).transpose()));
        comps.push_back({{"weight", c.weight}, {"mean", vector_json(c.mean)}, {"covariance", cov}});
    }
    return {{"components", comps}};
}

nlohmann::json run_summary_json(const RunResult& result, const RunInfo& info) {
    nlohmann::json rounds = nlohmann::json::array();
    for (std::size_t i = 0; i < result.populations.size(); ++i) {
        const Population& p = result.populations[i];
        nlohmann::json r{{"round", p.round_index},
                         {"epsilon", p.epsilon},
                         {"acceptance_rate", p.acceptance_rate()},
                         {"proposals", p.proposals},
                         {"simulations", result.round_simulations.at(i)},
                         {"posterior_mean", vector_json(p.weighted_mean())}};
        if (i < result.decisions.size()) {
            const auto& d = result.decisions[i];
            r["rule"] = to_string(d.rule);
            r["epsilon_star"] = optional_number(d.epsilon_star);
            r["predicted_rate"] = optional_number(d.predicted_rate);
        }
        rounds.push_back(std::move(r));
    }
    nlohmann::json summary{{"model", info.model},
                           {"scheduler", info.scheduler},
                           {"n_particles", info.n_particles},
                           {"target_epsilon", info.target_epsilon},
                           {"budget", info.budget},
                           {"seed", info.seed},
                           {"terminated", to_string(result.terminated)},
                           {"total_simulations", result.total_simulations},
                           {"round_simulations", result.round_simulations},
                           {"d_min", optional_number(result.d_min)},
                           {"rounds", rounds}};
    if (!result.populations.empty()) {
        summary["final_epsilon"] = result.populations.back().epsilon;
        summary["final_mean"] = vector_json(result.populations.back().weighted_mean());
    } else {
        summary["final_epsilon"] = nullptr;
        summary["final_mean"] = nullptr;
    }
    return summary;
}

void write_run_directory(const std::string& dir, const RunResult& result, const RunInfo& info) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    for (const auto& p : result.populations) {
        write_population_csv((base / ("pop_" + std::to_string(p.round_index) + ".csv")).string(), p);
    }
    auto log = open_out((base / "decisions.jsonl").string());
    for (std::size_t i = 0; i < result.decisions.size(); ++i) {
        const int round = static_cast<int>(i) + 1;
        const auto& d = result.decisions[i];
        log << decision_json(d, round).dump() << '\n';
        if (d.curve) write_curve_csv((base / ("curve_" + std::to_string(round) + ".csv")).string(), *d.curve);
    }
    auto out = open_out((base / "summary.json").string());
    out << run_summary_json(result, info).dump(2) << '\n';
}

}  // namespace utabc
