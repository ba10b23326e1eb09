#pragma once

#include "utabc/models.hpp"
#include "utabc/prior.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace utabc {

/// A model together with everything needed to run inference on it.
struct Problem {
    ModelSpec model;
    Prior prior;
    Vector true_theta;
    Dataset observed;
    double target_epsilon = 0.0;
};

struct ProblemSettings {
    int hopf_points = 500;
    std::uint64_t data_seed = 20120601;  // noise on the synthetic observation
    std::optional<Prior> prior;          // overrides the default prior
    std::optional<Vector> true_theta;    // overrides the default ground truth
};

/// "toy", "quadratic", "gaussian-pdf", "linear", "repressilator", "hopf".
const std::vector<std::string>& model_names();

/// Builds the named problem. Observed data are simulate(model, true_theta)
/// with noise drawn from `data_seed` (noise-free models give g(true_theta)).
/// Throws std::invalid_argument for an unknown name.
Problem make_problem(const std::string& name, const ProblemSettings& settings = {});

}  // namespace utabc
