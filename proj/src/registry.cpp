#include "utabc/registry.hpp"

#include <cmath>
#include <stdexcept>

namespace utabc {

namespace {

ModelSpec default_linear_model() {
    Matrix a(3, 2);
    a << 1.0, 0.5, -0.3, 2.0, 0.7, 0.2;
    const Vector b = (Vector(3) << 0.5, -1.0, 2.0).finished();
    return linear_model(a, b, 0.25 * Matrix::Identity(3, 3), DistanceMetric::l2);
}

Problem assemble(ModelSpec model, Prior prior, Vector truth, double target, const ProblemSettings& s) {
    if (s.prior) prior = *s.prior;
    if (s.true_theta) truth = *s.true_theta;
    if (prior.dim() != model.parameter_dim() || truth.size() != model.parameter_dim()) {
        throw std::invalid_argument("problem '" + model.name() + "': prior or true parameter has the wrong dimension");
    }
    RandomEngine rng(s.data_seed);
    Dataset observed = simulate(model, truth, rng);
    return Problem{std::move(model), std::move(prior), std::move(truth), std::move(observed), target};
}

Vector scalar(double v) { return Vector::Constant(1, v); }

}  // namespace

const std::vector<std::string>& model_names() {
    static const std::vector<std::string> names{"toy", "quadratic", "gaussian-pdf", "linear", "repressilator", "hopf"};
    return names;
}

Problem make_problem(const std::string& name, const ProblemSettings& s) {
    if (name == "toy") {
        return assemble(toy_model(), Prior({PriorFactor::normal(10.0, 10.0)}), scalar(3.0), 1.0, s);
    }
    if (name == "quadratic") {
        return assemble(quadratic_model(), Prior({PriorFactor::normal(0.0, 4.0)}), scalar(1.0), 0.01, s);
    }
    if (name == "gaussian-pdf") {
        return assemble(gaussian_pdf_model(), Prior({PriorFactor::normal(0.0, 4.0)}), scalar(0.5), 0.001, s);
    }
    if (name == "linear") {
        return assemble(default_linear_model(), Prior({PriorFactor::normal(0.0, 1.0), PriorFactor::normal(0.0, 1.0)}),
                        (Vector(2) << 0.5, -0.5).finished(), 1.0, s);
    }
    if (name == "repressilator") {
        Prior prior({PriorFactor::normal(2.0, 1.0, 0.0), PriorFactor::normal(4.0, 4.0, 0.0),
                     PriorFactor::normal(1000.0, 200.0 * 200.0, 0.0), PriorFactor::normal(1.0, 0.25, 0.0)});
        return assemble(repressilator_model(), std::move(prior), (Vector(4) << 2.0, 4.0, 1000.0, 1.0).finished(),
                        35.0, s);
    }
    if (name == "hopf") {
        const int t = s.hopf_points;
        return assemble(hopf_model(t), Prior({PriorFactor::uniform(0.0, 10.0)}), scalar(5.5),
                        std::sqrt(80.0 * t), s);
    }
    throw std::invalid_argument("unknown model '" + name + "'");
}

}  // namespace utabc
