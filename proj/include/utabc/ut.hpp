#pragma once

#include "utabc/gmm.hpp"
#include "utabc/linalg.hpp"
#include "utabc/models.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace utabc {

/// Scaling of the sigma-point set. kappa defaults to 3 - L. With alpha = 1
/// the centre covariance weight already carries the fourth-moment term, so
/// beta = 2 - 2 alpha^2 = 0 keeps the variance of a quadratic exact.
struct UtParams {
    double alpha = 1.0;
    double beta = 0.0;
    std::optional<double> kappa;

    double kappa_for(int dim) const { return kappa.value_or(3.0 - dim); }
};

/// 2L + 1 scaled sigma points for one Gaussian.
struct SigmaPointSet {
    std::vector<Vector> points;
    std::vector<double> mean_weights;
    std::vector<double> cov_weights;
    double alpha = 1.0;
    double beta = 2.0;
    double kappa = 0.0;
    double lambda = 0.0;
};

/// Sigma points from the lower Cholesky factor of (L + lambda) cov.
/// A failed factorization is retried once with a small ridge; a second
/// failure throws std::domain_error.
SigmaPointSet sigma_points(const Vector& mean, const Matrix& cov, double alpha, double beta, double kappa);

struct OutputGaussian {
    Vector mean;
    Matrix covariance;      // propagated covariance + observation noise
    double clipped = 0.0;   // spectrum mass added to make the propagated part PSD
};

/// Mean and covariance of g(theta) + noise from the sigma points. Any
/// SimulationFailure from g propagates.
OutputGaussian ut_propagate(const SigmaPointSet& sp, const std::function<Vector(const Vector&)>& g,
                            const Matrix& noise_covariance);

/// Thrown when no mixture component survives propagation.
class CurvePredictionFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OutputMixture {
    GaussianMixture mixture;
    long model_evaluations = 0;
    int dropped_components = 0;
};

/// Pushes every component of a parameter-space mixture through the
/// noiseless model. Components whose sigma points fail to simulate are
/// dropped; the rest keep their relative weights.
OutputMixture predict_output_mixture(const GaussianMixture& param_mix, const ModelSpec& model, const UtParams& params);

}  // namespace utabc
