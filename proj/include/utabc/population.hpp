#pragma once

#include "utabc/linalg.hpp"
#include "utabc/random.hpp"

#include <vector>

namespace utabc {

struct Particle {
    Vector theta;
    double weight = 0.0;
    double distance = 0.0;  // distance of the simulation that got it accepted
};

struct Population {
    std::vector<Particle> particles;
    int round_index = 1;
    double epsilon = 0.0;
    long proposals = 0;         // simulate calls made by the accept/reject loop
    long simulations_used = 0;  // all model evaluations charged to this round (loop + scheduler)

    std::size_t size() const { return particles.size(); }
    int dim() const { return particles.empty() ? 0 : static_cast<int>(particles.front().theta.size()); }
    double acceptance_rate() const {
        return proposals > 0 ? static_cast<double>(particles.size()) / static_cast<double>(proposals) : 0.0;
    }

    std::vector<Vector> thetas() const;
    std::vector<double> weights() const;
    std::vector<double> distances() const;

    /// Rescales weights to sum to one. Throws std::domain_error when they sum to zero.
    void normalize_weights();
    Vector weighted_mean() const;
};

/// Multivariate normal perturbation kernel K(theta | center).
class PerturbationKernel {
public:
    explicit PerturbationKernel(Matrix covariance);

    const Matrix& covariance() const { return covariance_; }
    const Matrix& cholesky() const { return chol_; }
    int dim() const { return static_cast<int>(covariance_.rows()); }

    double log_density(const Vector& theta, const Vector& center) const;
    double density(const Vector& theta, const Vector& center) const;
    Vector perturb(const Vector& center, RandomEngine& rng) const;

    /// Set by adapt_kernel when the covariance needed the regularization floor.
    bool regularized = false;

private:
    Matrix covariance_;
    Matrix chol_;
};

}  // namespace utabc
