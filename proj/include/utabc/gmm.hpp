#pragma once

#include "utabc/linalg.hpp"
#include "utabc/random.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace utabc {

struct GaussianComponent {
    double weight = 1.0;
    Vector mean;
    Matrix covariance;
};

/// Weighted sum of Gaussians. Weights are normalized on construction and
/// every covariance gets a cached square-root factor for sampling.
class GaussianMixture {
public:
    GaussianMixture() = default;
    explicit GaussianMixture(std::vector<GaussianComponent> components);

    const std::vector<GaussianComponent>& components() const { return components_; }
    std::size_t size() const { return components_.size(); }
    int dim() const { return components_.empty() ? 0 : static_cast<int>(components_.front().mean.size()); }

    /// Requires positive-definite covariances.
    double log_density(const Vector& x) const;

    /// Column-stacked draws (dim x m), grouped by component. With
    /// `stratified` the component counts are proportional (remainder drawn
    /// at random) and every coordinate of the standard-normal scores is
    /// Latin-hypercube stratified, so each draw is still marginally exact.
    Matrix sample_matrix(int m, RandomEngine& rng, bool stratified = false) const;

private:
    std::vector<GaussianComponent> components_;
    std::vector<Matrix> factors_;
};

std::vector<Vector> sample_mixture(const GaussianMixture& mix, int m, RandomEngine& rng);

struct EmOptions {
    int max_iter = 200;
    double tol = 1e-6;            // relative log-likelihood change
    double floor_scale = 1e-6;    // eigenvalue floor = floor_scale * average variance
    int max_reinitializations = 3;
};

struct EmFit {
    GaussianMixture mixture;
    /// sum_i w_i log q(x_i) with weights normalized to one.
    double log_likelihood = 0.0;
    /// Log-likelihood after every EM iteration (index 0 = initialization).
    std::vector<double> trace;
    /// Iterations (indices into trace) that followed a component reinitialization.
    std::vector<int> reinit_iterations;
    int iterations = 0;
    bool converged = false;
    std::vector<std::string> warnings;
};

/// Weighted-data EM with k-means++ seeding. Empty components are
/// reseeded from a random point; after more than `max_reinitializations`
/// the best fit seen so far is returned with a warning.
EmFit fit_em(std::span<const Vector> points, std::span<const double> weights, int k, std::uint64_t seed,
             const EmOptions& options = {});

/// Free parameters of a K-component, L-dimensional full-covariance mixture.
int mixture_parameter_count(int k, int dim);
double effective_sample_size(std::span<const double> weights);
double bic(const EmFit& fit, int k, int dim, double n_eff);

struct ComponentSelection {
    EmFit fit;
    int k = 1;
    std::vector<double> bic;  // one per K tried, starting at K = 1
};

/// Fits K = 1..k_max (skipping K with fewer than K (L + 1) points) and keeps the lowest BIC.
ComponentSelection select_components(std::span<const Vector> points, std::span<const double> weights, int k_max,
                                     std::uint64_t seed, const EmOptions& options = {});

}  // namespace utabc
