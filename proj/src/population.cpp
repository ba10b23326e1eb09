#include "utabc/population.hpp"

#include <cmath>
#include <stdexcept>

namespace utabc {

std::vector<Vector> Population::thetas() const {
    std::vector<Vector> out;
    out.reserve(particles.size());
    for (const auto& p : particles) out.push_back(p.theta);
    return out;
}

std::vector<double> Population::weights() const {
    std::vector<double> out;
    out.reserve(particles.size());
    for (const auto& p : particles) out.push_back(p.weight);
    return out;
}

std::vector<double> Population::distances() const {
    std::vector<double> out;
    out.reserve(particles.size());
    for (const auto& p : particles) out.push_back(p.distance);
    return out;
}

void Population::normalize_weights() {
    double total = 0.0;
    for (const auto& p : particles) total += p.weight;
    if (!(total > 0.0) || !std::isfinite(total)) throw std::domain_error("population weights sum to zero or overflow");
    for (auto& p : particles) p.weight /= total;
}

Vector Population::weighted_mean() const {
    const auto t = thetas();
    const auto w = weights();
    return utabc::weighted_mean(t, w);
}

PerturbationKernel::PerturbationKernel(Matrix covariance) : covariance_(symmetrize(covariance)) {
    if (covariance_.rows() == 0) throw std::invalid_argument("PerturbationKernel: empty covariance");
    Eigen::LLT<Matrix> llt(covariance_);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("PerturbationKernel: covariance is not positive definite");
    }
    chol_ = llt.matrixL();
}

double PerturbationKernel::log_density(const Vector& theta, const Vector& center) const {
    return gaussian_log_density(theta, center, chol_);
}

double PerturbationKernel::density(const Vector& theta, const Vector& center) const {
    return std::exp(log_density(theta, center));
}

Vector PerturbationKernel::perturb(const Vector& center, RandomEngine& rng) const {
    return center + chol_ * standard_normal_vector(center.size(), rng);
}

}  // namespace utabc
