#include "utabc/prior.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace utabc {

PriorFactor PriorFactor::normal(double mean, double variance, std::optional<double> truncate_below) {
    if (!(variance > 0.0) || !std::isfinite(mean)) throw std::invalid_argument("normal prior needs variance > 0");
    if (truncate_below) {
        // Keep at least a sliver of mass above the truncation point so the
        // rejection sampler terminates.
        const double z = (*truncate_below - mean) / std::sqrt(variance);
        if (z > 6.0) throw std::invalid_argument("normal prior truncated above nearly all of its mass");
    }
    return PriorFactor{Kind::normal, mean, variance, truncate_below};
}

PriorFactor PriorFactor::uniform(double low, double high) {
    if (!(high > low)) throw std::invalid_argument("uniform prior needs high > low");
    return PriorFactor{Kind::uniform, low, high, std::nullopt};
}

double PriorFactor::density(double x) const {
    if (kind == Kind::uniform) return (x >= first && x <= second) ? 1.0 / (second - first) : 0.0;
    if (lower_truncation && x < *lower_truncation) return 0.0;
    const double sd = std::sqrt(second);
    const double z = (x - first) / sd;
    double pdf = std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
    if (lower_truncation) {
        const double a = (*lower_truncation - first) / sd;
        pdf /= 0.5 * std::erfc(a / std::numbers::sqrt2);
    }
    return pdf;
}

double PriorFactor::sample(RandomEngine& rng) const {
    if (kind == Kind::uniform) return std::uniform_real_distribution<double>(first, second)(rng);
    std::normal_distribution<double> normal(first, std::sqrt(second));
    for (;;) {
        const double x = normal(rng);
        if (!lower_truncation || x >= *lower_truncation) return x;
    }
}

std::string PriorFactor::describe() const {
    std::ostringstream os;
    os.precision(17);
    if (kind == Kind::uniform) {
        os << "uniform " << first << ' ' << second;
    } else {
        os << "normal " << first << ' ' << second;
        if (lower_truncation) os << " truncate " << *lower_truncation;
    }
    return os.str();
}

Prior::Prior(std::vector<PriorFactor> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) throw std::invalid_argument("Prior: need at least one dimension");
}

double Prior::density(const Vector& theta) const {
    if (theta.size() != dim()) throw std::invalid_argument("Prior::density: dimension mismatch");
    double p = 1.0;
    for (int i = 0; i < dim(); ++i) {
        p *= factors_[static_cast<std::size_t>(i)].density(theta[i]);
        if (p == 0.0) break;
    }
    return p;
}

Vector Prior::sample(RandomEngine& rng) const {
    Vector theta(dim());
    for (int i = 0; i < dim(); ++i) theta[i] = factors_[static_cast<std::size_t>(i)].sample(rng);
    return theta;
}

}  // namespace utabc
