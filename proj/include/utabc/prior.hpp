#pragma once

#include "utabc/linalg.hpp"
#include "utabc/random.hpp"

#include <optional>
#include <string>
#include <vector>

namespace utabc {

/// One independent prior factor: a Gaussian (optionally truncated from
/// below) or a uniform distribution.
struct PriorFactor {
    enum class Kind { normal, uniform };

    Kind kind = Kind::normal;
    double first = 0.0;   // mean (normal) or low (uniform)
    double second = 1.0;  // variance (normal) or high (uniform)
    std::optional<double> lower_truncation;  // normal only

    static PriorFactor normal(double mean, double variance, std::optional<double> truncate_below = std::nullopt);
    static PriorFactor uniform(double low, double high);

    double density(double x) const;
    double sample(RandomEngine& rng) const;
    std::string describe() const;
};

/// Product of independent per-dimension factors.
class Prior {
public:
    Prior() = default;
    explicit Prior(std::vector<PriorFactor> factors);

    int dim() const { return static_cast<int>(factors_.size()); }
    const std::vector<PriorFactor>& factors() const { return factors_; }

    double density(const Vector& theta) const;
    bool in_support(const Vector& theta) const { return density(theta) > 0.0; }
    Vector sample(RandomEngine& rng) const;

private:
    std::vector<PriorFactor> factors_;
};

}  // namespace utabc
