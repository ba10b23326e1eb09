#include "utabc/gmm.hpp"

#include "utabc/log.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace utabc {

GaussianMixture::GaussianMixture(std::vector<GaussianComponent> components) : components_(std::move(components)) {
    if (components_.empty()) throw std::invalid_argument("GaussianMixture: need at least one component");
    const auto dim = components_.front().mean.size();
    double total = 0.0;
    for (const auto& c : components_) {
        if (c.mean.size() != dim || c.covariance.rows() != dim || c.covariance.cols() != dim) {
            throw std::invalid_argument("GaussianMixture: inconsistent component dimensions");
        }
        if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) {
            throw std::invalid_argument("GaussianMixture: weights must be finite and non-negative");
        }
        total += c.weight;
    }
    if (!(total > 0.0)) throw std::invalid_argument("GaussianMixture: weights sum to zero");
    factors_.reserve(components_.size());
    for (auto& c : components_) {
        c.weight /= total;
        c.covariance = symmetrize(c.covariance);
        factors_.push_back(sqrt_factor(c.covariance));
    }
}

double GaussianMixture::log_density(const Vector& x) const {
    double peak = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    terms.reserve(components_.size());
    for (const auto& c : components_) {
        if (c.weight == 0.0) continue;
        Eigen::LLT<Matrix> llt(c.covariance);
        if (llt.info() != Eigen::Success) throw std::domain_error("log_density: covariance not positive definite");
        const double l = std::log(c.weight) + gaussian_log_density(x, c.mean, llt.matrixL());
        terms.push_back(l);
        peak = std::max(peak, l);
    }
    double s = 0.0;
    for (double t : terms) s += std::exp(t - peak);
    return peak + std::log(s);
}

namespace {

std::vector<int> component_counts(std::span<const double> w, int m, bool stratified, RandomEngine& rng) {
    std::vector<int> counts(w.size(), 0);
    int assigned = 0;
    std::vector<double> remainder(w.begin(), w.end());
    if (stratified) {
        for (std::size_t k = 0; k < w.size(); ++k) {
            counts[k] = static_cast<int>(std::floor(w[k] * m));
            remainder[k] = w[k] * m - counts[k];
            assigned += counts[k];
        }
        if (assigned == m) return counts;
    }
    std::discrete_distribution<std::size_t> pick(remainder.begin(), remainder.end());
    for (int i = assigned; i < m; ++i) ++counts[pick(rng)];
    return counts;
}

// z(i, j) = Phi^-1((perm_i(j) + u) / n), one independent permutation per row.
void latin_hypercube_normal(Matrix& z, RandomEngine& rng) {
    const auto n = z.cols();
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        std::iota(perm.begin(), perm.end(), Eigen::Index{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double p = (static_cast<double>(perm[static_cast<std::size_t>(j)]) + unit(rng)) / static_cast<double>(n);
            z(i, j) = -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * std::clamp(p, 1e-300, 1.0 - 1e-16));
        }
    }
}

}  // namespace

Matrix GaussianMixture::sample_matrix(int m, RandomEngine& rng, bool stratified) const {
    if (m < 1) throw std::invalid_argument("sample_mixture: need M >= 1");
    if (components_.empty()) throw std::invalid_argument("sample_mixture: empty mixture");
    std::vector<double> w;
    for (const auto& c : components_) w.push_back(c.weight);
    const std::vector<int> counts = component_counts(w, m, stratified, rng);

    const int dim = this->dim();
    Matrix out(dim, m);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::Index col = 0;
    for (std::size_t k = 0; k < components_.size(); ++k) {
        if (counts[k] == 0) continue;
        const Matrix& f = factors_[k];
        Matrix z(f.cols(), counts[k]);
        if (stratified) {
            latin_hypercube_normal(z, rng);
        } else {
            for (Eigen::Index j = 0; j < z.cols(); ++j) {
                for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = normal(rng);
            }
        }
        auto block = out.middleCols(col, counts[k]);
        block.noalias() = f * z;
        block.colwise() += components_[k].mean;
        col += counts[k];
    }
    return out;
}

std::vector<Vector> sample_mixture(const GaussianMixture& mix, int m, RandomEngine& rng) {
    const Matrix draws = mix.sample_matrix(m, rng);
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < draws.cols(); ++j) out.emplace_back(draws.col(j));
    return out;
}

namespace {

struct EmState {
    std::vector<double> alpha;
    std::vector<Vector> mean;
    std::vector<Matrix> cov;
};

std::size_t pick_weighted(std::span<const double> w, RandomEngine& rng) {
    std::discrete_distribution<std::size_t> d(w.begin(), w.end());
    return d(rng);
}

void apply_floor(Matrix& cov, double floor) {
    cov = symmetrize(cov);
    if (min_eigenvalue(cov) < floor) clip_eigenvalues(cov, floor);
}

// Fills log-responsibilities normalized per row; returns sum_i w_i log q(x_i).
double e_step(std::span<const Vector> x, std::span<const double> w, const EmState& s, Matrix& resp) {
    const auto n = static_cast<Eigen::Index>(x.size());
    const auto k = static_cast<Eigen::Index>(s.alpha.size());
    std::vector<Matrix> chol(static_cast<std::size_t>(k));
    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::LLT<Matrix> llt(s.cov[static_cast<std::size_t>(j)]);
        if (llt.info() != Eigen::Success) throw std::domain_error("EM: component covariance lost definiteness");
        chol[static_cast<std::size_t>(j)] = llt.matrixL();
    }
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double peak = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < k; ++j) {
            const auto js = static_cast<std::size_t>(j);
            const double l = s.alpha[js] > 0.0
                                 ? std::log(s.alpha[js]) + gaussian_log_density(x[static_cast<std::size_t>(i)],
                                                                                  s.mean[js], chol[js])
                                 : -std::numeric_limits<double>::infinity();
            resp(i, j) = l;
            peak = std::max(peak, l);
        }
        double sum = 0.0;
        for (Eigen::Index j = 0; j < k; ++j) sum += std::exp(resp(i, j) - peak);
        const double lse = peak + std::log(sum);
        for (Eigen::Index j = 0; j < k; ++j) resp(i, j) = std::exp(resp(i, j) - lse);
        ll += w[static_cast<std::size_t>(i)] * lse;
    }
    return ll;
}

}  // namespace

int mixture_parameter_count(int k, int dim) { return (k - 1) + k * dim + k * dim * (dim + 1) / 2; }

double effective_sample_size(std::span<const double> weights) {
    double s = 0.0, s2 = 0.0;
    for (double w : weights) {
        s += w;
        s2 += w * w;
    }
    return s2 > 0.0 ? s * s / s2 : 0.0;
}

double bic(const EmFit& fit, int k, int dim, double n_eff) {
    return -2.0 * n_eff * fit.log_likelihood + mixture_parameter_count(k, dim) * std::log(n_eff);
}

EmFit fit_em(std::span<const Vector> points, std::span<const double> raw_weights, int k, std::uint64_t seed,
             const EmOptions& options) {
    if (k < 1) throw std::invalid_argument("fit_em: K must be >= 1");
    if (points.size() != raw_weights.size()) throw std::invalid_argument("fit_em: points/weights length mismatch");
    if (points.empty()) throw std::invalid_argument("fit_em: no points");
    const int dim = static_cast<int>(points.front().size());
    if (static_cast<long>(points.size()) < static_cast<long>(k) * (dim + 1)) {
        throw std::invalid_argument("fit_em: need at least K (L + 1) points");
    }

    std::vector<double> w(raw_weights.begin(), raw_weights.end());
    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(wsum > 0.0)) throw std::invalid_argument("fit_em: weights sum to zero");
    for (double& v : w) v /= wsum;

    RandomEngine rng = make_engine(seed, {static_cast<std::uint64_t>(k)});
    const Matrix overall = weighted_covariance(points, w);
    double avg_var = overall.trace() / dim;
    if (!(avg_var > 0.0)) avg_var = 1.0;
    const double floor = options.floor_scale * avg_var;
    Matrix init_cov = overall;
    apply_floor(init_cov, floor);

    // k-means++ seeding, D^2 scaled by point weight
    EmState s;
    s.alpha.assign(static_cast<std::size_t>(k), 1.0 / k);
    s.mean.push_back(points[pick_weighted(w, rng)]);
    std::vector<double> d2(points.size());
    while (static_cast<int>(s.mean.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& m : s.mean) best = std::min(best, (points[i] - m).squaredNorm());
            d2[i] = w[i] * best;
            total += d2[i];
        }
        s.mean.push_back(total > 0.0 ? points[pick_weighted(d2, rng)] : points[pick_weighted(w, rng)]);
    }
    s.cov.assign(static_cast<std::size_t>(k), init_cov);

    const auto n = static_cast<Eigen::Index>(points.size());
    Matrix resp(n, k);
    EmFit fit;
    double ll = e_step(points, w, s, resp);
    fit.trace.push_back(ll);
    EmState best = s;
    double best_ll = ll;
    int reinits = 0;
    bool gave_up = false;

    for (int it = 1; it <= options.max_iter; ++it) {
        bool reseeded = false;
        for (Eigen::Index j = 0; j < k; ++j) {
            const auto js = static_cast<std::size_t>(j);
            double nk = 0.0;
            Vector mu = Vector::Zero(dim);
            for (Eigen::Index i = 0; i < n; ++i) {
                const double r = w[static_cast<std::size_t>(i)] * resp(i, j);
                nk += r;
                mu += r * points[static_cast<std::size_t>(i)];
            }
            if (nk < 1e-9) {
                if (++reinits > options.max_reinitializations) {
                    gave_up = true;
                    break;
                }
                s.mean[js] = points[pick_weighted(w, rng)];
                s.cov[js] = init_cov;
                s.alpha[js] = 1.0 / k;
                reseeded = true;
                continue;
            }
            mu /= nk;
            Matrix c = Matrix::Zero(dim, dim);
            for (Eigen::Index i = 0; i < n; ++i) {
                const Vector d = points[static_cast<std::size_t>(i)] - mu;
                c.noalias() += (w[static_cast<std::size_t>(i)] * resp(i, j)) * d * d.transpose();
            }
            c /= nk;
            apply_floor(c, floor);
            s.alpha[js] = nk;
            s.mean[js] = mu;
            s.cov[js] = c;
        }
        if (gave_up) break;
        const double asum = std::accumulate(s.alpha.begin(), s.alpha.end(), 0.0);
        for (double& a : s.alpha) a /= asum;

        const double prev = ll;
        ll = e_step(points, w, s, resp);
        fit.trace.push_back(ll);
        fit.iterations = it;
        if (reseeded) fit.reinit_iterations.push_back(it);
        if (ll > best_ll) {
            best = s;
            best_ll = ll;
        }
        if (!reseeded && std::abs(ll - prev) <= options.tol * std::max(1e-300, std::abs(prev))) {
            fit.converged = true;
            break;
        }
    }

    if (gave_up) {
        fit.warnings.push_back("EM: components kept collapsing; returning best fit so far");
        log::warn(fit.warnings.back());
        s = best;
        ll = best_ll;
    } else if (best_ll > ll) {
        s = best;
        ll = best_ll;
    }

    std::vector<GaussianComponent> comps;
    for (int j = 0; j < k; ++j) {
        const auto js = static_cast<std::size_t>(j);
        comps.push_back(GaussianComponent{s.alpha[js], s.mean[js], s.cov[js]});
    }
    fit.mixture = GaussianMixture(std::move(comps));
    fit.log_likelihood = ll;
    return fit;
}

ComponentSelection select_components(std::span<const Vector> points, std::span<const double> weights, int k_max,
                                     std::uint64_t seed, const EmOptions& options) {
    if (k_max < 1) throw std::invalid_argument("select_components: K_max must be >= 1");
    if (points.empty()) throw std::invalid_argument("select_components: no points");
    const int dim = static_cast<int>(points.front().size());
    const double n_eff = effective_sample_size(weights);

    ComponentSelection out;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= k_max; ++k) {
        if (static_cast<long>(points.size()) < static_cast<long>(k) * (dim + 1)) break;
        EmFit fit = fit_em(points, weights, k, seed, options);
        const double score = bic(fit, k, dim, n_eff);
        out.bic.push_back(score);
        if (score < best) {
            best = score;
            out.fit = std::move(fit);
            out.k = k;
        }
    }
    if (out.bic.empty()) throw std::invalid_argument("select_components: too few points for a single component");
    return out;
}

}  // namespace utabc
