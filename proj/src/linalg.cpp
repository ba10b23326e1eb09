#include "utabc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace utabc {

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

double min_eigenvalue(const Matrix& symmetric) {
    if (symmetric.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double clip_eigenvalues(Matrix& symmetric, double floor) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric);
    Vector values = es.eigenvalues();
    double added = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (values[i] < floor) {
            added += floor - values[i];
            values[i] = floor;
        }
    }
    if (added > 0.0) {
        const Matrix& v = es.eigenvectors();
        symmetric = symmetrize(v * values.asDiagonal() * v.transpose());
    }
    return added;
}

Matrix sqrt_factor(const Matrix& cov, double tolerance) {
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() == Eigen::Success) return llt.matrixL();

    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(cov));
    if (es.info() != Eigen::Success) throw std::domain_error("sqrt_factor: eigen-decomposition failed");
    Vector values = es.eigenvalues();
    const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
    if (values.minCoeff() < -tolerance * scale) {
        throw std::domain_error("sqrt_factor: covariance is not positive semi-definite");
    }
    values = values.cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * values.asDiagonal();
}

Vector weighted_mean(std::span<const Vector> points, std::span<const double> weights) {
    if (points.empty() || points.size() != weights.size()) {
        throw std::invalid_argument("weighted_mean: need matching non-empty points and weights");
    }
    Vector mean = Vector::Zero(points.front().size());
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        mean += weights[i] * points[i];
        total += weights[i];
    }
    if (!(total > 0.0)) throw std::invalid_argument("weighted_mean: weights sum to zero");
    return mean / total;
}

Matrix weighted_covariance(std::span<const Vector> points, std::span<const double> weights) {
    const Vector mean = weighted_mean(points, weights);
    Matrix cov = Matrix::Zero(mean.size(), mean.size());
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Vector d = points[i] - mean;
        cov.noalias() += weights[i] * d * d.transpose();
        total += weights[i];
    }
    return symmetrize(cov / total);
}

double gaussian_log_density(const Vector& x, const Vector& mean, const Matrix& chol_lower) {
    const auto dim = static_cast<double>(x.size());
    const Vector z = chol_lower.triangularView<Eigen::Lower>().solve(x - mean);
    const double log_det = 2.0 * chol_lower.diagonal().array().log().sum();
    return -0.5 * (dim * std::log(2.0 * std::numbers::pi) + log_det + z.squaredNorm());
}

}  // namespace utabc
