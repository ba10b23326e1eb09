#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace utabc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// (A + A^T) / 2
Matrix symmetrize(const Matrix& a);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& symmetric);

/// Clips eigenvalues of a symmetric matrix from below at `floor`.
/// Returns the total amount added to the spectrum (0 when nothing was clipped).
double clip_eigenvalues(Matrix& symmetric, double floor);

/// Returns F with F * F^T == cov. Uses the lower Cholesky factor when it
/// exists, otherwise the eigen-decomposition with negative eigenvalues
/// clipped to zero. Throws std::domain_error when cov has an eigenvalue below
/// -tolerance * max(1, |largest eigenvalue|).
Matrix sqrt_factor(const Matrix& cov, double tolerance = 1e-9);

/// Weighted mean of row-stacked points. Weights need not be normalized.
Vector weighted_mean(std::span<const Vector> points, std::span<const double> weights);

/// Weighted covariance with the population convention: sum w_i (x_i - m)(x_i - m)^T / sum w_i.
Matrix weighted_covariance(std::span<const Vector> points, std::span<const double> weights);

/// Log density of N(mean, L L^T) at x given the lower Cholesky factor L.
double gaussian_log_density(const Vector& x, const Vector& mean, const Matrix& chol_lower);

}  // namespace utabc
