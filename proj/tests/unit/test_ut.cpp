#include "utabc/models.hpp"
#include "utabc/ut.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace utabc;

namespace {

Matrix random_spd(int n, RandomEngine& rng) {
    std::normal_distribution<double> n01;
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = n01(rng);
    return a * a.transpose() + 0.1 * Matrix::Identity(n, n);
}

Matrix random_matrix(int r, int c, RandomEngine& rng) {
    std::normal_distribution<double> n01;
    Matrix a(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) a(i, j) = n01(rng);
    return a;
}

}  // namespace

TEST_CASE("one-dimensional sigma points") {
    const SigmaPointSet sp = sigma_points(Vector::Zero(1), Matrix::Identity(1, 1), 1.0, 2.0, 2.0);
    REQUIRE(sp.points.size() == 3);
    CHECK(sp.lambda == 2.0);
    CHECK(sp.points[0][0] == 0.0);
    CHECK(sp.points[1][0] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
    CHECK(sp.points[2][0] == doctest::Approx(-std::sqrt(3.0)).epsilon(1e-15));
    CHECK(sp.mean_weights[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(sp.mean_weights[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(sp.mean_weights[2] == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(sp.cov_weights[0] == doctest::Approx(2.0 / 3.0 + 2.0).epsilon(1e-15));
}

TEST_CASE("two-dimensional sigma points lie on the scaled axes") {
    const Vector mu = Vector::Constant(2, 1.5);
    const SigmaPointSet sp = sigma_points(mu, Matrix::Identity(2, 2), 1.0, 0.0, 1.0);
    CHECK(sp.lambda == 1.0);
    REQUIRE(sp.points.size() == 5);
    for (int k = 0; k < 2; ++k) {
        const Vector e = Vector::Unit(2, k) * std::sqrt(3.0);
        CHECK((sp.points[1 + k] - (mu + e)).norm() < 1e-15);
        CHECK((sp.points[3 + k] - (mu - e)).norm() < 1e-15);
    }
}

TEST_CASE("sigma point weights sum to one and reproduce the mean") {
    RandomEngine rng(1);
    for (int l = 1; l <= 5; ++l) {
        const Vector mu = random_matrix(l, 1, rng);
        const SigmaPointSet sp = sigma_points(mu, random_spd(l, rng), 1.0, 2.0, 3.0 - l);
        double s = 0.0;
        Vector m = Vector::Zero(l);
        for (std::size_t i = 0; i < sp.points.size(); ++i) {
            s += sp.mean_weights[i];
            m += sp.mean_weights[i] * sp.points[i];
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
        CHECK((m - mu).norm() < 1e-12 * (1.0 + mu.norm()));
    }
}

TEST_CASE("the identity map is propagated exactly") {
    RandomEngine rng(2);
    const Vector mu = random_matrix(3, 1, rng);
    const Matrix cov = random_spd(3, rng);
    for (double beta : {0.0, 2.0}) {
        const SigmaPointSet sp = sigma_points(mu, cov, 1.0, beta, 0.0);
        const OutputGaussian out = ut_propagate(sp, [](const Vector& x) { return x; }, Matrix::Zero(3, 3));
        CHECK((out.mean - mu).norm() < 1e-12);
        CHECK((out.covariance - cov).norm() < 1e-12 * cov.norm());
    }
}

TEST_CASE("linear maps are propagated exactly") {
    RandomEngine rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const int l = 1 + trial % 5;
        const int d = 1 + (trial / 5) % 5;
        const Matrix a = random_matrix(d, l, rng);
        const Vector b = random_matrix(d, 1, rng);
        const Vector mu = random_matrix(l, 1, rng);
        const Matrix cov = random_spd(l, rng);
        const Matrix noise = random_spd(d, rng);
        const SigmaPointSet sp = sigma_points(mu, cov, 1.0, 0.0, 3.0 - l);
        const OutputGaussian out = ut_propagate(sp, [&](const Vector& x) { return Vector(a * x + b); }, noise);
        const Vector mean = a * mu + b;
        const Matrix c = a * cov * a.transpose() + noise;
        CHECK((out.mean - mean).norm() <= 1e-10 * std::max(1.0, mean.norm()));
        CHECK((out.covariance - c).norm() <= 1e-10 * std::max(1.0, c.norm()));
    }
}

TEST_CASE("squaring a standard normal") {
    auto sq = [](const Vector& x) { return Vector(x.array().square()); };
    // mean is exact for any beta
    const OutputGaussian b2 = ut_propagate(sigma_points(Vector::Zero(1), Matrix::Identity(1, 1), 1.0, 2.0, 2.0), sq,
                                           Matrix::Zero(1, 1));
    CHECK(b2.mean[0] == doctest::Approx(1.0).epsilon(1e-14));
    // with alpha = 1 the extra beta weight overstates the variance: 2 + beta
    CHECK(b2.covariance(0, 0) == doctest::Approx(4.0).epsilon(1e-12));

    const OutputGaussian b0 = ut_propagate(sigma_points(Vector::Zero(1), Matrix::Identity(1, 1), 1.0, 0.0, 2.0), sq,
                                           Matrix::Zero(1, 1));
    RandomEngine rng(4);
    std::normal_distribution<double> n01;
    const int n = 1000000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double y = std::pow(n01(rng), 2);
        s += y;
        s2 += y * y;
    }
    const double mc_var = s2 / n - (s / n) * (s / n);
    CHECK(b0.mean[0] == doctest::Approx(s / n).epsilon(0.01));
    CHECK(b0.covariance(0, 0) == doctest::Approx(mc_var).epsilon(0.02));
}

TEST_CASE("negative centre weights still give a positive semidefinite covariance") {
    // L = 5 with kappa = 3 - L gives lambda = -2 and a negative centre weight
    RandomEngine rng(5);
    const Vector mu = random_matrix(5, 1, rng);
    const SigmaPointSet sp = sigma_points(mu, random_spd(5, rng), 1.0, 0.0, -2.0);
    CHECK(sp.mean_weights[0] < 0.0);
    auto g = [](const Vector& x) {
        Vector y(3);
        y << x.squaredNorm(), std::sin(x[0]) * x[1], std::exp(0.3 * x[2]) - x[3] * x[4];
        return y;
    };
    const OutputGaussian out = ut_propagate(sp, g, Matrix::Zero(3, 3));
    CHECK(min_eigenvalue(out.covariance) >= -1e-12 * out.covariance.norm());
}

TEST_CASE("output mixture of a linear model") {
    Matrix a(2, 1);
    a << 2.0, -1.0;
    Vector b(2);
    b << 1.0, 0.5;
    const ModelSpec m = linear_model(a, b, 0.25 * Matrix::Identity(2, 2));
    const GaussianMixture pm({{1.0, Vector::Constant(1, 3.0), Matrix::Constant(1, 1, 4.0)}});
    const OutputMixture out = predict_output_mixture(pm, m, UtParams{});
    const auto& c = out.mixture.components().front();
    CHECK((c.mean - (a * Vector::Constant(1, 3.0) + b)).norm() < 1e-12);
    CHECK((c.covariance - (4.0 * a * a.transpose() + 0.25 * Matrix::Identity(2, 2))).norm() < 1e-12);
    CHECK(out.model_evaluations == 3);
}

TEST_CASE("output mixture keeps component weights and counts evaluations") {
    const ModelSpec toy = toy_model();
    const GaussianMixture pm({{0.3, Vector::Constant(1, 3.0), Matrix::Constant(1, 1, 0.01)},
                              {0.7, Vector::Constant(1, 10.0), Matrix::Constant(1, 1, 1e-8)}});
    const OutputMixture out = predict_output_mixture(pm, toy, UtParams{});
    REQUIRE(out.mixture.size() == 2);
    CHECK(out.mixture.components()[0].weight == doctest::Approx(0.3));
    CHECK(out.mixture.components()[1].weight == doctest::Approx(0.7));
    CHECK(out.model_evaluations == 2 * 3);
    // a tight component at the local optimum maps to an output near zero
    CHECK(std::abs(out.mixture.components()[1].mean[0]) < 1e-6);
    CHECK(out.mixture.components()[1].covariance(0, 0) < 1e-6);
}

TEST_CASE("components whose sigma points fail are dropped") {
    int calls = 0;
    const ModelSpec flaky("flaky", 1, 1,
                          [&](const Vector& t) -> Vector {
                              ++calls;
                              if (t[0] > 50.0) throw SimulationFailure("blow-up");
                              return t;
                          },
                          Matrix::Identity(1, 1), DistanceMetric::l2);
    const GaussianMixture pm({{0.5, Vector::Constant(1, 0.0), Matrix::Identity(1, 1)},
                              {0.5, Vector::Constant(1, 100.0), Matrix::Identity(1, 1)}});
    const OutputMixture out = predict_output_mixture(pm, flaky, UtParams{});
    CHECK(out.mixture.size() == 1);
    CHECK(out.dropped_components == 1);

    const GaussianMixture all_bad({{1.0, Vector::Constant(1, 100.0), Matrix::Identity(1, 1)}});
    CHECK_THROWS_AS(predict_output_mixture(all_bad, flaky, UtParams{}), CurvePredictionFailure);
}
