#include "utabc/gmm.hpp"
#include "utabc/linalg.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace utabc;

namespace {

std::vector<Vector> normal_cloud(int n, const Vector& mean, double sd, RandomEngine& rng) {
    std::normal_distribution<double> n01;
    std::vector<Vector> out;
    for (int i = 0; i < n; ++i) {
        Vector x = mean;
        for (Eigen::Index j = 0; j < x.size(); ++j) x[j] += sd * n01(rng);
        out.push_back(x);
    }
    return out;
}

Vector scalar(double x) { return Vector::Constant(1, x); }

std::vector<Vector> bimodal(int n, RandomEngine& rng) {
    auto a = normal_cloud(n / 2, scalar(0.0), 1.0, rng);
    auto b = normal_cloud(n - n / 2, scalar(10.0), 1.0, rng);
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

TEST_CASE("one-component fit equals the weighted moments") {
    RandomEngine rng(1);
    auto pts = normal_cloud(400, Vector::Zero(3), 2.0, rng);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    std::vector<double> w;
    for (std::size_t i = 0; i < pts.size(); ++i) w.push_back(u(rng));
    const EmFit fit = fit_em(pts, w, 1, 9);
    REQUIRE(fit.mixture.size() == 1);
    const auto& c = fit.mixture.components().front();
    CHECK((c.mean - weighted_mean(pts, w)).norm() < 1e-10);
    CHECK((c.covariance - weighted_covariance(pts, w)).norm() < 1e-10);
}

TEST_CASE("one-component fit of two symmetric points") {
    const std::vector<Vector> pts{scalar(-1.0), scalar(1.0)};
    const std::vector<double> w{1.0, 1.0};
    const EmFit fit = fit_em(pts, w, 1, 1);
    CHECK(std::abs(fit.mixture.components()[0].mean[0]) < 1e-14);
    CHECK(fit.mixture.components()[0].covariance(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("two-component fit recovers well separated modes") {
    RandomEngine rng(2);
    const auto pts = bimodal(2000, rng);
    const std::vector<double> w(pts.size(), 1.0);
    const EmFit fit = fit_em(pts, w, 2, 5);
    REQUIRE(fit.mixture.size() == 2);
    auto c = fit.mixture.components();
    if (c[0].mean[0] > c[1].mean[0]) std::swap(c[0], c[1]);
    CHECK(std::abs(c[0].mean[0] - 0.0) < 0.3);
    CHECK(std::abs(c[1].mean[0] - 10.0) < 0.3);
    CHECK(std::abs(c[0].weight - 0.5) < 0.1);
    CHECK(std::abs(c[1].weight - 0.5) < 0.1);
}

TEST_CASE("EM never decreases the log-likelihood and keeps a valid mixture") {
    RandomEngine rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        auto pts = bimodal(600, rng);
        auto extra = normal_cloud(300, scalar(4.0), 2.0, rng);
        pts.insert(pts.end(), extra.begin(), extra.end());
        const std::vector<double> w(pts.size(), 1.0);
        const EmOptions opts;
        const EmFit fit = fit_em(pts, w, 3, 100 + trial, opts);
        for (std::size_t i = 1; i < fit.trace.size(); ++i) {
            const bool after_reinit =
                std::find(fit.reinit_iterations.begin(), fit.reinit_iterations.end(), static_cast<int>(i)) !=
                fit.reinit_iterations.end();
            if (!after_reinit) CHECK(fit.trace[i] >= fit.trace[i - 1] - 1e-9 * std::abs(fit.trace[i - 1]));
        }
        double wsum = 0.0;
        for (const auto& c : fit.mixture.components()) {
            wsum += c.weight;
            CHECK(min_eigenvalue(c.covariance) > 0.0);
        }
        CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("too few points for the requested components is an error") {
    const std::vector<Vector> pts{scalar(0.0), scalar(1.0), scalar(2.0)};
    const std::vector<double> w(3, 1.0);
    CHECK_THROWS_AS(fit_em(pts, w, 2, 1), std::invalid_argument);
}

TEST_CASE("BIC picks one component for unimodal data and two for bimodal data") {
    int unimodal_ok = 0, bimodal_ok = 0;
    const int trials = 20;
    for (int t = 0; t < trials; ++t) {
        RandomEngine rng(1000 + t);
        const auto uni = normal_cloud(2000, scalar(0.0), 1.0, rng);
        const auto bi = bimodal(2000, rng);
        const std::vector<double> w(2000, 1.0);
        if (select_components(uni, w, 5, 7 + t).k == 1) ++unimodal_ok;
        if (select_components(bi, w, 5, 7 + t).k == 2) ++bimodal_ok;
    }
    CHECK(unimodal_ok >= 18);
    CHECK(bimodal_ok >= 18);
}

TEST_CASE("a component cap of one always yields one component") {
    RandomEngine rng(4);
    const auto pts = bimodal(500, rng);
    const std::vector<double> w(pts.size(), 1.0);
    const ComponentSelection s = select_components(pts, w, 1, 3);
    CHECK(s.k == 1);
    CHECK(s.bic.size() == 1);
}

TEST_CASE("mixture parameter count") {
    CHECK(mixture_parameter_count(1, 1) == 2);
    CHECK(mixture_parameter_count(2, 2) == 11);
    CHECK(effective_sample_size(std::vector<double>{1, 1, 1, 1}) == doctest::Approx(4.0));
}

TEST_CASE("sampling a standard normal") {
    const GaussianMixture mix({{1.0, Vector::Zero(2), Matrix::Identity(2, 2)}});
    for (bool stratified : {false, true}) {
        RandomEngine rng(5);
        const int m = 20000;
        const Matrix x = mix.sample_matrix(m, rng, stratified);
        const Vector mean = x.rowwise().mean();
        CHECK(mean.cwiseAbs().maxCoeff() < 4.0 / std::sqrt(m));
        const Matrix centered = x.colwise() - mean;
        const Matrix cov = centered * centered.transpose() / m;
        CHECK((cov - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.05);
    }
}

TEST_CASE("sampling respects the component weights") {
    const GaussianMixture only_first(
        {{1.0, scalar(-10.0), Matrix::Identity(1, 1)}, {0.0, scalar(10.0), Matrix::Identity(1, 1)}});
    RandomEngine rng(6);
    for (const auto& x : sample_mixture(only_first, 1000, rng)) CHECK(x[0] < 0.0);

    const GaussianMixture half(
        {{0.5, scalar(-10.0), Matrix::Identity(1, 1)}, {0.5, scalar(10.0), Matrix::Identity(1, 1)}});
    for (bool stratified : {false, true}) {
        RandomEngine r2(7);
        const Matrix x = half.sample_matrix(10000, r2, stratified);
        const double frac = (x.array() < 0.0).cast<double>().mean();
        CHECK(frac >= 0.48);
        CHECK(frac <= 0.52);
    }
}

TEST_CASE("mixture log density of a single Gaussian") {
    const GaussianMixture mix({{1.0, scalar(1.0), Matrix::Constant(1, 1, 4.0)}});
    const double expected = -0.5 * std::log(2.0 * M_PI * 4.0) - 0.5 * 0.25;
    CHECK(mix.log_density(scalar(2.0)) == doctest::Approx(expected).epsilon(1e-12));
}
