#include "utabc/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace utabc {

std::string to_string(DistanceMetric metric) { return metric == DistanceMetric::l1 ? "L1" : "L2"; }

DistanceMetric parse_metric(const std::string& name) {
    if (name == "L1" || name == "l1") return DistanceMetric::l1;
    if (name == "L2" || name == "l2") return DistanceMetric::l2;
    throw std::invalid_argument("unknown distance metric '" + name + "'");
}

namespace {

// RK4 on raw buffers; `work` must hold 5 * n doubles.
void rk4_inplace(const OdeSystem& sys, std::span<double> y, std::span<const double> params, double h,
                 std::span<double> work) {
    const std::size_t n = y.size();
    auto k1 = work.subspan(0, n);
    auto k2 = work.subspan(n, n);
    auto k3 = work.subspan(2 * n, n);
    auto k4 = work.subspan(3 * n, n);
    auto tmp = work.subspan(4 * n, n);

    auto check = [](std::span<const double> v) {
        for (double x : v) {
            if (!std::isfinite(x)) throw SimulationFailure("ODE integration produced a non-finite derivative");
        }
    };

    sys.rhs(y, params, k1);
    check(k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    sys.rhs(tmp, params, k2);
    check(k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    sys.rhs(tmp, params, k3);
    check(k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
    sys.rhs(tmp, params, k4);
    check(k4);
    for (std::size_t i = 0; i < n; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    check(y);
}

std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

Vector rk4_step(const OdeSystem& system, const Vector& state, const Vector& params, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("rk4_step: step size must be positive");
    if (state.size() != system.state_dim) throw std::invalid_argument("rk4_step: state dimension mismatch");
    Vector y = state;
    std::vector<double> work(5 * static_cast<std::size_t>(system.state_dim));
    rk4_inplace(system, {y.data(), static_cast<std::size_t>(y.size())}, as_span(params), h, work);
    return y;
}

Matrix integrate(const OdeSystem& system, const Vector& params, std::span<const double> times) {
    if (!(system.step_size > 0.0)) throw std::invalid_argument("integrate: step size must be positive");
    if (system.initial_state.size() != system.state_dim) {
        throw std::invalid_argument("integrate: initial state dimension mismatch");
    }
    const auto n = static_cast<std::size_t>(system.state_dim);
    std::vector<double> y(system.initial_state.data(), system.initial_state.data() + n);
    std::vector<double> work(5 * n);
    const auto p = as_span(params);

    Matrix out(system.state_dim, static_cast<Eigen::Index>(times.size()));
    double t = 0.0;
    for (std::size_t j = 0; j < times.size(); ++j) {
        const double target = times[j];
        if (target < t || (j > 0 && target <= times[j - 1])) {
            throw std::invalid_argument("integrate: time points must be non-negative and strictly increasing");
        }
        // Step counts are derived from the segment length so that rounding
        // does not accumulate across observation times.
        const double span_len = target - t;
        const auto steps = static_cast<long>(std::ceil(span_len / system.step_size - 1e-9));
        for (long s = 0; s < steps; ++s) {
            const double h = (s + 1 < steps) ? system.step_size : span_len - system.step_size * (steps - 1);
            if (h > 0.0) rk4_inplace(system, y, p, h, work);
        }
        t = target;
        for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = y[i];
    }
    return out;
}

ModelSpec::ModelSpec(std::string name, int parameter_dim, int output_dim, Simulator g, Matrix noise_covariance,
                     DistanceMetric metric, std::vector<double> time_points)
    : name_(std::move(name)),
      parameter_dim_(parameter_dim),
      output_dim_(output_dim),
      g_(std::move(g)),
      noise_covariance_(std::move(noise_covariance)),
      metric_(metric),
      time_points_(std::move(time_points)) {
    if (parameter_dim_ < 1) throw std::invalid_argument("ModelSpec: parameter_dim must be >= 1");
    if (output_dim_ < 1) throw std::invalid_argument("ModelSpec: output_dim must be >= 1");
    if (!g_) throw std::invalid_argument("ModelSpec: simulator is empty");
    if (noise_covariance_.rows() != output_dim_ || noise_covariance_.cols() != output_dim_) {
        throw std::invalid_argument("ModelSpec: noise covariance must be output_dim x output_dim");
    }
    const double scale = std::max(1.0, noise_covariance_.cwiseAbs().maxCoeff());
    if ((noise_covariance_ - noise_covariance_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw std::invalid_argument("ModelSpec: noise covariance must be symmetric");
    }
    for (std::size_t i = 1; i < time_points_.size(); ++i) {
        if (!(time_points_[i] > time_points_[i - 1])) {
            throw std::invalid_argument("ModelSpec: time points must be strictly increasing");
        }
    }
    has_noise_ = !noise_covariance_.isZero(0.0);
    noise_diagonal_ = noise_covariance_.isDiagonal(0.0);
    if (has_noise_) {
        if (noise_diagonal_) {
            if (noise_covariance_.diagonal().minCoeff() < 0.0) {
                throw std::invalid_argument("ModelSpec: noise covariance must be positive semi-definite");
            }
            noise_factor_ = noise_covariance_.diagonal().cwiseSqrt();
        } else {
            try {
                noise_factor_ = sqrt_factor(noise_covariance_);
            } catch (const std::domain_error&) {
                throw std::invalid_argument("ModelSpec: noise covariance must be positive semi-definite");
            }
        }
    }
}

Vector ModelSpec::evaluate(const Vector& theta) const {
    if (theta.size() != parameter_dim_) throw std::invalid_argument("simulate: parameter dimension mismatch");
    Vector out = g_(theta);
    if (out.size() != output_dim_) throw std::logic_error("simulate: model '" + name_ + "' returned wrong dimension");
    if (!out.allFinite()) throw SimulationFailure("model '" + name_ + "' produced a non-finite output");
    return out;
}

Vector ModelSpec::sample_noise(RandomEngine& rng) const {
    if (!has_noise_) return Vector::Zero(output_dim_);
    const Vector z = standard_normal_vector(output_dim_, rng);
    if (noise_diagonal_) return noise_factor_.cwiseProduct(z);
    return noise_factor_ * z;
}

Dataset simulate(const ModelSpec& spec, const Vector& theta) {
    return Dataset{spec.evaluate(theta), spec.time_points()};
}

Dataset simulate(const ModelSpec& spec, const Vector& theta, RandomEngine& rng) {
    Dataset d{spec.evaluate(theta), spec.time_points()};
    d.values += spec.sample_noise(rng);
    return d;
}

double distance(const Vector& a, const Vector& b, DistanceMetric metric) {
    if (a.size() != b.size()) throw std::invalid_argument("distance: datasets differ in length");
    if (metric == DistanceMetric::l1) return (a - b).lpNorm<1>();
    return (a - b).norm();
}

double distance(const Dataset& a, const Dataset& b, DistanceMetric metric) {
    return distance(a.values, b.values, metric);
}

double toy_g(double theta) {
    const double d = theta - 3.0;
    return (theta - 10.0) * (theta - 10.0) - 100.0 * std::exp(-100.0 * d * d);
}

void repressilator_rhs(std::span<const double> s, std::span<const double> params, std::span<double> out) {
    const double n = params[0];
    const double beta = params[1];
    const double alpha = params[2];
    const double alpha0 = params[3];
    const double m1 = s[0], p1 = s[1], m2 = s[2], p2 = s[3], m3 = s[4], p3 = s[5];
    auto hill = [&](double p) { return alpha / (1.0 + std::pow(std::max(p, 0.0), n)) + alpha0; };
    out[0] = -m1 + hill(p3);
    out[1] = -beta * (p1 - m1);
    out[2] = -m2 + hill(p1);
    out[3] = -beta * (p2 - m2);
    out[4] = -m3 + hill(p2);
    out[5] = -beta * (p3 - m3);
}

Vector repressilator_rhs(const Vector& state, const Vector& params) {
    if (state.size() != 6 || params.size() != 4) throw std::invalid_argument("repressilator_rhs: bad dimensions");
    Vector out(6);
    repressilator_rhs(as_span(state), as_span(params), {out.data(), 6});
    return out;
}

void hopf_rhs(std::span<const double> s, std::span<const double> params, std::span<double> out) {
    const double ak1 = params[0], k2 = params[1], k3 = params[2], k4 = params[3], k5 = params[4];
    const double x = s[0], y = s[1], z = s[2];
    out[0] = (ak1 - k4) * x - k2 * x * y;
    out[1] = -k3 * y + k5 * z;
    out[2] = k4 * x - k5 * z;
}

Vector hopf_rhs(const Vector& state, const Vector& params) {
    if (state.size() != 3 || params.size() != 5) throw std::invalid_argument("hopf_rhs: bad dimensions");
    Vector out(3);
    hopf_rhs(as_span(state), as_span(params), {out.data(), 3});
    return out;
}

OdeSystem repressilator_system() {
    OdeSystem sys;
    sys.state_dim = 6;
    sys.rhs = [](std::span<const double> s, std::span<const double> p, std::span<double> o) {
        repressilator_rhs(s, p, o);
    };
    sys.initial_state = (Vector(6) << 0.0, 2.0, 0.0, 1.0, 0.0, 3.0).finished();
    sys.step_size = 0.01;
    return sys;
}

OdeSystem hopf_system() {
    OdeSystem sys;
    sys.state_dim = 3;
    sys.rhs = [](std::span<const double> s, std::span<const double> p, std::span<double> o) { hopf_rhs(s, p, o); };
    sys.initial_state = Vector::Ones(3);
    sys.step_size = 0.01;
    return sys;
}

ModelSpec toy_model() {
    return ModelSpec(
        "toy", 1, 1, [](const Vector& th) { return Vector::Constant(1, toy_g(th[0])); }, Matrix::Zero(1, 1),
        DistanceMetric::l1);
}

ModelSpec quadratic_model() {
    return ModelSpec(
        "quadratic", 1, 1, [](const Vector& th) { return Vector::Constant(1, th[0] * th[0]); }, Matrix::Zero(1, 1),
        DistanceMetric::l1);
}

ModelSpec gaussian_pdf_model() {
    return ModelSpec(
        "gaussian-pdf", 1, 1,
        [](const Vector& th) {
            return Vector::Constant(1, std::exp(-0.5 * th[0] * th[0]) / std::sqrt(2.0 * std::numbers::pi));
        },
        Matrix::Zero(1, 1), DistanceMetric::l1);
}

ModelSpec linear_model(Matrix a, Vector b, Matrix noise_covariance, DistanceMetric metric) {
    if (a.rows() != b.size()) throw std::invalid_argument("linear_model: A and b disagree");
    const auto in = static_cast<int>(a.cols());
    const auto out = static_cast<int>(a.rows());
    return ModelSpec(
        "linear", in, out, [a = std::move(a), b = std::move(b)](const Vector& th) -> Vector { return a * th + b; },
        std::move(noise_covariance), metric);
}

ModelSpec repressilator_model(std::vector<double> times, double noise_variance) {
    const auto d = static_cast<int>(times.size());
    auto g = [sys = repressilator_system(), times](const Vector& th) -> Vector {
        const Matrix states = integrate(sys, th, times);
        return states.row(1).transpose();
    };
    return ModelSpec("repressilator", 4, d, std::move(g), noise_variance * Matrix::Identity(d, d), DistanceMetric::l2,
                     std::move(times));
}

ModelSpec hopf_model(int points, double noise_variance) {
    if (points < 1) throw std::invalid_argument("hopf_model: need at least one observation");
    std::vector<double> times(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) times[static_cast<std::size_t>(i)] = 0.1 * (i + 1);
    auto g = [sys = hopf_system(), times](const Vector& th) -> Vector {
        const Vector params = (Vector(5) << th[0], 1.0, 1.0, 1.0, 1.0).finished();
        const Matrix states = integrate(sys, params, times);
        return states.row(0).transpose();
    };
    return ModelSpec("hopf", 1, points, std::move(g), noise_variance * Matrix::Identity(points, points),
                     DistanceMetric::l2, std::move(times));
}

}  // namespace utabc
