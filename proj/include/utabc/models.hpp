#pragma once

#include "utabc/linalg.hpp"
#include "utabc/random.hpp"

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace utabc {

/// Thrown when the model cannot produce an output for a parameter (for
/// example an ODE that blows up). The engine counts it as a rejected draw.
class SimulationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DistanceMetric { l1, l2 };

std::string to_string(DistanceMetric metric);
DistanceMetric parse_metric(const std::string& name);

struct Dataset {
    Vector values;
    std::vector<double> time_points;  // empty unless the data are an ODE observation
};

/// Fixed-step ODE. `rhs` writes d(state)/dt into its last argument.
struct OdeSystem {
    using Rhs = std::function<void(std::span<const double> state, std::span<const double> params,
                                   std::span<double> derivative)>;

    int state_dim = 0;
    Rhs rhs;
    Vector initial_state;
    double step_size = 0.01;
};

/// One classical Runge-Kutta step. Throws SimulationFailure on a non-finite
/// derivative or state.
Vector rk4_step(const OdeSystem& system, const Vector& state, const Vector& params, double h);

/// Integrates from t = 0 with fixed steps of `system.step_size` (the last step
/// before each time point is shortened to land on it) and returns the state at
/// every requested time, one column per time point. Times must be
/// non-negative and strictly increasing.
Matrix integrate(const OdeSystem& system, const Vector& params, std::span<const double> times);

/// A deterministic simulator g(theta) plus additive Gaussian observation noise.
class ModelSpec {
public:
    using Simulator = std::function<Vector(const Vector& theta)>;

    ModelSpec(std::string name, int parameter_dim, int output_dim, Simulator g, Matrix noise_covariance,
              DistanceMetric metric, std::vector<double> time_points = {});

    const std::string& name() const { return name_; }
    int parameter_dim() const { return parameter_dim_; }
    int output_dim() const { return output_dim_; }
    const Matrix& noise_covariance() const { return noise_covariance_; }
    DistanceMetric metric() const { return metric_; }
    const std::vector<double>& time_points() const { return time_points_; }

    /// g(theta); throws SimulationFailure.
    Vector evaluate(const Vector& theta) const;

    /// Draws zero-mean observation noise.
    Vector sample_noise(RandomEngine& rng) const;
    bool has_noise() const { return has_noise_; }

private:
    std::string name_;
    int parameter_dim_;
    int output_dim_;
    Simulator g_;
    Matrix noise_covariance_;
    DistanceMetric metric_;
    std::vector<double> time_points_;
    Matrix noise_factor_;
    bool has_noise_ = false;
    bool noise_diagonal_ = false;
};

/// Noiseless simulation g(theta).
Dataset simulate(const ModelSpec& spec, const Vector& theta);
/// g(theta) plus observation noise drawn from `rng`.
Dataset simulate(const ModelSpec& spec, const Vector& theta, RandomEngine& rng);

double distance(const Vector& a, const Vector& b, DistanceMetric metric);
double distance(const Dataset& a, const Dataset& b, DistanceMetric metric);

/// (theta - 10)^2 - 100 exp(-100 (theta - 3)^2): sharp global optimum at 3,
/// broad local optimum at 10.
double toy_g(double theta);

/// Repressilator, state (m1, p1, m2, p2, m3, p3), params (n, beta, alpha, alpha0).
/// Protein levels are clamped at zero before the Hill term.
void repressilator_rhs(std::span<const double> state, std::span<const double> params, std::span<double> out);
Vector repressilator_rhs(const Vector& state, const Vector& params);

/// Hopf system, state (x, y, z), params (Ak1, k2, k3, k4, k5).
void hopf_rhs(std::span<const double> state, std::span<const double> params, std::span<double> out);
Vector hopf_rhs(const Vector& state, const Vector& params);

OdeSystem repressilator_system();
/// Initial state (1, 1, 1).
OdeSystem hopf_system();

ModelSpec toy_model();
ModelSpec quadratic_model();
ModelSpec gaussian_pdf_model();
/// g(theta) = A theta + b.
ModelSpec linear_model(Matrix a, Vector b, Matrix noise_covariance, DistanceMetric metric = DistanceMetric::l2);
/// Observes p1 at `times` with noise covariance noise_variance * I; L2 distance.
ModelSpec repressilator_model(std::vector<double> times = {4.0, 8.0, 12.0, 16.0, 20.0}, double noise_variance = 0.01);
/// Infers Ak1 only (k2..k5 = 1); observes x at t = 0.1, 0.2, ..., 0.1 * points
/// with noise variance `noise_variance`; L2 distance.
ModelSpec hopf_model(int points, double noise_variance = 1.0);

}  // namespace utabc
