#include "utabc/ut.hpp"

#include "utabc/log.hpp"

#include <cmath>
#include <sstream>

namespace utabc {

SigmaPointSet sigma_points(const Vector& mean, const Matrix& cov, double alpha, double beta, double kappa) {
    const auto dim = static_cast<int>(mean.size());
    if (dim < 1) throw std::invalid_argument("sigma_points: empty mean");
    if (cov.rows() != dim || cov.cols() != dim) throw std::invalid_argument("sigma_points: covariance shape mismatch");

    SigmaPointSet sp;
    sp.alpha = alpha;
    sp.beta = beta;
    sp.kappa = kappa;
    sp.lambda = alpha * alpha * (dim + kappa) - dim;
    const double spread = dim + sp.lambda;
    if (!(spread > 0.0)) throw std::invalid_argument("sigma_points: L + lambda must be positive");

    Matrix scaled = spread * symmetrize(cov);
    Eigen::LLT<Matrix> llt(scaled);
    if (llt.info() != Eigen::Success) {
        const double ridge = 1e-10 * std::max(scaled.trace() / dim, 1e-300);
        scaled += ridge * Matrix::Identity(dim, dim);
        llt.compute(scaled);
        if (llt.info() != Eigen::Success) throw std::domain_error("sigma_points: covariance is not positive definite");
        log::warn("sigma_points: covariance needed a ridge before factorization");
    }
    const Matrix root = llt.matrixL();

    sp.points.reserve(static_cast<std::size_t>(2 * dim + 1));
    sp.points.push_back(mean);
    for (int k = 0; k < dim; ++k) sp.points.push_back(mean + root.col(k));
    for (int k = 0; k < dim; ++k) sp.points.push_back(mean - root.col(k));

    const double w = 1.0 / (2.0 * spread);
    sp.mean_weights.assign(static_cast<std::size_t>(2 * dim + 1), w);
    sp.cov_weights.assign(static_cast<std::size_t>(2 * dim + 1), w);
    sp.mean_weights[0] = sp.lambda / spread;
    sp.cov_weights[0] = sp.lambda / spread + (1.0 - alpha * alpha + beta);
    return sp;
}

OutputGaussian ut_propagate(const SigmaPointSet& sp, const std::function<Vector(const Vector&)>& g,
                            const Matrix& noise_covariance) {
    const std::size_t n = sp.points.size();
    std::vector<Vector> ys;
    ys.reserve(n);
    for (const auto& x : sp.points) ys.push_back(g(x));
    const auto d = ys.front().size();
    if (noise_covariance.rows() != d || noise_covariance.cols() != d) {
        throw std::invalid_argument("ut_propagate: noise covariance does not match the output dimension");
    }

    OutputGaussian out;
    out.mean = Vector::Zero(d);
    for (std::size_t k = 0; k < n; ++k) out.mean += sp.mean_weights[k] * ys[k];

    Matrix dev(d, static_cast<Eigen::Index>(n));
    bool negative_weight = false;
    for (std::size_t k = 0; k < n; ++k) {
        dev.col(static_cast<Eigen::Index>(k)) = ys[k] - out.mean;
        negative_weight = negative_weight || sp.cov_weights[k] < 0.0;
    }
    const Eigen::Map<const Vector> wc(sp.cov_weights.data(), static_cast<Eigen::Index>(n));

    Matrix cov;
    if (!negative_weight) {
        cov = dev * wc.asDiagonal() * dev.transpose();
    } else {
        // Work in the span of the deviations: cov = Q (R W R^T) Q^T, so the
        // spectrum can be clipped on an (2L+1)-sized matrix.
        Eigen::HouseholderQR<Matrix> qr(dev);
        const Eigen::Index r = std::min<Eigen::Index>(d, static_cast<Eigen::Index>(n));
        const Matrix q = qr.householderQ() * Matrix::Identity(d, r);
        const Matrix rr = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
        Matrix small = symmetrize(rr * wc.asDiagonal() * rr.transpose());
        out.clipped = clip_eigenvalues(small, 0.0);
        if (out.clipped > 0.0) {
            std::ostringstream os;
            os << "ut_propagate: clipped " << out.clipped << " of negative spectrum from the output covariance";
            log::info(os.str());
        }
        cov = q * small * q.transpose();
    }
    out.covariance = symmetrize(cov + noise_covariance);
    return out;
}

OutputMixture predict_output_mixture(const GaussianMixture& param_mix, const ModelSpec& model, const UtParams& params) {
    if (param_mix.dim() != model.parameter_dim()) {
        throw std::invalid_argument("predict_output_mixture: mixture and model dimensions differ");
    }
    OutputMixture out;
    std::vector<GaussianComponent> comps;
    const int dim = model.parameter_dim();
    auto g = [&](const Vector& theta) {
        ++out.model_evaluations;
        return model.evaluate(theta);
    };
    for (const auto& c : param_mix.components()) {
        try {
            const SigmaPointSet sp = sigma_points(c.mean, c.covariance, params.alpha, params.beta, params.kappa_for(dim));
            OutputGaussian og = ut_propagate(sp, g, model.noise_covariance());
            comps.push_back(GaussianComponent{c.weight, std::move(og.mean), std::move(og.covariance)});
        } catch (const SimulationFailure& e) {
            ++out.dropped_components;
            log::warn(std::string("predict_output_mixture: dropping component: ") + e.what());
        } catch (const std::domain_error& e) {
            ++out.dropped_components;
            log::warn(std::string("predict_output_mixture: dropping component: ") + e.what());
        }
    }
    if (comps.empty()) throw CurvePredictionFailure("every mixture component failed to propagate");
    try {
        out.mixture = GaussianMixture(std::move(comps));
    } catch (const std::domain_error& e) {
        throw CurvePredictionFailure(std::string("output mixture is not usable: ") + e.what());
    }
    return out;
}

}  // namespace utabc
