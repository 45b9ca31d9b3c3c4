#include "ctm/model.hpp"

#include <cmath>
#include <string>

#include "ctm/errors.hpp"

namespace ctm {

void set_sigma(ModelParams& params, const Eigen::MatrixXd& sigma) {
    const auto K = sigma.rows();
    if (K == 0 || sigma.cols() != K)
        throw InvalidDimensions("sigma must be square and non-empty");
    Eigen::MatrixXd sym = 0.5 * (sigma + sigma.transpose());
    if (!sym.allFinite()) throw SingularSigma("sigma contains non-finite entries");
    Eigen::LLT<Eigen::MatrixXd> llt(sym);
    if (llt.info() != Eigen::Success)
        throw SingularSigma("sigma is not positive definite");
    params.sigma = std::move(sym);
    params.sigma_inv = llt.solve(Eigen::MatrixXd::Identity(K, K));
    Eigen::MatrixXd lower = llt.matrixL();
    params.log_det_sigma = 2.0 * lower.diagonal().array().log().sum();
}

void validate(const ModelParams& params) {
    if (params.K < 1 || params.V < 2)
        throw ValidationError("model requires K >= 1 and V >= 2");
    if (params.mu.size() != params.K)
        throw ValidationError("mu has wrong dimension");
    if (params.sigma.rows() != params.K || params.sigma.cols() != params.K ||
        params.sigma_inv.rows() != params.K || params.sigma_inv.cols() != params.K)
        throw ValidationError("sigma has wrong dimensions");
    if (params.log_beta.rows() != params.K || params.log_beta.cols() != params.V)
        throw ValidationError("log_beta has wrong dimensions");
    if (!params.mu.allFinite() || !params.sigma.allFinite() || !params.sigma_inv.allFinite() ||
        !params.log_beta.allFinite() || !std::isfinite(params.log_det_sigma))
        throw ValidationError("model parameters contain non-finite values");

    const double scale = std::max(1.0, params.sigma.cwiseAbs().maxCoeff());
    if ((params.sigma - params.sigma.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw ValidationError("sigma is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(params.sigma);
    if (llt.info() != Eigen::Success)
        throw ValidationError("sigma is not positive definite");

    Eigen::MatrixXd prod = params.sigma_inv * params.sigma;
    prod -= Eigen::MatrixXd::Identity(params.K, params.K);
    if (prod.cwiseAbs().maxCoeff() > 1e-8)
        throw ValidationError("sigma_inv is not the inverse of sigma");

    for (int i = 0; i < params.K; ++i) {
        const double row_sum = params.log_beta.row(i).array().exp().sum();
        if (std::abs(row_sum - 1.0) > 1e-10)
            throw ValidationError("beta row " + std::to_string(i) + " does not sum to 1");
    }
}

}  // namespace ctm
