#pragma once

#include <Eigen/Dense>

namespace ctm {

// Global CTM parameters: logistic-normal prior (mu, sigma) over eta and
// per-topic log word distributions.
struct ModelParams {
    int K = 0;  // topics
    int V = 0;  // vocabulary size
    Eigen::VectorXd mu;         // K
    Eigen::MatrixXd sigma;      // K x K
    Eigen::MatrixXd sigma_inv;  // K x K
    double log_det_sigma = 0.0;
    Eigen::MatrixXd log_beta;   // K x V, rows of exp() sum to 1
};

// Symmetrizes, Cholesky-factors and stores sigma with its inverse and
// log-determinant. Throws SingularSigma when the factorization fails.
void set_sigma(ModelParams& params, const Eigen::MatrixXd& sigma);

// Checks the ModelParams invariants (sigma symmetric positive definite,
// sigma_inv consistent, beta rows normalized, everything finite).
// Throws ValidationError naming the first violated property.
void validate(const ModelParams& params);

}  // namespace ctm
