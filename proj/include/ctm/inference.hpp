#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "ctm/corpus.hpp"
#include "ctm/model.hpp"

namespace ctm {

struct InferenceConfig {
    double doc_tol = 1e-6;        // relative bound change per sweep
    int doc_max_iter = 100;       // coordinate-ascent sweeps
    int lambda_max_iter = 100;
    double lambda_grad_tol = 1e-5;  // infinity norm
    int nu2_max_iter = 50;
    double nu2_tol = 1e-8;          // stationarity residual magnitude
};

void validate(const InferenceConfig& cfg);

// Per-document variational state. phi has one row per distinct term of the
// document; counts weight the rows wherever token sums are needed.
struct DocVariational {
    Eigen::VectorXd lambda;  // K
    Eigen::VectorXd nu2;     // K, strictly positive
    double log_zeta = 0.0;   // zeta kept in log space
    Eigen::MatrixXd phi;     // M x K, rows sum to 1
    double bound = 0.0;      // document ELBO at this state
    int sweeps = 0;
    bool line_search_failed = false;
    bool nu2_fallback = false;

    double zeta() const { return std::exp(log_zeta); }
};

// theta_i = exp(eta_i) / sum_j exp(eta_j), max-subtracted
Eigen::VectorXd logistic_normal(const Eigen::VectorXd& eta);

// zeta = sum_i exp(lambda_i + nu2_i / 2)
double update_log_zeta(const Eigen::VectorXd& lambda, const Eigen::VectorXd& nu2);
double update_zeta(const Eigen::VectorXd& lambda, const Eigen::VectorXd& nu2);

// phi row for term v: softmax_i(lambda_i + log beta_{i,v})
Eigen::MatrixXd update_phi(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& log_beta,
                           const BagOfWords& doc);

// sum_n count_n * phi_n, a K-vector summing to N_d
Eigen::VectorXd phi_count_sums(const Eigen::MatrixXd& phi, const BagOfWords& doc);

// dL/dlambda = -sigma_inv (lambda - mu) + phi_col_sums - (N / zeta) exp(lambda + nu2/2)
Eigen::VectorXd lambda_gradient(const Eigen::VectorXd& lambda, const Eigen::VectorXd& nu2,
                                double log_zeta, const Eigen::VectorXd& phi_col_sums,
                                int num_words, const ModelParams& params);

// the lambda-dependent part of the document bound (used by the line search)
double lambda_objective(const Eigen::VectorXd& lambda, const Eigen::VectorXd& nu2,
                        double log_zeta, const Eigen::VectorXd& phi_col_sums,
                        int num_words, const ModelParams& params);

// Gradient ascent with a halving line search that only accepts steps
// increasing the bound. Stops at lambda_grad_tol or lambda_max_iter.
// *line_search_failed is set when no step in {1, 1/2, ..., 2^-30} helps.
Eigen::VectorXd optimize_lambda(const Eigen::VectorXd& lambda0, const Eigen::VectorXd& nu2,
                                double log_zeta, const Eigen::VectorXd& phi_col_sums,
                                int num_words, const ModelParams& params,
                                const InferenceConfig& cfg, bool* line_search_failed = nullptr);

// dL/dnu2_i at fixed zeta; strictly decreasing in nu2_i, so the root is unique
double nu2_residual(double nu2_i, double lambda_i, double sigma_inv_ii, double log_zeta,
                    int num_words);

// Per-coordinate safeguarded Newton in log nu2 with bisection fallback.
// Every output is > 0 and satisfies |residual| < nu2_tol on convergence.
Eigen::VectorXd optimize_nu2(const Eigen::VectorXd& lambda, double log_zeta, int num_words,
                             const ModelParams& params, const InferenceConfig& cfg,
                             bool* fallback = nullptr);

// The document ELBO with the zeta-based upper bound on E[log sum exp eta].
double doc_bound(const ModelParams& params, const DocVariational& state, const BagOfWords& doc);

// Coordinate ascent zeta -> phi -> lambda -> zeta -> nu2 -> zeta, initialized
// at lambda = 0, nu2 = 1, phi uniform; stops when the relative bound change
// drops below doc_tol or doc_max_iter is reached.
DocVariational infer_document(const BagOfWords& doc, const ModelParams& params,
                              const InferenceConfig& cfg);

}  // namespace ctm
