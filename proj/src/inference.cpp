#include "ctm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ctm/errors.hpp"
#include "ctm/math_util.hpp"

namespace ctm {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMinStep = 9.313225746154785e-10;  // 2^-30
constexpr double kNu2Lo = 1e-10;
constexpr double kNu2Hi = 100.0;

}  // namespace

void validate(const InferenceConfig& cfg) {
    if (cfg.doc_tol <= 0 || cfg.lambda_grad_tol <= 0 || cfg.nu2_tol <= 0)
        throw ValidationError("inference tolerances must be positive");
    if (cfg.doc_max_iter < 1 || cfg.lambda_max_iter < 1 || cfg.nu2_max_iter < 1)
        throw ValidationError("inference iteration caps must be >= 1");
}

Eigen::VectorXd logistic_normal(const Eigen::VectorXd& eta) {
    return softmax(eta);
}

double update_log_zeta(const Eigen::VectorXd& lambda, const Eigen::VectorXd& nu2) {
    return log_sum_exp(lambda + 0.5 * nu2);
}

double update_zeta(const Eigen::VectorXd& lambda, const Eigen::VectorXd& nu2) {
    return std::exp(update_log_zeta(lambda, nu2));
}

Eigen::MatrixXd update_phi(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& log_beta,
                           const BagOfWords& doc) {
    const auto K = lambda.size();
    const auto M = static_cast<Eigen::Index>(doc.entries.size());
    Eigen::MatrixXd phi(M, K);
    for (Eigen::Index m = 0; m < M; ++m) {
        const int v = doc.entries[static_cast<size_t>(m)].term;
        if (v < 0 || v >= log_beta.cols())
            throw IndexOutOfRange("document term id " + std::to_string(v) +
                                  " outside vocabulary of size " + std::to_string(log_beta.cols()));
        Eigen::VectorXd scores = lambda + log_beta.col(v);
        const double lse = log_sum_exp(scores);
        if (!std::isfinite(lse))
            throw DegenerateRow("all topic scores for term " + std::to_string(v) + " are -inf");
        phi.row(m) = (scores.array() - lse).exp();
    }
    return phi;
}

Eigen::VectorXd phi_count_sums(const Eigen::MatrixXd& phi, const BagOfWords& doc) {
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(phi.cols());
    for (Eigen::Index m = 0; m < phi.rows(); ++m)
        sums += doc.entries[static_cast<size_t>(m)].count * phi.row(m).transpose();
    return sums;
}

Eigen::VectorXd lambda_gradient(const Eigen::VectorXd& lambda, const Eigen::VectorXd& nu2,
                                double log_zeta, const Eigen::VectorXd& phi_col_sums,
                                int num_words, const ModelParams& params) {
    Eigen::VectorXd expv = (lambda.array() + 0.5 * nu2.array() - log_zeta).exp();
    return -(params.sigma_inv * (lambda - params.mu)) + phi_col_sums - num_words * expv;
}

double lambda_objective(const Eigen::VectorXd& lambda, const Eigen::VectorXd& nu2,
                        double log_zeta, const Eigen::VectorXd& phi_col_sums,
                        int num_words, const ModelParams& params) {
    Eigen::VectorXd diff = lambda - params.mu;
    const double quad = -0.5 * diff.dot(params.sigma_inv * diff);
    const double lin = lambda.dot(phi_col_sums);
    const double expsum = (lambda.array() + 0.5 * nu2.array() - log_zeta).exp().sum();
    return quad + lin - num_words * expsum;
}

Eigen::VectorXd optimize_lambda(const Eigen::VectorXd& lambda0, const Eigen::VectorXd& nu2,
                                double log_zeta, const Eigen::VectorXd& phi_col_sums,
                                int num_words, const ModelParams& params,
                                const InferenceConfig& cfg, bool* line_search_failed) {
    Eigen::VectorXd lambda = lambda0;
    double f = lambda_objective(lambda, nu2, log_zeta, phi_col_sums, num_words, params);
    for (int it = 0; it < cfg.lambda_max_iter; ++it) {
        Eigen::VectorXd grad = lambda_gradient(lambda, nu2, log_zeta, phi_col_sums, num_words, params);
        if (grad.lpNorm<Eigen::Infinity>() < cfg.lambda_grad_tol) break;
        bool accepted = false;
        for (double step = 1.0; step >= kMinStep; step *= 0.5) {
            Eigen::VectorXd cand = lambda + step * grad;
            const double fc = lambda_objective(cand, nu2, log_zeta, phi_col_sums, num_words, params);
            if (std::isfinite(fc) && fc > f) {
                lambda = std::move(cand);
                f = fc;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (line_search_failed) *line_search_failed = true;
            break;
        }
    }
    return lambda;
}

double nu2_residual(double nu2_i, double lambda_i, double sigma_inv_ii, double log_zeta,
                    int num_words) {
    return -0.5 * sigma_inv_ii - 0.5 * num_words * std::exp(lambda_i + 0.5 * nu2_i - log_zeta) +
           0.5 / nu2_i;
}

namespace {

// solves nu2_residual(v) = 0 for one coordinate; the residual is strictly
// decreasing in v so the bracket [lo, hi] with r(lo) > 0 > r(hi) pins the root
double solve_nu2(double lambda_i, double sigma_inv_ii, double log_zeta, int num_words,
                 const InferenceConfig& cfg, bool* fallback) {
    auto residual = [&](double v) {
        return nu2_residual(v, lambda_i, sigma_inv_ii, log_zeta, num_words);
    };

    double lo = kNu2Lo;
    if (residual(lo) <= 0.0) return lo;  // root at or below the floor
    double hi = kNu2Hi;
    while (residual(hi) > 0.0 && hi < 1e8) hi *= 2.0;

    double v = 1.0;
    v = std::clamp(v, lo, hi);
    for (int it = 0; it < cfg.nu2_max_iter; ++it) {
        const double r = residual(v);
        if (std::abs(r) < cfg.nu2_tol) return v;
        if (r > 0.0) lo = v; else hi = v;
        // Newton in x = log v
        const double drdv = -0.25 * num_words * std::exp(lambda_i + 0.5 * v - log_zeta) -
                            0.5 / (v * v);
        const double drdx = drdv * v;
        double next = v * std::exp(-r / drdx);
        if (!(next > lo && next < hi) || !std::isfinite(next))
            next = std::sqrt(lo * hi);
        v = next;
    }

    if (fallback) *fallback = true;
    lo = kNu2Lo;
    hi = kNu2Hi;
    while (residual(hi) > 0.0 && hi < 1e8) hi *= 2.0;
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 2000; ++it) {
        mid = 0.5 * (lo + hi);
        const double r = residual(mid);
        if (std::abs(r) < cfg.nu2_tol) break;
        if (r > 0.0) lo = mid; else hi = mid;
    }
    return mid;
}

}  // namespace

Eigen::VectorXd optimize_nu2(const Eigen::VectorXd& lambda, double log_zeta, int num_words,
                             const ModelParams& params, const InferenceConfig& cfg,
                             bool* fallback) {
    const auto K = lambda.size();
    Eigen::VectorXd nu2(K);
    for (Eigen::Index i = 0; i < K; ++i)
        nu2[i] = solve_nu2(lambda[i], params.sigma_inv(i, i), log_zeta, num_words, cfg, fallback);
    return nu2;
}

double doc_bound(const ModelParams& params, const DocVariational& state, const BagOfWords& doc) {
    const int K = params.K;
    const double N = doc.total_words();

    Eigen::VectorXd diff = state.lambda - params.mu;
    const double trace_term = (state.nu2.array() * params.sigma_inv.diagonal().array()).sum();
    const double gauss = -0.5 * params.log_det_sigma - 0.5 * K * std::log(2.0 * kPi) -
                         0.5 * (trace_term + diff.dot(params.sigma_inv * diff));

    //  E_q[log p(z_n | eta)] per token, with the zeta tangent bound on
    //  E[log sum exp eta]: lambda^T phi_n - (1/zeta) sum_i exp(lambda_i + nu2_i/2) + 1 - log zeta
    const double expsum_over_zeta =
        (state.lambda.array() + 0.5 * state.nu2.array() - state.log_zeta).exp().sum();

    double lambda_phi = 0.0;
    double word_term = 0.0;
    double phi_entropy = 0.0;
    for (Eigen::Index m = 0; m < state.phi.rows(); ++m) {
        const auto& entry = doc.entries[static_cast<size_t>(m)];
        const double c = entry.count;
        lambda_phi += c * state.lambda.dot(state.phi.row(m));
        word_term += c * state.phi.row(m).dot(params.log_beta.col(entry.term));
        for (int i = 0; i < K; ++i) {
            const double p = state.phi(m, i);
            if (p > 0.0) phi_entropy -= c * p * std::log(p);
        }
    }
    const double z_term = lambda_phi - N * (expsum_over_zeta - 1.0 + state.log_zeta);

    const double gauss_entropy =
        0.5 * (state.nu2.array().log().sum() + K * (std::log(2.0 * kPi) + 1.0));

    return gauss + z_term + word_term + gauss_entropy + phi_entropy;
}

DocVariational infer_document(const BagOfWords& doc, const ModelParams& params,
                              const InferenceConfig& cfg) {
    validate(cfg);
    const int K = params.K;
    const auto M = static_cast<Eigen::Index>(doc.entries.size());
    const int N = doc.total_words();
    if (M == 0 || N < 1)
        throw ValidationError("cannot infer an empty document");

    DocVariational state;
    state.lambda = Eigen::VectorXd::Zero(K);
    state.nu2 = Eigen::VectorXd::Ones(K);
    state.phi = Eigen::MatrixXd::Constant(M, K, 1.0 / K);
    state.log_zeta = update_log_zeta(state.lambda, state.nu2);
    state.bound = doc_bound(params, state, doc);

    for (int sweep = 1; sweep <= cfg.doc_max_iter; ++sweep) {
        state.log_zeta = update_log_zeta(state.lambda, state.nu2);
        state.phi = update_phi(state.lambda, params.log_beta, doc);
        Eigen::VectorXd col_sums = phi_count_sums(state.phi, doc);

        state.lambda = optimize_lambda(state.lambda, state.nu2, state.log_zeta, col_sums, N,
                                       params, cfg, &state.line_search_failed);
        state.log_zeta = update_log_zeta(state.lambda, state.nu2);

        state.nu2 = optimize_nu2(state.lambda, state.log_zeta, N, params, cfg, &state.nu2_fallback);
        state.log_zeta = update_log_zeta(state.lambda, state.nu2);

        const double prev = state.bound;
        state.bound = doc_bound(params, state, doc);
        state.sweeps = sweep;
        const double rel = std::abs(state.bound - prev) / std::max(std::abs(prev), 1e-10);
        if (rel < cfg.doc_tol) break;
    }

    if (!state.lambda.allFinite() || !state.nu2.allFinite() || !state.phi.allFinite() ||
        !std::isfinite(state.log_zeta) || !std::isfinite(state.bound))
        throw ValidationError("document inference produced non-finite state for doc '" +
                              doc.doc_id + "'");
    return state;
}

}  // namespace ctm
