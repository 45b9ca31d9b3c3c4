#include "ctm/em.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <random>
#include <string>
#include <thread>

#include "ctm/errors.hpp"
#include "ctm/log.hpp"

namespace ctm {

SufficientStats SufficientStats::zero(int K, int V) {
    if (K < 1 || V < 1) throw InvalidDimensions("stats need K >= 1 and V >= 1");
    SufficientStats s;
    s.beta_ss = Eigen::MatrixXd::Zero(K, V);
    s.lambda_sum = Eigen::VectorXd::Zero(K);
    s.lambda_outer_sum = Eigen::MatrixXd::Zero(K, K);
    s.nu2_sum = Eigen::VectorXd::Zero(K);
    return s;
}

void SufficientStats::add_document(const BagOfWords& doc, const DocVariational& state) {
    for (Eigen::Index m = 0; m < state.phi.rows(); ++m) {
        const auto& entry = doc.entries[static_cast<size_t>(m)];
        beta_ss.col(entry.term) += entry.count * state.phi.row(m).transpose();
    }
    lambda_sum += state.lambda;
    lambda_outer_sum += state.lambda * state.lambda.transpose();
    nu2_sum += state.nu2;
    doc_count += 1;
    bound_sum += state.bound;
}

SufficientStats merge_stats(const SufficientStats& a, const SufficientStats& b) {
    if (a.beta_ss.rows() != b.beta_ss.rows() || a.beta_ss.cols() != b.beta_ss.cols())
        throw DimensionMismatch("cannot merge stats of different K or V");
    SufficientStats out;
    out.beta_ss = a.beta_ss + b.beta_ss;
    out.lambda_sum = a.lambda_sum + b.lambda_sum;
    out.lambda_outer_sum = a.lambda_outer_sum + b.lambda_outer_sum;
    out.nu2_sum = a.nu2_sum + b.nu2_sum;
    out.doc_count = a.doc_count + b.doc_count;
    out.bound_sum = a.bound_sum + b.bound_sum;
    return out;
}

void validate(const TrainConfig& cfg) {
    if (cfg.K < 1) throw ValidationError("topic count must be >= 1");
    if (cfg.em_max_iter < 1) throw ValidationError("em_max_iter must be >= 1");
    if (cfg.em_tol < 0) throw ValidationError("em_tol must be >= 0");
    if (cfg.workers < 0) throw ValidationError("workers must be >= 0 (0 = available cores)");
    if (cfg.ridge < 0) throw ValidationError("ridge must be >= 0");
    if (!(cfg.beta_smoothing > 0)) throw ValidationError("beta_smoothing must be > 0");
    validate(cfg.inference);
}

ModelParams init_model(int K, int V, std::uint64_t seed) {
    if (K < 1) throw InvalidDimensions("topic count must be >= 1");
    if (V < 2) throw InvalidDimensions("vocabulary size must be >= 2");
    ModelParams params;
    params.K = K;
    params.V = V;
    params.mu = Eigen::VectorXd::Zero(K);
    set_sigma(params, Eigen::MatrixXd::Identity(K, K));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(0.0, 0.01);
    params.log_beta.resize(K, V);
    for (int i = 0; i < K; ++i) {
        Eigen::VectorXd row(V);
        for (int v = 0; v < V; ++v) row[v] = 1.0 / V + jitter(rng);
        params.log_beta.row(i) = (row / row.sum()).array().log();
    }
    return params;
}

std::vector<std::span<const BagOfWords>> partition(const Corpus& corpus, int workers) {
    if (corpus.empty()) throw ValidationError("cannot partition an empty corpus");
    if (workers < 1) throw ValidationError("worker count must be >= 1");
    const size_t D = corpus.size();
    const size_t W = std::min<size_t>(static_cast<size_t>(workers), D);
    const size_t base = D / W;
    const size_t rem = D % W;
    std::vector<std::span<const BagOfWords>> shards;
    shards.reserve(W);
    size_t offset = 0;
    for (size_t s = 0; s < W; ++s) {
        const size_t len = base + (s < rem ? 1 : 0);
        shards.emplace_back(corpus.data() + offset, len);
        offset += len;
    }
    return shards;
}

SufficientStats e_step_shard(std::span<const BagOfWords> shard, const ModelParams& params,
                             const InferenceConfig& cfg) {
    SufficientStats stats = SufficientStats::zero(params.K, params.V);
    for (const auto& doc : shard) {
        DocVariational state = infer_document(doc, params, cfg);
        stats.add_document(doc, state);
    }
    return stats;
}

ModelParams m_step(const SufficientStats& stats, const TrainConfig& cfg) {
    if (stats.doc_count < 1) throw ValidationError("m_step needs at least one document");
    const auto K = stats.beta_ss.rows();
    const auto V = stats.beta_ss.cols();
    const double D = static_cast<double>(stats.doc_count);

    ModelParams params;
    params.K = static_cast<int>(K);
    params.V = static_cast<int>(V);

    params.log_beta.resize(K, V);
    for (Eigen::Index i = 0; i < K; ++i) {
        Eigen::ArrayXd row = stats.beta_ss.row(i).transpose().array() + cfg.beta_smoothing;
        const double total = row.sum();
        if (!std::isfinite(total) || total <= 0)
            throw DegenerateRow("topic " + std::to_string(i) + " has no usable mass");
        params.log_beta.row(i) = (row / total).log();
    }

    params.mu = stats.lambda_sum / D;
    Eigen::MatrixXd sigma =
        (stats.nu2_sum.asDiagonal().toDenseMatrix() + stats.lambda_outer_sum -
         D * params.mu * params.mu.transpose()) /
        D;

    double added = cfg.ridge;
    for (int attempt = 0; attempt <= 8; ++attempt) {
        try {
            set_sigma(params, sigma + added * Eigen::MatrixXd::Identity(K, K));
            if (attempt > 0)
                log_msg(LogLevel::Warn, "sigma needed extra ridge " + std::to_string(added));
            return params;
        } catch (const SingularSigma&) {
            added = added > 0 ? 2.0 * added : 1e-8;
        }
    }
    throw SingularSigma("covariance not positive definite after 8 ridge doublings");
}

std::pair<ModelParams, TrainTrace> train(const Corpus& corpus, int vocab_size,
                                         const TrainConfig& cfg,
                                         const IterationCallback& on_iteration) {
    validate(cfg);
    if (corpus.empty()) throw ValidationError("cannot train on an empty corpus");

    int workers = cfg.workers;
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());

    ModelParams params = init_model(cfg.K, vocab_size, cfg.seed);
    TrainTrace trace;
    double prev_bound = 0.0;

    for (int iter = 1; iter <= cfg.em_max_iter; ++iter) {
        const auto t0 = std::chrono::steady_clock::now();
        auto shards = partition(corpus, workers);

        std::vector<std::future<SufficientStats>> futures;
        futures.reserve(shards.size());
        for (auto shard : shards)
            futures.push_back(std::async(std::launch::async, [shard, &params, &cfg] {
                return e_step_shard(shard, params, cfg.inference);
            }));

        // ascending shard index keeps the reduction order fixed
        SufficientStats stats = futures[0].get();
        for (size_t s = 1; s < futures.size(); ++s)
            stats = merge_stats(stats, futures[s].get());

        TraceEntry entry;
        entry.iteration = iter;
        entry.bound = stats.bound_sum;
        entry.rel_change = iter == 1 ? std::numeric_limits<double>::infinity()
                                     : std::abs(entry.bound - prev_bound) /
                                           std::max(std::abs(prev_bound), 1e-10);
        entry.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        for (const auto& shard : shards) entry.shard_doc_counts.push_back(shard.size());
        trace.entries.push_back(entry);
        if (on_iteration) on_iteration(entry);
        prev_bound = entry.bound;

        log_msg(LogLevel::Info, "em iteration " + std::to_string(iter) + " bound " +
                                    std::to_string(entry.bound));

        // stop before another M-step so the returned params are the ones the
        // final bound was measured on
        if (iter > 1 && entry.rel_change < cfg.em_tol) break;

        params = m_step(stats, cfg);
    }

    return {std::move(params), std::move(trace)};
}

}  // namespace ctm
