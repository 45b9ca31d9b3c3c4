#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "ctm/inference.hpp"

namespace ctm {

// Associatively mergeable E-step accumulators. The (lambda - mu) outer sum of
// the M-step is carried as sum(lambda lambda^T) and completed with -D mu mu^T
// once all shards have reported.
struct SufficientStats {
    Eigen::MatrixXd beta_ss;           // K x V
    Eigen::VectorXd lambda_sum;        // K
    Eigen::MatrixXd lambda_outer_sum;  // K x K
    Eigen::VectorXd nu2_sum;           // K
    long doc_count = 0;
    double bound_sum = 0.0;

    static SufficientStats zero(int K, int V);
    void add_document(const BagOfWords& doc, const DocVariational& state);
};

// componentwise sums; throws DimensionMismatch
SufficientStats merge_stats(const SufficientStats& a, const SufficientStats& b);

struct TrainConfig {
    int K = 1;
    int em_max_iter = 100;
    double em_tol = 1e-4;  // relative corpus-bound change
    int workers = 0;       // 0 = available cores
    std::uint64_t seed = 0;
    double ridge = 1e-4;          // added to the sigma diagonal
    double beta_smoothing = 1e-2; // pseudo-count per beta cell
    InferenceConfig inference;
};

void validate(const TrainConfig& cfg);

struct TraceEntry {
    int iteration = 0;  // 1-based
    double bound = 0.0;
    double rel_change = 0.0;  // infinity on the first iteration
    double seconds = 0.0;
    std::vector<long> shard_doc_counts;
};

struct TrainTrace {
    std::vector<TraceEntry> entries;
};

// mu = 0, sigma = I, beta rows = normalized(1/V + Uniform(0, 0.01) jitter)
ModelParams init_model(int K, int V, std::uint64_t seed);

// contiguous shards in corpus order, sizes differing by at most one;
// workers > doc count collapses to singleton shards
std::vector<std::span<const BagOfWords>> partition(const Corpus& corpus, int workers);

// Mapper: per-document inference accumulated into shard statistics
SufficientStats e_step_shard(std::span<const BagOfWords> shard, const ModelParams& params,
                             const InferenceConfig& cfg);

// Reducer: beta from smoothed phi counts, mu and sigma from the lambda/nu2
// accumulators, ridge-stabilized Cholesky of sigma
ModelParams m_step(const SufficientStats& stats, const TrainConfig& cfg);

using IterationCallback = std::function<void(const TraceEntry&)>;

// Driver: E-step over shards (concurrent, read-only params), ordered merge,
// M-step, iterated until the relative bound change drops below em_tol.
std::pair<ModelParams, TrainTrace> train(const Corpus& corpus, int vocab_size,
                                         const TrainConfig& cfg,
                                         const IterationCallback& on_iteration = {});

}  // namespace ctm
