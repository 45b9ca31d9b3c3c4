#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "ctm/em.hpp"
#include "ctm/errors.hpp"
#include "test_util.hpp"

using namespace ctm;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

SufficientStats random_stats(int K, int V, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 3.0);
    std::uniform_real_distribution<double> s(-2.0, 2.0);
    SufficientStats st = SufficientStats::zero(K, V);
    for (int i = 0; i < K; ++i) {
        st.lambda_sum[i] = s(rng);
        st.nu2_sum[i] = u(rng);
        for (int v = 0; v < V; ++v) st.beta_ss(i, v) = u(rng);
        for (int j = 0; j < K; ++j) st.lambda_outer_sum(i, j) = s(rng);
    }
    st.doc_count = 1 + static_cast<long>(rng() % 9);
    st.bound_sum = s(rng) * 10;
    return st;
}

Corpus small_corpus(int V, int D, std::mt19937_64& rng) {
    Corpus corpus;
    for (int d = 0; d < D; ++d)
        corpus.push_back(testutil::random_doc(V, 5, rng, "doc" + std::to_string(d)));
    return corpus;
}

}  // namespace

TEST_CASE("partition yields contiguous near-equal shards") {
    std::mt19937_64 rng(7);
    const Corpus ten = small_corpus(6, 10, rng);
    auto shards = partition(ten, 3);
    REQUIRE(shards.size() == 3);
    CHECK(shards[0].size() == 4);
    CHECK(shards[1].size() == 3);
    CHECK(shards[2].size() == 3);
    // contiguity: concatenation reproduces the corpus order
    size_t pos = 0;
    for (const auto& shard : shards)
        for (const auto& doc : shard) CHECK(doc.doc_id == ten[pos++].doc_id);
    CHECK(pos == ten.size());

    const Corpus five = small_corpus(6, 5, rng);
    shards = partition(five, 1);
    REQUIRE(shards.size() == 1);
    CHECK(shards[0].size() == 5);

    const Corpus two = small_corpus(6, 2, rng);
    shards = partition(two, 8);
    REQUIRE(shards.size() == 2);
    CHECK(shards[0].size() == 1);
    CHECK(shards[1].size() == 1);

    CHECK_THROWS_AS(partition(Corpus{}, 2), ValidationError);
    CHECK_THROWS_AS(partition(two, 0), ValidationError);
}

TEST_CASE("partition sizes always differ by at most one") {
    std::mt19937_64 rng(13);
    for (int D : {1, 3, 7, 23, 64}) {
        const Corpus corpus = small_corpus(5, D, rng);
        for (int W : {1, 2, 3, 5, 9, 64, 100}) {
            const auto shards = partition(corpus, W);
            size_t lo = corpus.size(), hi = 0, total = 0;
            for (const auto& s : shards) {
                lo = std::min(lo, s.size());
                hi = std::max(hi, s.size());
                total += s.size();
            }
            CHECK(total == corpus.size());
            CHECK(hi - lo <= 1);
            CHECK(shards.size() == static_cast<size_t>(std::min(W, D)));
        }
    }
}

TEST_CASE("sufficient stats zero is the merge identity") {
    std::mt19937_64 rng(19);
    const SufficientStats a = random_stats(3, 5, rng);
    const SufficientStats z = SufficientStats::zero(3, 5);

    const SufficientStats za = merge_stats(z, a);
    CHECK(testutil::all_close(za.beta_ss, a.beta_ss, 0.0));
    CHECK(testutil::all_close(za.lambda_outer_sum, a.lambda_outer_sum, 0.0));
    CHECK(za.lambda_sum == a.lambda_sum);
    CHECK(za.nu2_sum == a.nu2_sum);
    CHECK(za.doc_count == a.doc_count);
    CHECK(za.bound_sum == a.bound_sum);
}

TEST_CASE("merge_stats is commutative and associative") {
    std::mt19937_64 rng(29);
    const SufficientStats a = random_stats(3, 5, rng);
    const SufficientStats b = random_stats(3, 5, rng);
    const SufficientStats c = random_stats(3, 5, rng);

    const SufficientStats ab = merge_stats(a, b);
    const SufficientStats ba = merge_stats(b, a);
    CHECK(testutil::all_close(ab.beta_ss, ba.beta_ss, 1e-12));
    CHECK(testutil::all_close(ab.lambda_outer_sum, ba.lambda_outer_sum, 1e-12));
    CHECK(testutil::all_close(ab.lambda_sum, ba.lambda_sum, 1e-12));
    CHECK(ab.doc_count == ba.doc_count);
    CHECK(testutil::close(ab.bound_sum, ba.bound_sum, 1e-12));

    const SufficientStats left = merge_stats(merge_stats(a, b), c);
    const SufficientStats right = merge_stats(a, merge_stats(b, c));
    CHECK(testutil::all_close(left.beta_ss, right.beta_ss, 1e-12));
    CHECK(testutil::all_close(left.lambda_outer_sum, right.lambda_outer_sum, 1e-12));
    CHECK(testutil::all_close(left.lambda_sum, right.lambda_sum, 1e-12));
    CHECK(testutil::all_close(left.nu2_sum, right.nu2_sum, 1e-12));
    CHECK(left.doc_count == right.doc_count);
    CHECK(testutil::close(left.bound_sum, right.bound_sum, 1e-12));

    const SufficientStats other = random_stats(2, 5, rng);
    CHECK_THROWS_AS(merge_stats(a, other), DimensionMismatch);
}

TEST_CASE("add_document accumulates the mapper emissions") {
    const int K = 2;
    const BagOfWords doc = testutil::make_doc("d", {{1, 2}, {3, 1}});
    DocVariational state;
    state.lambda = (VectorXd(2) << 0.5, -0.5).finished();
    state.nu2 = (VectorXd(2) << 0.8, 1.2).finished();
    state.phi = (MatrixXd(2, 2) << 0.25, 0.75, 0.6, 0.4).finished();
    state.bound = -3.5;

    SufficientStats st = SufficientStats::zero(K, 5);
    st.add_document(doc, state);

    CHECK(st.beta_ss(0, 1) == doctest::Approx(0.5).epsilon(1e-14));   // 2 * 0.25
    CHECK(st.beta_ss(1, 1) == doctest::Approx(1.5).epsilon(1e-14));   // 2 * 0.75
    CHECK(st.beta_ss(0, 3) == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(st.beta_ss(1, 3) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(st.beta_ss.sum() == doctest::Approx(doc.total_words()).epsilon(1e-12));
    CHECK(st.lambda_sum == state.lambda);
    CHECK(st.nu2_sum == state.nu2);
    CHECK(testutil::all_close(st.lambda_outer_sum,
                              state.lambda * state.lambda.transpose(), 1e-14));
    CHECK(st.doc_count == 1);
    CHECK(st.bound_sum == -3.5);
}

TEST_CASE("e_step_shard merges exactly like a single pass") {
    std::mt19937_64 rng(37);
    const int K = 3, V = 8;
    const ModelParams params = testutil::random_model(K, V, rng);
    const Corpus corpus = small_corpus(V, 9, rng);
    InferenceConfig cfg;

    const SufficientStats empty =
        e_step_shard(std::span<const BagOfWords>{}, params, cfg);
    CHECK(empty.doc_count == 0);
    CHECK(empty.beta_ss.cwiseAbs().maxCoeff() == 0.0);

    const auto whole = partition(corpus, 1);
    const SufficientStats single = e_step_shard(whole[0], params, cfg);

    const auto thirds = partition(corpus, 3);
    SufficientStats merged = SufficientStats::zero(K, V);
    for (const auto& shard : thirds)
        merged = merge_stats(merged, e_step_shard(shard, params, cfg));

    CHECK(merged.doc_count == single.doc_count);
    CHECK(testutil::all_close(merged.beta_ss, single.beta_ss, 1e-12));
    CHECK(testutil::all_close(merged.lambda_sum, single.lambda_sum, 1e-12));
    CHECK(testutil::all_close(merged.lambda_outer_sum, single.lambda_outer_sum, 1e-12));
    CHECK(testutil::all_close(merged.nu2_sum, single.nu2_sum, 1e-12));
    CHECK(testutil::close(merged.bound_sum, single.bound_sum, 1e-12));
}

TEST_CASE("m_step closed forms") {
    TrainConfig cfg;
    cfg.K = 2;
    cfg.ridge = 1e-3;
    cfg.beta_smoothing = 0.01;

    // one document: the outer sums cancel, sigma = diag(nu2) + ridge
    SufficientStats one = SufficientStats::zero(2, 4);
    one.doc_count = 1;
    one.lambda_sum = (VectorXd(2) << 0.7, -0.2).finished();
    one.lambda_outer_sum = one.lambda_sum * one.lambda_sum.transpose();
    one.nu2_sum = (VectorXd(2) << 0.5, 1.5).finished();
    one.beta_ss = MatrixXd::Constant(2, 4, 1.0);

    const ModelParams m1 = m_step(one, cfg);
    CHECK(m1.mu == one.lambda_sum);
    MatrixXd expected = one.nu2_sum.asDiagonal();
    expected += cfg.ridge * MatrixXd::Identity(2, 2);
    CHECK(testutil::all_close(m1.sigma, expected, 1e-14));

    // two documents: mu is the mean of the lambdas
    SufficientStats two = SufficientStats::zero(2, 4);
    two.doc_count = 2;
    const VectorXd l1 = (VectorXd(2) << 1.0, 2.0).finished();
    const VectorXd l2 = (VectorXd(2) << 3.0, 4.0).finished();
    two.lambda_sum = l1 + l2;
    two.lambda_outer_sum = l1 * l1.transpose() + l2 * l2.transpose();
    two.nu2_sum = (VectorXd(2) << 1.0, 1.0).finished();
    two.beta_ss = MatrixXd::Constant(2, 4, 2.0);

    const ModelParams m2 = m_step(two, cfg);
    CHECK(m2.mu[0] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(m2.mu[1] == doctest::Approx(3.0).epsilon(1e-14));

    CHECK_THROWS_AS(m_step(SufficientStats::zero(2, 4), cfg), ValidationError);
}

TEST_CASE("single-topic m_step reduces to smoothed frequencies") {
    // K=1: phi is identically 1, so beta_ss carries raw term counts
    Corpus corpus;
    corpus.push_back(testutil::make_doc("d1", {{0, 2}, {1, 1}}));
    corpus.push_back(testutil::make_doc("d2", {{1, 3}}));
    corpus.push_back(testutil::make_doc("d3", {{0, 1}, {2, 1}}));

    TrainConfig cfg;
    cfg.K = 1;
    cfg.beta_smoothing = 0.01;

    const ModelParams init = init_model(1, 3, 0);
    const SufficientStats stats = e_step_shard(partition(corpus, 1)[0], init, cfg.inference);
    CHECK(stats.beta_ss(0, 0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(stats.beta_ss(0, 1) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(stats.beta_ss(0, 2) == doctest::Approx(1.0).epsilon(1e-12));

    const ModelParams fitted = m_step(stats, cfg);
    const double total = 8.0 + 3 * 0.01;
    CHECK(std::exp(fitted.log_beta(0, 0)) == doctest::Approx(3.01 / total).epsilon(1e-12));
    CHECK(std::exp(fitted.log_beta(0, 1)) == doctest::Approx(4.01 / total).epsilon(1e-12));
    CHECK(std::exp(fitted.log_beta(0, 2)) == doctest::Approx(1.01 / total).epsilon(1e-12));
}

TEST_CASE("m_step matches the reducer formulas computed directly") {
    std::mt19937_64 rng(43);
    const int K = 3, V = 6, D = 20;
    std::uniform_real_distribution<double> lam(-2.0, 2.0);
    std::uniform_real_distribution<double> var(0.1, 2.0);

    std::vector<VectorXd> lambdas;
    std::vector<VectorXd> nu2s;
    SufficientStats stats = SufficientStats::zero(K, V);
    for (int d = 0; d < D; ++d) {
        VectorXd l(K), v(K);
        for (int i = 0; i < K; ++i) {
            l[i] = lam(rng);
            v[i] = var(rng);
        }
        lambdas.push_back(l);
        nu2s.push_back(v);
        stats.lambda_sum += l;
        stats.lambda_outer_sum += l * l.transpose();
        stats.nu2_sum += v;
        ++stats.doc_count;
        for (int i = 0; i < K; ++i)
            for (int w = 0; w < V; ++w) stats.beta_ss(i, w) += var(rng);
    }

    TrainConfig cfg;
    cfg.K = K;
    cfg.ridge = 1e-4;
    cfg.beta_smoothing = 0.01;
    const ModelParams fitted = m_step(stats, cfg);

    VectorXd mu = VectorXd::Zero(K);
    for (const auto& l : lambdas) mu += l;
    mu /= D;
    MatrixXd sigma = MatrixXd::Zero(K, K);
    for (int d = 0; d < D; ++d) {
        sigma += nu2s[static_cast<size_t>(d)].asDiagonal();
        const VectorXd c = lambdas[static_cast<size_t>(d)] - mu;
        sigma += c * c.transpose();
    }
    sigma /= D;
    sigma += cfg.ridge * MatrixXd::Identity(K, K);

    CHECK(testutil::all_close(fitted.mu, mu, 1e-10));
    CHECK(testutil::all_close(fitted.sigma, sigma, 1e-10));
    for (int i = 0; i < K; ++i) {
        const double row_total = stats.beta_ss.row(i).sum() + V * cfg.beta_smoothing;
        for (int w = 0; w < V; ++w)
            CHECK(std::exp(fitted.log_beta(i, w)) ==
                  doctest::Approx((stats.beta_ss(i, w) + cfg.beta_smoothing) / row_total)
                      .epsilon(1e-10));
    }
}

TEST_CASE("m_step recovers from a degenerate covariance via ridge doubling") {
    // all lambdas identical and nu2 zero: raw sigma is exactly singular
    TrainConfig cfg;
    cfg.K = 2;
    cfg.ridge = 0.0;
    SufficientStats st = SufficientStats::zero(2, 3);
    st.doc_count = 4;
    const VectorXd l = (VectorXd(2) << 1.0, -1.0).finished();
    st.lambda_sum = 4 * l;
    st.lambda_outer_sum = 4 * (l * l.transpose());
    st.nu2_sum = VectorXd::Zero(2);
    st.beta_ss = MatrixXd::Constant(2, 3, 1.0);

    const ModelParams fitted = m_step(st, cfg);
    CHECK(std::isfinite(fitted.log_det_sigma));
    Eigen::LLT<MatrixXd> chol(fitted.sigma);
    CHECK(chol.info() == Eigen::Success);

    // a poisoned accumulator can never be repaired
    st.lambda_outer_sum(0, 1) = std::numeric_limits<double>::quiet_NaN();
    st.lambda_outer_sum(1, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(m_step(st, cfg), SingularSigma);
}

TEST_CASE("init_model is deterministic and normalized") {
    const ModelParams a = init_model(7, 100, 42);
    const ModelParams b = init_model(7, 100, 42);
    const ModelParams c = init_model(7, 100, 43);

    CHECK(testutil::all_close(a.log_beta, b.log_beta, 0.0));
    CHECK_FALSE(testutil::all_close(a.log_beta, c.log_beta, 1e-12));

    CHECK(a.mu.cwiseAbs().maxCoeff() == 0.0);
    CHECK(testutil::all_close(a.sigma, Eigen::MatrixXd::Identity(7, 7), 0.0));
    for (int i = 0; i < 7; ++i)
        CHECK(std::abs(a.log_beta.row(i).array().exp().sum() - 1.0) < 1e-10);

    CHECK_THROWS_AS(init_model(0, 10, 1), InvalidDimensions);
    CHECK_THROWS_AS(init_model(2, 1, 1), InvalidDimensions);
}

TEST_CASE("train config validation") {
    TrainConfig cfg;
    cfg.K = 2;
    CHECK_NOTHROW(validate(cfg));
    cfg.K = 0;
    CHECK_THROWS_AS(validate(cfg), ValidationError);
    cfg = TrainConfig{};
    cfg.K = 2;
    cfg.beta_smoothing = 0.0;
    CHECK_THROWS_AS(validate(cfg), ValidationError);
    cfg = TrainConfig{};
    cfg.K = 2;
    cfg.workers = -1;
    CHECK_THROWS_AS(validate(cfg), ValidationError);
    cfg = TrainConfig{};
    cfg.K = 2;
    cfg.ridge = -1e-9;
    CHECK_THROWS_AS(validate(cfg), ValidationError);
}

TEST_CASE("train improves the corpus bound monotonically") {
    std::mt19937_64 rng(47);
    const Corpus corpus = small_corpus(10, 25, rng);

    TrainConfig cfg;
    cfg.K = 3;
    cfg.workers = 1;
    cfg.em_max_iter = 12;
    cfg.em_tol = 0.0;
    cfg.seed = 5;

    const auto [params, trace] = train(corpus, 10, cfg);
    REQUIRE(trace.entries.size() == 12);
    for (size_t t = 1; t < trace.entries.size(); ++t) {
        const double prev = trace.entries[t - 1].bound;
        const double cur = trace.entries[t].bound;
        CHECK(cur >= prev - 1e-6 * std::max(1.0, std::abs(prev)));
    }
    CHECK(trace.entries.front().rel_change == std::numeric_limits<double>::infinity());
    for (const auto& entry : trace.entries) {
        long docs = 0;
        for (long c : entry.shard_doc_counts) docs += c;
        CHECK(docs == static_cast<long>(corpus.size()));
        CHECK(entry.seconds >= 0.0);
    }
    CHECK_NOTHROW(ctm::validate(params));
}

TEST_CASE("train stops once the relative change drops below tolerance") {
    std::mt19937_64 rng(53);
    const Corpus corpus = small_corpus(8, 15, rng);

    TrainConfig cfg;
    cfg.K = 2;
    cfg.workers = 1;
    cfg.em_max_iter = 100;
    cfg.em_tol = 1e-3;

    const auto [params, trace] = train(corpus, 8, cfg);
    REQUIRE(!trace.entries.empty());
    CHECK(trace.entries.size() < 100);
    CHECK(trace.entries.back().rel_change < 1e-3);
    // every earlier iteration was still above tolerance (no premature stop)
    for (size_t t = 1; t + 1 < trace.entries.size(); ++t)
        CHECK(trace.entries[t].rel_change >= 1e-3);
}

TEST_CASE("worker count does not change the fitted model") {
    std::mt19937_64 rng(59);
    const Corpus corpus = small_corpus(9, 13, rng);

    TrainConfig cfg;
    cfg.K = 3;
    cfg.em_max_iter = 4;
    cfg.em_tol = 0.0;
    cfg.seed = 11;

    cfg.workers = 1;
    const auto [p1, t1] = train(corpus, 9, cfg);
    cfg.workers = 3;
    const auto [p3, t3] = train(corpus, 9, cfg);

    CHECK(testutil::all_close(p1.mu, p3.mu, 1e-8));
    CHECK(testutil::all_close(p1.sigma, p3.sigma, 1e-8));
    CHECK(testutil::all_close(p1.log_beta, p3.log_beta, 1e-8));
    CHECK(t1.entries.back().shard_doc_counts.size() == 1);
    CHECK(t3.entries.back().shard_doc_counts.size() == 3);
}

TEST_CASE("train callback sees each iteration in order") {
    std::mt19937_64 rng(61);
    const Corpus corpus = small_corpus(7, 8, rng);
    TrainConfig cfg;
    cfg.K = 2;
    cfg.workers = 1;
    cfg.em_max_iter = 5;
    cfg.em_tol = 0.0;

    std::vector<int> seen;
    train(corpus, 7, cfg, [&](const TraceEntry& e) { seen.push_back(e.iteration); });
    CHECK(seen == std::vector<int>{1, 2, 3, 4, 5});
}

TEST_CASE("train fails fast on corrupt input") {
    Corpus corpus;
    corpus.push_back(testutil::make_doc("ok", {{0, 1}}));
    corpus.push_back(testutil::make_doc("bad", {{12, 1}}));  // term id >= V

    TrainConfig cfg;
    cfg.K = 2;
    cfg.workers = 1;
    cfg.em_max_iter = 3;

    int calls = 0;
    CHECK_THROWS_AS(
        train(corpus, 4, cfg, [&](const TraceEntry&) { ++calls; }),
        IndexOutOfRange);
    CHECK(calls == 0);  // died during the first E-step, before any trace entry

    CHECK_THROWS_AS(train(Corpus{}, 4, cfg), ValidationError);
}
