#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ctm/coherence.hpp"
#include "ctm/corpus.hpp"
#include "ctm/em.hpp"
#include "ctm/errors.hpp"
#include "ctm/store.hpp"

namespace {

struct PreprocessArgs {
    std::string input_dir;
    std::string out_prefix;
    ctm::PreprocessConfig cfg;
};

struct TrainArgs {
    std::string corpus_prefix;
    std::string out_dir;
    ctm::TrainConfig cfg;
};

struct TopicsArgs {
    std::string model_dir;
    int top_n = 10;
};

struct EvalArgs {
    std::string model_dir;
    std::string data;  // corpus prefix (umass) or reference text directory (uci)
    std::string measure = "umass";
    std::string out_path;
    ctm::CoherenceConfig cfg;
};

int run_preprocess(const PreprocessArgs& args) {
    ctm::validate(args.cfg);
    auto doc_tokens = ctm::tokenize_dir(args.input_dir, args.cfg);
    if (doc_tokens.empty())
        throw ctm::ValidationError("no documents in '" + args.input_dir + "'");

    std::vector<std::vector<std::string>> streams;
    streams.reserve(doc_tokens.size());
    for (const auto& [id, tokens] : doc_tokens) streams.push_back(tokens);

    auto vocab = ctm::build_vocabulary(ctm::accumulate_counts(streams), args.cfg);
    auto encoded = ctm::encode_corpus(doc_tokens, vocab);
    if (encoded.docs.empty())
        throw ctm::ValidationError("every document became empty after filtering");
    ctm::save_corpus(encoded.docs, vocab, args.out_prefix);

    std::printf("D=%zu V=%d tokens=%ld dropped=%zu\n", encoded.docs.size(), vocab.size(),
                encoded.total_tokens, encoded.dropped_doc_ids.size());
    return 0;
}

int run_train(const TrainArgs& args) {
    ctm::validate(args.cfg);
    auto [corpus, vocab] = ctm::load_corpus(args.corpus_prefix);

    auto [params, trace] =
        ctm::train(corpus, vocab.size(), args.cfg, [](const ctm::TraceEntry& e) {
            std::printf("iter=%d bound=%.17g rel=%.17g\n", e.iteration, e.bound, e.rel_change);
            std::fflush(stdout);
        });

    ctm::ModelBundle bundle;
    bundle.params = std::move(params);
    bundle.vocab_path = args.corpus_prefix + ".vocab";
    bundle.config = args.cfg;
    bundle.trace = std::move(trace);
    bundle.iterations = static_cast<int>(bundle.trace.entries.size());
    bundle.final_bound = bundle.trace.entries.back().bound;
    ctm::save_model(bundle, args.out_dir);
    return 0;
}

int run_topics(const TopicsArgs& args) {
    auto bundle = ctm::load_model(args.model_dir);
    if (args.top_n > bundle.params.V)
        throw ctm::ValidationError("top-n " + std::to_string(args.top_n) +
                                   " exceeds vocabulary size " +
                                   std::to_string(bundle.params.V));
    ctm::Vocabulary vocab(ctm::load_word_list(bundle.vocab_path));
    if (vocab.size() != bundle.params.V)
        throw ctm::ValidationError("vocabulary '" + bundle.vocab_path + "' has " +
                                   std::to_string(vocab.size()) + " terms but the model expects " +
                                   std::to_string(bundle.params.V));

    for (int k = 0; k < bundle.params.K; ++k) {
        std::printf("topic_%d\t", k);
        const auto words = ctm::top_words(bundle.params, k, args.top_n);
        for (size_t i = 0; i < words.size(); ++i)
            std::printf("%s%s", i ? " " : "", vocab.term(words[i]).c_str());
        std::printf("\n");
    }
    return 0;
}

int run_eval(const EvalArgs& args) {
    ctm::CoherenceConfig cfg = args.cfg;
    cfg.measure = ctm::parse_measure(args.measure);
    auto bundle = ctm::load_model(args.model_dir);

    ctm::CoherenceReport report;
    if (cfg.measure == ctm::CoherenceMeasure::Umass) {
        auto [corpus, vocab] = ctm::load_corpus(args.data);
        if (vocab.size() != bundle.params.V)
            throw ctm::ValidationError("corpus vocabulary has " + std::to_string(vocab.size()) +
                                       " terms but the model expects " +
                                       std::to_string(bundle.params.V));
        report = ctm::model_coherence_umass(bundle.params, corpus, cfg);
    } else {
        ctm::Vocabulary vocab(ctm::load_word_list(bundle.vocab_path));
        if (vocab.size() != bundle.params.V)
            throw ctm::ValidationError("vocabulary '" + bundle.vocab_path + "' has " +
                                       std::to_string(vocab.size()) +
                                       " terms but the model expects " +
                                       std::to_string(bundle.params.V));
        ctm::PreprocessConfig token_cfg;  // tokenization rules only; counts are not filtered
        auto doc_tokens = ctm::tokenize_dir(args.data, token_cfg);
        std::vector<std::vector<std::string>> reference;
        reference.reserve(doc_tokens.size());
        for (auto& [id, tokens] : doc_tokens) reference.push_back(std::move(tokens));
        report = ctm::model_coherence_uci(bundle.params, reference, vocab, cfg);
    }

    ctm::write_coherence_report(std::cout, report);
    if (!args.out_path.empty()) {
        std::ofstream out(args.out_path);
        if (!out) throw ctm::IoError("cannot write '" + args.out_path + "'");
        ctm::write_coherence_report(out, report);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"correlated topic model: preprocess, train, inspect, evaluate"};
    app.require_subcommand(1);

    PreprocessArgs pre;
    auto* cmd_pre = app.add_subcommand("preprocess", "build a vocabulary and sparse corpus from a text directory");
    cmd_pre->add_option("input_dir", pre.input_dir, "directory of plain-text documents")->required();
    cmd_pre->add_option("out_prefix", pre.out_prefix, "output prefix for .corpus and .vocab")->required();
    cmd_pre->add_option("--stopwords", pre.cfg.stopword_path, "stopword list, one word per line")->required();
    cmd_pre->add_option("--dictionary", pre.cfg.dictionary_path, "dictionary word list, one word per line")->required();
    cmd_pre->add_option("--min-len", pre.cfg.min_len, "minimum token length")->capture_default_str();
    cmd_pre->add_option("--max-len", pre.cfg.max_len, "maximum token length")->capture_default_str();
    cmd_pre->add_option("--min-count", pre.cfg.min_count, "minimum corpus frequency")->capture_default_str();

    TrainArgs tr;
    auto* cmd_tr = app.add_subcommand("train", "fit a correlated topic model with variational EM");
    cmd_tr->add_option("corpus_prefix", tr.corpus_prefix, "prefix of .corpus and .vocab files")->required();
    cmd_tr->add_option("out_dir", tr.out_dir, "model output directory")->required();
    cmd_tr->add_option("--topics", tr.cfg.K, "number of topics")->required();
    cmd_tr->add_option("--workers", tr.cfg.workers, "E-step shard count (0 = all cores)")->capture_default_str();
    cmd_tr->add_option("--max-iter", tr.cfg.em_max_iter, "EM iteration cap")->capture_default_str();
    cmd_tr->add_option("--tol", tr.cfg.em_tol, "relative bound-change stopping tolerance")->capture_default_str();
    cmd_tr->add_option("--seed", tr.cfg.seed, "initialization seed")->capture_default_str();
    cmd_tr->add_option("--ridge", tr.cfg.ridge, "diagonal ridge added to sigma")->capture_default_str();
    cmd_tr->add_option("--beta-smoothing", tr.cfg.beta_smoothing, "pseudo-count per topic-word cell")->capture_default_str();

    TopicsArgs tp;
    auto* cmd_tp = app.add_subcommand("topics", "print the top words of each topic");
    cmd_tp->add_option("model_dir", tp.model_dir, "trained model directory")->required();
    cmd_tp->add_option("--top-n", tp.top_n, "words per topic")->capture_default_str();

    EvalArgs ev;
    auto* cmd_ev = app.add_subcommand("eval", "score topic coherence (umass on a corpus, uci on a reference directory)");
    cmd_ev->add_option("model_dir", ev.model_dir, "trained model directory")->required();
    cmd_ev->add_option("data", ev.data, "corpus prefix (umass) or reference text directory (uci)")->required();
    cmd_ev->add_option("--measure", ev.measure, "coherence measure")
        ->check(CLI::IsMember({"uci", "umass"}))->capture_default_str();
    cmd_ev->add_option("--top-n", ev.cfg.top_n, "words per topic")->capture_default_str();
    cmd_ev->add_option("--epsilon", ev.cfg.epsilon, "smoothing added to the joint probability")->capture_default_str();
    cmd_ev->add_option("--window", ev.cfg.window, "sliding-window size for uci counting")->capture_default_str();
    cmd_ev->add_option("--out", ev.out_path, "also write the report to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(cmd_pre)) return run_preprocess(pre);
        if (app.got_subcommand(cmd_tr)) return run_train(tr);
        if (app.got_subcommand(cmd_tp)) return run_topics(tp);
        return run_eval(ev);
    } catch (const ctm::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 2;
    }
}
