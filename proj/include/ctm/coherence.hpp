#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ctm/corpus.hpp"
#include "ctm/model.hpp"

namespace ctm {

enum class CoherenceMeasure { Uci, Umass };

const char* to_string(CoherenceMeasure m);
CoherenceMeasure parse_measure(const std::string& name);  // throws ValidationError

struct CoherenceConfig {
    int top_n = 10;
    double epsilon = 1e-6;
    int window = 10;  // sliding-window size for UCI counting
    CoherenceMeasure measure = CoherenceMeasure::Umass;
};

void validate(const CoherenceConfig& cfg);

struct CooccurrenceCounts {
    long unit_total = 0;                         // documents or windows
    std::unordered_map<int, long> single;        // word -> units containing it
    std::map<std::pair<int, int>, long> pairs;   // (lo, hi) -> units containing both

    long single_count(int w) const;
    long pair_count(int a, int b) const;
};

// n term ids with largest beta_{topic, .}, descending, ties by ascending id
std::vector<int> top_words(const ModelParams& params, int topic, int n);

// unit = document
CooccurrenceCounts count_document_cooccurrence(const Corpus& corpus, const std::vector<int>& words);

// unit = sliding window of `window` consecutive tokens (stride 1, per
// document; shorter non-empty documents form one window)
CooccurrenceCounts count_window_cooccurrence(const std::vector<std::vector<std::string>>& reference_docs,
                                             const std::vector<int>& words, const Vocabulary& vocab,
                                             int window);

// log (P(wi,wj) + eps) / (P(wi) P(wj)); throws UndefinedMarginal on a zero marginal
double pmi(int wi, int wj, const CooccurrenceCounts& counts, double epsilon);

struct TopicScore {
    int topic = 0;
    double score = 0.0;
    int skipped_pairs = 0;
};

// mean pairwise PMI over the ranked word list; pairs with a zero marginal are
// skipped, dropped from the denominator and reported
TopicScore uci_topic(const std::vector<int>& words, const CooccurrenceCounts& counts, double epsilon);

// mean of log (P(wi,wj) + eps) / P(wj) over ranked pairs j < i (conditions on
// the higher-ranked word); skips pairs whose conditioning marginal is zero
TopicScore umass_topic(const std::vector<int>& words, const CooccurrenceCounts& counts, double epsilon);

struct CoherenceReport {
    std::vector<TopicScore> topics;
    double model_score = 0.0;  // arithmetic mean of per-topic scores
    CoherenceConfig config;
};

CoherenceReport model_coherence_umass(const ModelParams& params, const Corpus& training_corpus,
                                      const CoherenceConfig& cfg);
CoherenceReport model_coherence_uci(const ModelParams& params,
                                    const std::vector<std::vector<std::string>>& reference_docs,
                                    const Vocabulary& vocab, const CoherenceConfig& cfg);

// TSV: '#'-prefixed config lines, one "topic_id<TAB>score<TAB>skipped_pairs"
// row per topic, final "MODEL<TAB>mean" row.
void write_coherence_report(std::ostream& out, const CoherenceReport& report);

}  // namespace ctm
