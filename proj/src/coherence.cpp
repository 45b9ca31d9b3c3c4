#include "ctm/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <set>

#include "ctm/errors.hpp"

namespace ctm {

const char* to_string(CoherenceMeasure m) {
    return m == CoherenceMeasure::Uci ? "uci" : "umass";
}

CoherenceMeasure parse_measure(const std::string& name) {
    if (name == "uci") return CoherenceMeasure::Uci;
    if (name == "umass") return CoherenceMeasure::Umass;
    throw ValidationError("unknown coherence measure '" + name + "' (expected uci or umass)");
}

void validate(const CoherenceConfig& cfg) {
    if (cfg.top_n < 2) throw ValidationError("top_n must be >= 2");
    if (!(cfg.epsilon > 0)) throw ValidationError("epsilon must be > 0");
    if (cfg.window < 2) throw ValidationError("window must be >= 2");
}

long CooccurrenceCounts::single_count(int w) const {
    auto it = single.find(w);
    return it == single.end() ? 0 : it->second;
}

long CooccurrenceCounts::pair_count(int a, int b) const {
    if (a > b) std::swap(a, b);
    auto it = pairs.find({a, b});
    return it == pairs.end() ? 0 : it->second;
}

std::vector<int> top_words(const ModelParams& params, int topic, int n) {
    if (topic < 0 || topic >= params.K)
        throw IndexOutOfRange("topic " + std::to_string(topic) + " outside [0, " +
                              std::to_string(params.K) + ")");
    if (n < 1 || n > params.V)
        throw IndexOutOfRange("top word count " + std::to_string(n) +
                              " outside [1, V=" + std::to_string(params.V) + "]");
    std::vector<int> ids(static_cast<size_t>(params.V));
    std::iota(ids.begin(), ids.end(), 0);
    const auto row = params.log_beta.row(topic);
    std::sort(ids.begin(), ids.end(), [&](int a, int b) {
        if (row[a] != row[b]) return row[a] > row[b];
        return a < b;
    });
    ids.resize(static_cast<size_t>(n));
    return ids;
}

namespace {

void check_counts(const CooccurrenceCounts& c) {
    for (const auto& [key, n] : c.pairs) {
        const long lo = std::min(c.single_count(key.first), c.single_count(key.second));
        if (n > lo || lo > c.unit_total)
            throw ValidationError("co-occurrence counts violate pair <= singles <= total");
    }
}

// per-unit tally given the ids present in the unit (sorted, unique)
void tally_unit(CooccurrenceCounts& c, const std::vector<int>& present) {
    for (size_t i = 0; i < present.size(); ++i) {
        c.single[present[i]] += 1;
        for (size_t j = i + 1; j < present.size(); ++j)
            c.pairs[{present[i], present[j]}] += 1;
    }
}

}  // namespace

CooccurrenceCounts count_document_cooccurrence(const Corpus& corpus,
                                               const std::vector<int>& words) {
    const std::set<int> query(words.begin(), words.end());
    CooccurrenceCounts counts;
    for (int w : query) counts.single.emplace(w, 0);
    std::vector<int> present;
    for (const auto& doc : corpus) {
        counts.unit_total += 1;
        present.clear();
        for (const auto& e : doc.entries)
            if (query.count(e.term)) present.push_back(e.term);
        std::sort(present.begin(), present.end());
        tally_unit(counts, present);
    }
    check_counts(counts);
    return counts;
}

CooccurrenceCounts count_window_cooccurrence(
    const std::vector<std::vector<std::string>>& reference_docs, const std::vector<int>& words,
    const Vocabulary& vocab, int window) {
    if (window < 1) throw ValidationError("window must be >= 1");
    const std::set<int> query(words.begin(), words.end());
    CooccurrenceCounts counts;
    for (int w : query) counts.single.emplace(w, 0);

    std::vector<int> present;
    for (const auto& tokens : reference_docs) {
        const size_t L = tokens.size();
        if (L == 0) continue;

        // ids restricted to the query set, -1 elsewhere
        std::vector<int> ids(L, -1);
        for (size_t t = 0; t < L; ++t) {
            const auto id = vocab.id_of(tokens[t]);
            if (id && query.count(*id)) ids[t] = *id;
        }

        const size_t wlen = std::min<size_t>(static_cast<size_t>(window), L);
        const size_t num_windows = L - wlen + 1;
        std::map<int, int> in_window;
        for (size_t t = 0; t < wlen; ++t)
            if (ids[t] >= 0) in_window[ids[t]] += 1;

        for (size_t s = 0; s < num_windows; ++s) {
            counts.unit_total += 1;
            present.clear();
            for (const auto& [id, n] : in_window)
                if (n > 0) present.push_back(id);
            tally_unit(counts, present);
            if (s + 1 < num_windows) {
                if (ids[s] >= 0) in_window[ids[s]] -= 1;
                if (ids[s + wlen] >= 0) in_window[ids[s + wlen]] += 1;
            }
        }
    }
    if (counts.unit_total == 0)
        throw EmptyReference("reference corpus contains no usable text");
    check_counts(counts);
    return counts;
}

double pmi(int wi, int wj, const CooccurrenceCounts& counts, double epsilon) {
    const long si = counts.single_count(wi);
    const long sj = counts.single_count(wj);
    if (si == 0 || sj == 0)
        throw UndefinedMarginal("word " + std::to_string(si == 0 ? wi : wj) +
                                " never occurs in the counting units");
    const double T = static_cast<double>(counts.unit_total);
    const double joint = counts.pair_count(wi, wj) / T;
    return std::log((joint + epsilon) / ((si / T) * (sj / T)));
}

TopicScore uci_topic(const std::vector<int>& words, const CooccurrenceCounts& counts,
                     double epsilon) {
    if (words.size() < 2) throw ValidationError("coherence needs at least 2 ranked words");
    TopicScore out;
    double sum = 0.0;
    int used = 0;
    for (size_t i = 0; i + 1 < words.size(); ++i) {
        for (size_t j = i + 1; j < words.size(); ++j) {
            try {
                sum += pmi(words[i], words[j], counts, epsilon);
                ++used;
            } catch (const UndefinedMarginal&) {
                ++out.skipped_pairs;
            }
        }
    }
    if (used == 0) throw AllPairsSkipped("every word pair had a zero marginal");
    out.score = sum / used;
    return out;
}

TopicScore umass_topic(const std::vector<int>& words, const CooccurrenceCounts& counts,
                       double epsilon) {
    if (words.size() < 2) throw ValidationError("coherence needs at least 2 ranked words");
    const double T = static_cast<double>(counts.unit_total);
    TopicScore out;
    double sum = 0.0;
    int used = 0;
    // conditions on the higher-ranked word w_j, j < i in rank order
    for (size_t i = 1; i < words.size(); ++i) {
        for (size_t j = 0; j < i; ++j) {
            const long sj = counts.single_count(words[j]);
            if (sj == 0) {
                ++out.skipped_pairs;
                continue;
            }
            const double joint = counts.pair_count(words[i], words[j]) / T;
            sum += std::log((joint + epsilon) / (sj / T));
            ++used;
        }
    }
    if (used == 0) throw AllPairsSkipped("every word pair had a zero conditioning marginal");
    out.score = sum / used;
    return out;
}

namespace {

std::vector<int> all_top_words(const ModelParams& params, int n, std::vector<std::vector<int>>& per_topic) {
    std::set<int> uni;
    per_topic.resize(static_cast<size_t>(params.K));
    for (int k = 0; k < params.K; ++k) {
        per_topic[static_cast<size_t>(k)] = top_words(params, k, n);
        uni.insert(per_topic[static_cast<size_t>(k)].begin(), per_topic[static_cast<size_t>(k)].end());
    }
    return {uni.begin(), uni.end()};
}

CoherenceReport score_topics(const ModelParams& params,
                             const std::vector<std::vector<int>>& per_topic,
                             const CooccurrenceCounts& counts, const CoherenceConfig& cfg) {
    CoherenceReport report;
    report.config = cfg;
    double total = 0.0;
    for (int k = 0; k < params.K; ++k) {
        TopicScore score;
        try {
            score = cfg.measure == CoherenceMeasure::Uci
                        ? uci_topic(per_topic[static_cast<size_t>(k)], counts, cfg.epsilon)
                        : umass_topic(per_topic[static_cast<size_t>(k)], counts, cfg.epsilon);
        } catch (const AllPairsSkipped& e) {
            throw AllPairsSkipped("topic " + std::to_string(k) + ": " + e.what());
        }
        score.topic = k;
        total += score.score;
        report.topics.push_back(score);
    }
    report.model_score = total / params.K;
    return report;
}

}  // namespace

CoherenceReport model_coherence_umass(const ModelParams& params, const Corpus& training_corpus,
                                      const CoherenceConfig& cfg) {
    validate(cfg);
    CoherenceConfig used = cfg;
    used.measure = CoherenceMeasure::Umass;
    std::vector<std::vector<int>> per_topic;
    const auto query = all_top_words(params, used.top_n, per_topic);
    const auto counts = count_document_cooccurrence(training_corpus, query);
    return score_topics(params, per_topic, counts, used);
}

CoherenceReport model_coherence_uci(const ModelParams& params,
                                    const std::vector<std::vector<std::string>>& reference_docs,
                                    const Vocabulary& vocab, const CoherenceConfig& cfg) {
    validate(cfg);
    CoherenceConfig used = cfg;
    used.measure = CoherenceMeasure::Uci;
    std::vector<std::vector<int>> per_topic;
    const auto query = all_top_words(params, used.top_n, per_topic);
    const auto counts = count_window_cooccurrence(reference_docs, query, vocab, used.window);
    return score_topics(params, per_topic, counts, used);
}

void write_coherence_report(std::ostream& out, const CoherenceReport& report) {
    char buf[64];
    out << "# measure=" << to_string(report.config.measure) << "\n";
    out << "# top_n=" << report.config.top_n << "\n";
    std::snprintf(buf, sizeof buf, "%g", report.config.epsilon);
    out << "# epsilon=" << buf << "\n";
    if (report.config.measure == CoherenceMeasure::Uci)
        out << "# window=" << report.config.window << "\n";
    for (const auto& t : report.topics) {
        std::snprintf(buf, sizeof buf, "%.17g", t.score);
        out << t.topic << "\t" << buf << "\t" << t.skipped_pairs << "\n";
    }
    std::snprintf(buf, sizeof buf, "%.17g", report.model_score);
    out << "MODEL\t" << buf << "\n";
}

}  // namespace ctm
