#include "ctm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ctm/errors.hpp"
#include "ctm/log.hpp"

namespace fs = std::filesystem;

namespace ctm {

void validate(const PreprocessConfig& cfg) {
    if (cfg.min_len <= 0 || cfg.min_len > cfg.max_len)
        throw ValidationError("preprocess config requires 0 < min_len <= max_len");
    if (cfg.min_count < 1)
        throw ValidationError("preprocess config requires min_count >= 1");
}

Vocabulary::Vocabulary(std::vector<std::string> terms) : terms_(std::move(terms)) {
    index_.reserve(terms_.size());
    for (int i = 0; i < static_cast<int>(terms_.size()); ++i) {
        if (terms_[i].empty())
            throw ValidationError("vocabulary contains an empty term");
        auto [it, inserted] = index_.emplace(terms_[i], i);
        if (!inserted)
            throw ValidationError("vocabulary contains duplicate term '" + terms_[i] + "'");
    }
}

const std::string& Vocabulary::term(int id) const {
    if (id < 0 || id >= size())
        throw IndexOutOfRange("term id " + std::to_string(id) + " outside vocabulary of size " +
                              std::to_string(size()));
    return terms_[id];
}

std::optional<int> Vocabulary::id_of(const std::string& term) const {
    auto it = index_.find(term);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> tokenize(std::string_view text, const PreprocessConfig& cfg) {
    validate(cfg);
    std::vector<std::string> tokens;
    std::string word;
    auto flush = [&] {
        const int len = static_cast<int>(word.size());
        if (len >= cfg.min_len && len <= cfg.max_len) tokens.push_back(word);
        word.clear();
    };
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            flush();
        } else if (c >= 'A' && c <= 'Z') {
            word.push_back(static_cast<char>(c - 'A' + 'a'));
        } else if (c >= 'a' && c <= 'z') {
            word.push_back(static_cast<char>(c));
        }
        // every other byte (digits, punctuation, non-ASCII) is stripped
    }
    flush();
    return tokens;
}

TermCounts accumulate_counts(const std::vector<std::vector<std::string>>& token_streams) {
    TermCounts counts;
    for (const auto& stream : token_streams)
        for (const auto& token : stream) ++counts[token];
    return counts;
}

TermCounts merge_counts(TermCounts a, const TermCounts& b) {
    for (const auto& [term, count] : b) a[term] += count;
    return a;
}

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool term_shape_ok(const std::string& term, const PreprocessConfig& cfg) {
    const int len = static_cast<int>(term.size());
    if (len < cfg.min_len || len > cfg.max_len) return false;
    return std::all_of(term.begin(), term.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

}  // namespace

std::vector<std::string> load_word_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open word list '" + path + "'");
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        std::string w = trim(line);
        if (!w.empty()) words.push_back(std::move(w));
    }
    return words;
}

Vocabulary build_vocabulary(const TermCounts& counts, const PreprocessConfig& cfg,
                            const std::unordered_set<std::string>& stopwords,
                            const std::unordered_set<std::string>& dictionary) {
    validate(cfg);
    std::vector<std::string> kept;
    for (const auto& [term, count] : counts) {
        if (count < cfg.min_count) continue;
        if (!term_shape_ok(term, cfg)) continue;
        if (stopwords.count(term)) continue;
        if (!dictionary.count(term)) continue;
        kept.push_back(term);
    }
    if (kept.empty())
        throw EmptyVocabulary("no terms survived the vocabulary filters");
    // TermCounts is an ordered map, so `kept` is already lexicographic
    return Vocabulary(std::move(kept));
}

Vocabulary build_vocabulary(const TermCounts& counts, const PreprocessConfig& cfg) {
    auto stop = load_word_list(cfg.stopword_path);
    auto dict = load_word_list(cfg.dictionary_path);
    return build_vocabulary(counts, cfg,
                            std::unordered_set<std::string>(stop.begin(), stop.end()),
                            std::unordered_set<std::string>(dict.begin(), dict.end()));
}

EncodeResult encode_corpus(const std::vector<std::pair<std::string, std::vector<std::string>>>& doc_tokens,
                           const Vocabulary& vocab) {
    EncodeResult out;
    for (const auto& [doc_id, tokens] : doc_tokens) {
        std::map<int, int> tally;
        for (const auto& token : tokens)
            if (auto id = vocab.id_of(token)) ++tally[*id];
        if (tally.empty()) {
            out.dropped_doc_ids.push_back(doc_id);
            continue;
        }
        BagOfWords bow;
        bow.doc_id = doc_id;
        bow.entries.reserve(tally.size());
        for (const auto& [id, count] : tally) {
            bow.entries.push_back({id, count});
            out.total_tokens += count;
        }
        out.docs.push_back(std::move(bow));
    }
    if (!out.dropped_doc_ids.empty())
        log_msg(LogLevel::Info, "dropped " + std::to_string(out.dropped_doc_ids.size()) +
                                    " document(s) empty after filtering");
    return out;
}

std::vector<std::pair<std::string, std::string>> read_text_dir(const std::string& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec))
        throw FileError("'" + dir + "' is not a readable directory");
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file()) paths.push_back(entry.path());
    std::sort(paths.begin(), paths.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

    std::vector<std::pair<std::string, std::string>> docs;
    docs.reserve(paths.size());
    for (const auto& p : paths) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw FileError("cannot open document '" + p.string() + "'");
        std::ostringstream body;
        body << in.rdbuf();
        docs.emplace_back(p.filename().string(), body.str());
    }
    return docs;
}

std::vector<std::pair<std::string, std::vector<std::string>>> tokenize_dir(const std::string& dir,
                                                                           const PreprocessConfig& cfg) {
    auto raw = read_text_dir(dir);
    std::vector<std::pair<std::string, std::vector<std::string>>> out;
    out.reserve(raw.size());
    for (auto& [doc_id, text] : raw)
        out.emplace_back(std::move(doc_id), tokenize(text, cfg));
    return out;
}

PreprocessResult preprocess_dir(const std::string& input_dir, const PreprocessConfig& cfg) {
    auto doc_tokens = tokenize_dir(input_dir, cfg);

    TermCounts counts;
    for (const auto& [doc_id, tokens] : doc_tokens)
        for (const auto& token : tokens) ++counts[token];

    PreprocessResult result;
    result.vocab = build_vocabulary(counts, cfg);
    auto encoded = encode_corpus(doc_tokens, result.vocab);
    result.corpus = std::move(encoded.docs);
    result.total_tokens = encoded.total_tokens;
    result.dropped_doc_ids = std::move(encoded.dropped_doc_ids);
    return result;
}

}  // namespace ctm
