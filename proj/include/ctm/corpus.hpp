#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace ctm {

struct PreprocessConfig {
    int min_len = 4;
    int max_len = 20;
    int min_count = 5;
    std::string stopword_path;
    std::string dictionary_path;
};

// throws ValidationError on an inconsistent config
void validate(const PreprocessConfig& cfg);

struct TermCount {
    int term = 0;
    int count = 0;
};

// One document as sparse (term id, count) pairs, term ids strictly increasing.
struct BagOfWords {
    std::string doc_id;
    std::vector<TermCount> entries;

    int total_words() const {  // N_d
        int n = 0;
        for (const auto& e : entries) n += e.count;
        return n;
    }
};

using Corpus = std::vector<BagOfWords>;

class Vocabulary {
public:
    Vocabulary() = default;
    // terms must be unique and non-empty; ids are assigned by position
    explicit Vocabulary(std::vector<std::string> terms);

    int size() const { return static_cast<int>(terms_.size()); }
    const std::vector<std::string>& terms() const { return terms_; }
    const std::string& term(int id) const;
    std::optional<int> id_of(const std::string& term) const;

private:
    std::vector<std::string> terms_;
    std::unordered_map<std::string, int> index_;
};

// Split on whitespace, strip every non-letter character, lowercase, then keep
// tokens whose length falls in [min_len, max_len].
std::vector<std::string> tokenize(std::string_view text, const PreprocessConfig& cfg);

using TermCounts = std::map<std::string, long>;

TermCounts accumulate_counts(const std::vector<std::vector<std::string>>& token_streams);
TermCounts merge_counts(TermCounts a, const TermCounts& b);

// One trimmed word per line, blank lines ignored. Throws FileError.
std::vector<std::string> load_word_list(const std::string& path);

Vocabulary build_vocabulary(const TermCounts& counts, const PreprocessConfig& cfg,
                            const std::unordered_set<std::string>& stopwords,
                            const std::unordered_set<std::string>& dictionary);
// loads the word lists from cfg.stopword_path / cfg.dictionary_path
Vocabulary build_vocabulary(const TermCounts& counts, const PreprocessConfig& cfg);

struct EncodeResult {
    Corpus docs;
    std::vector<std::string> dropped_doc_ids;  // documents empty after filtering
    long total_tokens = 0;                     // sum of N_d over kept docs
};

EncodeResult encode_corpus(const std::vector<std::pair<std::string, std::vector<std::string>>>& doc_tokens,
                           const Vocabulary& vocab);

// Directory of plain-text files, one document per file, doc_id = file name.
// Files are visited in lexicographic name order. Throws FileError.
std::vector<std::pair<std::string, std::string>> read_text_dir(const std::string& dir);

// tokenized documents of a directory, in file-name order (used as a coherence
// reference corpus and by the preprocess driver)
std::vector<std::pair<std::string, std::vector<std::string>>> tokenize_dir(const std::string& dir,
                                                                           const PreprocessConfig& cfg);

struct PreprocessResult {
    Vocabulary vocab;
    Corpus corpus;
    long total_tokens = 0;
    std::vector<std::string> dropped_doc_ids;
};

// full pipeline: read dir -> tokenize -> count -> vocabulary -> encode
PreprocessResult preprocess_dir(const std::string& input_dir, const PreprocessConfig& cfg);

}  // namespace ctm
