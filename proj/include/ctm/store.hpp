#pragma once

#include <string>
#include <utility>

#include "ctm/corpus.hpp"
#include "ctm/em.hpp"
#include "ctm/model.hpp"

namespace ctm {

inline constexpr int kFormatVersion = 1;

struct ModelBundle {
    ModelParams params;
    std::string vocab_path;  // vocabulary file the model was trained against
    TrainConfig config;
    TrainTrace trace;
    int format_version = kFormatVersion;
    int iterations = 0;
    double final_bound = 0.0;
};

// Writes meta.json, mu.txt, sigma.txt, beta.txt and trace.tsv into
// `directory`. Floats use 17 significant digits. The whole directory is
// staged and renamed into place, so a failed save leaves no partial model.
// Throws IoError.
void save_model(const ModelBundle& bundle, const std::string& directory);

// Validates against the ModelParams invariants before returning. Throws
// FormatError (bad version, dimensions, parse failures) or ValidationError
// (invariant violations), naming the offending file.
ModelBundle load_model(const std::string& directory);

// Sparse corpus format: header "#V=<int> D=<int>", then one document per
// line "doc_id<TAB>M<TAB>termid:count ...", plus a sidecar ".vocab" file
// with one term per line. Paths are <prefix>.corpus / <prefix>.vocab.
void save_corpus(const Corpus& corpus, const Vocabulary& vocab, const std::string& prefix);
std::pair<Corpus, Vocabulary> load_corpus(const std::string& prefix);

}  // namespace ctm
