#include "ctm/store.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "ctm/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ctm {

namespace {

std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return out;
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open '" + path.string() + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

double parse_double(const std::string& token, const fs::path& file, size_t lineno) {
    const char* begin = token.data();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (end != begin + token.size() || token.empty())
        throw FormatError(file.filename().string() + " line " + std::to_string(lineno) +
                          ": bad number '" + token + "'");
    return v;
}

long parse_long(const std::string& token, const fs::path& file, size_t lineno) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size())
        throw FormatError(file.filename().string() + " line " + std::to_string(lineno) +
                          ": bad integer '" + token + "'");
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) fields.push_back(field);
    return fields;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream in(line);
    std::string field;
    while (in >> field) fields.push_back(field);
    return fields;
}

Eigen::MatrixXd read_matrix(const fs::path& path, Eigen::Index rows, Eigen::Index cols,
                            const char* what) {
    const auto lines = read_lines(path);
    std::vector<std::string> rows_text;
    for (const auto& l : lines)
        if (!l.empty()) rows_text.push_back(l);
    if (static_cast<Eigen::Index>(rows_text.size()) != rows)
        throw FormatError(path.filename().string() + ": expected " + std::to_string(rows) + " " +
                          what + " rows, found " + std::to_string(rows_text.size()));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto fields = split_ws(rows_text[static_cast<size_t>(r)]);
        if (static_cast<Eigen::Index>(fields.size()) != cols)
            throw FormatError(path.filename().string() + " line " + std::to_string(r + 1) +
                              ": expected " + std::to_string(cols) + " values, found " +
                              std::to_string(fields.size()));
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = parse_double(fields[static_cast<size_t>(c)], path, static_cast<size_t>(r + 1));
    }
    return m;
}

void write_meta(const fs::path& path, const ModelBundle& bundle) {
    json cfg = {
        {"topics", bundle.config.K},
        {"em_max_iter", bundle.config.em_max_iter},
        {"em_tol", bundle.config.em_tol},
        {"workers", bundle.config.workers},
        {"seed", bundle.config.seed},
        {"ridge", bundle.config.ridge},
        {"beta_smoothing", bundle.config.beta_smoothing},
        {"inference",
         {{"doc_tol", bundle.config.inference.doc_tol},
          {"doc_max_iter", bundle.config.inference.doc_max_iter},
          {"lambda_max_iter", bundle.config.inference.lambda_max_iter},
          {"lambda_grad_tol", bundle.config.inference.lambda_grad_tol},
          {"nu2_max_iter", bundle.config.inference.nu2_max_iter},
          {"nu2_tol", bundle.config.inference.nu2_tol}}},
    };
    json meta = {
        {"format_version", bundle.format_version},
        {"k", bundle.params.K},
        {"v", bundle.params.V},
        {"iterations", bundle.iterations},
        {"final_bound", bundle.final_bound},
        {"vocab_path", bundle.vocab_path},
        {"config", cfg},
    };
    auto out = open_out(path);
    out << meta.dump(2) << "\n";
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void read_meta(const fs::path& path, ModelBundle& bundle) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open '" + path.string() + "'");
    json meta;
    try {
        in >> meta;
        bundle.format_version = meta.at("format_version").get<int>();
        if (bundle.format_version != kFormatVersion)
            throw FormatError(path.filename().string() + ": unsupported format_version " +
                              std::to_string(bundle.format_version));
        bundle.params.K = meta.at("k").get<int>();
        bundle.params.V = meta.at("v").get<int>();
        bundle.iterations = meta.at("iterations").get<int>();
        bundle.final_bound = meta.at("final_bound").get<double>();
        bundle.vocab_path = meta.at("vocab_path").get<std::string>();
        const json& cfg = meta.at("config");
        bundle.config.K = cfg.at("topics").get<int>();
        bundle.config.em_max_iter = cfg.at("em_max_iter").get<int>();
        bundle.config.em_tol = cfg.at("em_tol").get<double>();
        bundle.config.workers = cfg.at("workers").get<int>();
        bundle.config.seed = cfg.at("seed").get<std::uint64_t>();
        bundle.config.ridge = cfg.at("ridge").get<double>();
        bundle.config.beta_smoothing = cfg.at("beta_smoothing").get<double>();
        const json& inf = cfg.at("inference");
        bundle.config.inference.doc_tol = inf.at("doc_tol").get<double>();
        bundle.config.inference.doc_max_iter = inf.at("doc_max_iter").get<int>();
        bundle.config.inference.lambda_max_iter = inf.at("lambda_max_iter").get<int>();
        bundle.config.inference.lambda_grad_tol = inf.at("lambda_grad_tol").get<double>();
        bundle.config.inference.nu2_max_iter = inf.at("nu2_max_iter").get<int>();
        bundle.config.inference.nu2_tol = inf.at("nu2_tol").get<double>();
    } catch (const json::exception& e) {
        throw FormatError(path.filename().string() + ": " + e.what());
    }
    if (bundle.params.K < 1 || bundle.params.V < 2)
        throw FormatError(path.filename().string() + ": invalid dimensions k=" +
                          std::to_string(bundle.params.K) + " v=" +
                          std::to_string(bundle.params.V));
}

fs::path staging_path(const fs::path& target) {
    std::random_device rd;
    return target.parent_path() /
           (target.filename().string() + ".staging-" + std::to_string(rd()));
}

}  // namespace

void save_model(const ModelBundle& bundle, const std::string& directory) {
    const fs::path target(directory);
    fs::path staging;
    try {
        if (!target.parent_path().empty()) fs::create_directories(target.parent_path());
        staging = staging_path(target);
        fs::create_directory(staging);
    } catch (const fs::filesystem_error& e) {
        throw IoError("cannot stage model directory '" + directory + "': " + e.what());
    }

    try {
        write_meta(staging / "meta.json", bundle);

        auto mu = open_out(staging / "mu.txt");
        for (Eigen::Index i = 0; i < bundle.params.mu.size(); ++i)
            mu << fmt17(bundle.params.mu[i]) << "\n";

        auto sigma = open_out(staging / "sigma.txt");
        for (Eigen::Index r = 0; r < bundle.params.sigma.rows(); ++r) {
            for (Eigen::Index c = 0; c < bundle.params.sigma.cols(); ++c)
                sigma << (c ? " " : "") << fmt17(bundle.params.sigma(r, c));
            sigma << "\n";
        }

        auto beta = open_out(staging / "beta.txt");
        for (Eigen::Index r = 0; r < bundle.params.log_beta.rows(); ++r) {
            for (Eigen::Index c = 0; c < bundle.params.log_beta.cols(); ++c)
                beta << (c ? " " : "") << fmt17(bundle.params.log_beta(r, c));
            beta << "\n";
        }

        auto trace = open_out(staging / "trace.tsv");
        trace << "#iteration\tbound\trel_change\tseconds\n";
        for (const auto& e : bundle.trace.entries)
            trace << e.iteration << "\t" << fmt17(e.bound) << "\t" << fmt17(e.rel_change) << "\t"
                  << fmt17(e.seconds) << "\n";

        mu.flush();
        sigma.flush();
        beta.flush();
        trace.flush();
        if (!mu || !sigma || !beta || !trace)
            throw IoError("failed writing model files under '" + staging.string() + "'");

        if (fs::exists(target)) fs::remove_all(target);
        fs::rename(staging, target);
    } catch (const fs::filesystem_error& e) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        throw IoError("cannot save model to '" + directory + "': " + e.what());
    } catch (...) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        throw;
    }
}

ModelBundle load_model(const std::string& directory) {
    const fs::path dir(directory);
    ModelBundle bundle;
    read_meta(dir / "meta.json", bundle);
    const int K = bundle.params.K;
    const int V = bundle.params.V;

    bundle.params.mu = read_matrix(dir / "mu.txt", K, 1, "mean").col(0);

    const fs::path sigma_path = dir / "sigma.txt";
    Eigen::MatrixXd sigma = read_matrix(sigma_path, K, K, "covariance");
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
    for (int r = 0; r < K; ++r)
        for (int c = r + 1; c < K; ++c)
            if (std::abs(sigma(r, c) - sigma(c, r)) > 1e-8 * scale)
                throw ValidationError(sigma_path.filename().string() + ": asymmetric at (" +
                                      std::to_string(r) + ", " + std::to_string(c) + ")");
    try {
        set_sigma(bundle.params, sigma);
    } catch (const SingularSigma& e) {
        throw ValidationError(sigma_path.filename().string() + ": " + e.what());
    }

    const fs::path beta_path = dir / "beta.txt";
    bundle.params.log_beta = read_matrix(beta_path, K, V, "topic");
    for (int r = 0; r < K; ++r) {
        const double row_sum = bundle.params.log_beta.row(r).array().exp().sum();
        if (!std::isfinite(row_sum) || std::abs(row_sum - 1.0) > 1e-10)
            throw ValidationError(beta_path.filename().string() + " line " + std::to_string(r + 1) +
                                  ": probabilities sum to " + fmt17(row_sum));
    }

    const fs::path trace_path = dir / "trace.tsv";
    if (fs::exists(trace_path)) {
        const auto lines = read_lines(trace_path);
        for (size_t n = 0; n < lines.size(); ++n) {
            const auto& line = lines[n];
            if (line.empty() || line[0] == '#') continue;
            const auto fields = split(line, '\t');
            if (fields.size() != 4)
                throw FormatError(trace_path.filename().string() + " line " +
                                  std::to_string(n + 1) + ": expected 4 columns");
            TraceEntry e;
            e.iteration = static_cast<int>(parse_long(fields[0], trace_path, n + 1));
            e.bound = parse_double(fields[1], trace_path, n + 1);
            e.rel_change = parse_double(fields[2], trace_path, n + 1);
            e.seconds = parse_double(fields[3], trace_path, n + 1);
            bundle.trace.entries.push_back(e);
        }
    }

    try {
        validate(bundle.params);
    } catch (const ValidationError& e) {
        throw ValidationError("model in '" + directory + "' is invalid: " + e.what());
    }
    return bundle;
}

void save_corpus(const Corpus& corpus, const Vocabulary& vocab, const std::string& prefix) {
    for (const auto& doc : corpus)
        for (const auto& e : doc.entries)
            if (e.term < 0 || e.term >= vocab.size())
                throw ValidationError("document '" + doc.doc_id + "' references term " +
                                      std::to_string(e.term) + " outside the vocabulary");

    const fs::path vocab_path(prefix + ".vocab");
    const fs::path corpus_path(prefix + ".corpus");
    const fs::path vocab_tmp(prefix + ".vocab.tmp");
    const fs::path corpus_tmp(prefix + ".corpus.tmp");
    try {
        {
            auto out = open_out(vocab_tmp);
            for (const auto& term : vocab.terms()) out << term << "\n";
            out.flush();
            if (!out) throw IoError("failed writing '" + vocab_tmp.string() + "'");
        }
        {
            auto out = open_out(corpus_tmp);
            out << "#V=" << vocab.size() << " D=" << corpus.size() << "\n";
            for (const auto& doc : corpus) {
                out << doc.doc_id << "\t" << doc.entries.size() << "\t";
                for (size_t i = 0; i < doc.entries.size(); ++i)
                    out << (i ? " " : "") << doc.entries[i].term << ":" << doc.entries[i].count;
                out << "\n";
            }
            out.flush();
            if (!out) throw IoError("failed writing '" + corpus_tmp.string() + "'");
        }
        fs::rename(vocab_tmp, vocab_path);
        fs::rename(corpus_tmp, corpus_path);
    } catch (const fs::filesystem_error& e) {
        std::error_code ec;
        fs::remove(vocab_tmp, ec);
        fs::remove(corpus_tmp, ec);
        throw IoError("cannot save corpus '" + prefix + "': " + e.what());
    } catch (...) {
        std::error_code ec;
        fs::remove(vocab_tmp, ec);
        fs::remove(corpus_tmp, ec);
        throw;
    }
}

std::pair<Corpus, Vocabulary> load_corpus(const std::string& prefix) {
    const fs::path vocab_path(prefix + ".vocab");
    const fs::path corpus_path(prefix + ".corpus");

    const auto vocab_lines = read_lines(vocab_path);
    std::vector<std::string> terms;
    for (size_t n = 0; n < vocab_lines.size(); ++n) {
        if (vocab_lines[n].empty())
            throw FormatError(vocab_path.filename().string() + " line " + std::to_string(n + 1) +
                              ": empty term");
        terms.push_back(vocab_lines[n]);
    }
    Vocabulary vocab;
    try {
        vocab = Vocabulary(std::move(terms));
    } catch (const ValidationError& e) {
        throw FormatError(vocab_path.filename().string() + ": " + e.what());
    }

    const auto lines = read_lines(corpus_path);
    if (lines.empty())
        throw FormatError(corpus_path.filename().string() + ": missing header");
    int V = 0;
    long D = 0;
    if (std::sscanf(lines[0].c_str(), "#V=%d D=%ld", &V, &D) != 2)
        throw FormatError(corpus_path.filename().string() +
                          " line 1: header must be '#V=<int> D=<int>'");
    if (V != vocab.size())
        throw FormatError(corpus_path.filename().string() + ": header V=" + std::to_string(V) +
                          " but vocabulary file has " + std::to_string(vocab.size()) + " terms");

    Corpus corpus;
    for (size_t n = 1; n < lines.size(); ++n) {
        const auto& line = lines[n];
        if (line.empty()) continue;
        const auto fields = split(line, '\t');
        if (fields.size() != 3)
            throw FormatError(corpus_path.filename().string() + " line " + std::to_string(n + 1) +
                              ": expected doc_id<TAB>M<TAB>pairs");
        BagOfWords doc;
        doc.doc_id = fields[0];
        const long M = parse_long(fields[1], corpus_path, n + 1);
        const auto pairs = split_ws(fields[2]);
        if (M < 1 || static_cast<long>(pairs.size()) != M)
            throw FormatError(corpus_path.filename().string() + " line " + std::to_string(n + 1) +
                              ": declared " + std::to_string(M) + " entries, found " +
                              std::to_string(pairs.size()));
        int prev_term = -1;
        for (const auto& pair : pairs) {
            const auto colon = pair.find(':');
            if (colon == std::string::npos)
                throw FormatError(corpus_path.filename().string() + " line " +
                                  std::to_string(n + 1) + ": bad pair '" + pair + "'");
            TermCount tc;
            tc.term = static_cast<int>(parse_long(pair.substr(0, colon), corpus_path, n + 1));
            tc.count = static_cast<int>(parse_long(pair.substr(colon + 1), corpus_path, n + 1));
            if (tc.term < 0 || tc.term >= V)
                throw FormatError(corpus_path.filename().string() + " line " +
                                  std::to_string(n + 1) + ": term id " + std::to_string(tc.term) +
                                  " outside [0, " + std::to_string(V) + ")");
            if (tc.count < 1)
                throw FormatError(corpus_path.filename().string() + " line " +
                                  std::to_string(n + 1) + ": count must be >= 1");
            if (tc.term <= prev_term)
                throw FormatError(corpus_path.filename().string() + " line " +
                                  std::to_string(n + 1) + ": term ids must be strictly increasing");
            prev_term = tc.term;
            doc.entries.push_back(tc);
        }
        corpus.push_back(std::move(doc));
    }
    if (static_cast<long>(corpus.size()) != D)
        throw FormatError(corpus_path.filename().string() + ": header D=" + std::to_string(D) +
                          " but file has " + std::to_string(corpus.size()) + " documents");
    return {std::move(corpus), std::move(vocab)};
}

}  // namespace ctm
