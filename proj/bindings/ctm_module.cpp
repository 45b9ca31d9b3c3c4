#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ctm/coherence.hpp"
#include "ctm/corpus.hpp"
#include "ctm/em.hpp"
#include "ctm/errors.hpp"
#include "ctm/inference.hpp"
#include "ctm/store.hpp"

namespace py = pybind11;

namespace {

ctm::ModelParams make_model(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                            const Eigen::MatrixXd& log_beta) {
    ctm::ModelParams params;
    params.K = static_cast<int>(mu.size());
    params.V = static_cast<int>(log_beta.cols());
    params.mu = mu;
    ctm::set_sigma(params, sigma);
    params.log_beta = log_beta;
    ctm::validate(params);
    return params;
}

}  // namespace

PYBIND11_MODULE(_ctm, m) {
    m.doc() = "correlated topic model trainer and coherence evaluator";

    py::register_exception<ctm::Error>(m, "CtmError");

    py::class_<ctm::PreprocessConfig>(m, "PreprocessConfig")
        .def(py::init<>())
        .def_readwrite("min_len", &ctm::PreprocessConfig::min_len)
        .def_readwrite("max_len", &ctm::PreprocessConfig::max_len)
        .def_readwrite("min_count", &ctm::PreprocessConfig::min_count)
        .def_readwrite("stopword_path", &ctm::PreprocessConfig::stopword_path)
        .def_readwrite("dictionary_path", &ctm::PreprocessConfig::dictionary_path);

    py::class_<ctm::TermCount>(m, "TermCount")
        .def(py::init([](int term, int count) { return ctm::TermCount{term, count}; }),
             py::arg("term"), py::arg("count"))
        .def_readwrite("term", &ctm::TermCount::term)
        .def_readwrite("count", &ctm::TermCount::count)
        .def("__repr__", [](const ctm::TermCount& t) {
            return "TermCount(term=" + std::to_string(t.term) +
                   ", count=" + std::to_string(t.count) + ")";
        });

    py::class_<ctm::BagOfWords>(m, "BagOfWords")
        .def(py::init([](std::string doc_id, const std::vector<std::pair<int, int>>& entries) {
                 ctm::BagOfWords doc;
                 doc.doc_id = std::move(doc_id);
                 for (const auto& [term, count] : entries) doc.entries.push_back({term, count});
                 return doc;
             }),
             py::arg("doc_id"), py::arg("entries"))
        .def_readwrite("doc_id", &ctm::BagOfWords::doc_id)
        .def_readwrite("entries", &ctm::BagOfWords::entries)
        .def("total_words", &ctm::BagOfWords::total_words);

    py::class_<ctm::Vocabulary>(m, "Vocabulary")
        .def(py::init<std::vector<std::string>>(), py::arg("terms"))
        .def("__len__", &ctm::Vocabulary::size)
        .def("term", &ctm::Vocabulary::term, py::arg("id"))
        .def("id_of", &ctm::Vocabulary::id_of, py::arg("term"))
        .def_property_readonly("terms", &ctm::Vocabulary::terms);

    py::class_<ctm::ModelParams>(m, "ModelParams")
        .def_readonly("K", &ctm::ModelParams::K)
        .def_readonly("V", &ctm::ModelParams::V)
        .def_readonly("mu", &ctm::ModelParams::mu)
        .def_readonly("sigma", &ctm::ModelParams::sigma)
        .def_readonly("sigma_inv", &ctm::ModelParams::sigma_inv)
        .def_readonly("log_det_sigma", &ctm::ModelParams::log_det_sigma)
        .def_readonly("log_beta", &ctm::ModelParams::log_beta);

    py::class_<ctm::InferenceConfig>(m, "InferenceConfig")
        .def(py::init<>())
        .def_readwrite("doc_tol", &ctm::InferenceConfig::doc_tol)
        .def_readwrite("doc_max_iter", &ctm::InferenceConfig::doc_max_iter)
        .def_readwrite("lambda_max_iter", &ctm::InferenceConfig::lambda_max_iter)
        .def_readwrite("lambda_grad_tol", &ctm::InferenceConfig::lambda_grad_tol)
        .def_readwrite("nu2_max_iter", &ctm::InferenceConfig::nu2_max_iter)
        .def_readwrite("nu2_tol", &ctm::InferenceConfig::nu2_tol);

    py::class_<ctm::DocVariational>(m, "DocVariational")
        .def_readonly("lambda_", &ctm::DocVariational::lambda)
        .def_readonly("nu2", &ctm::DocVariational::nu2)
        .def_readonly("log_zeta", &ctm::DocVariational::log_zeta)
        .def_readonly("phi", &ctm::DocVariational::phi)
        .def_readonly("bound", &ctm::DocVariational::bound)
        .def_readonly("sweeps", &ctm::DocVariational::sweeps)
        .def_readonly("line_search_failed", &ctm::DocVariational::line_search_failed)
        .def_readonly("nu2_fallback", &ctm::DocVariational::nu2_fallback)
        .def_property_readonly("zeta", &ctm::DocVariational::zeta);

    py::class_<ctm::TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("K", &ctm::TrainConfig::K)
        .def_readwrite("em_max_iter", &ctm::TrainConfig::em_max_iter)
        .def_readwrite("em_tol", &ctm::TrainConfig::em_tol)
        .def_readwrite("workers", &ctm::TrainConfig::workers)
        .def_readwrite("seed", &ctm::TrainConfig::seed)
        .def_readwrite("ridge", &ctm::TrainConfig::ridge)
        .def_readwrite("beta_smoothing", &ctm::TrainConfig::beta_smoothing)
        .def_readwrite("inference", &ctm::TrainConfig::inference);

    py::class_<ctm::TraceEntry>(m, "TraceEntry")
        .def_readonly("iteration", &ctm::TraceEntry::iteration)
        .def_readonly("bound", &ctm::TraceEntry::bound)
        .def_readonly("rel_change", &ctm::TraceEntry::rel_change)
        .def_readonly("seconds", &ctm::TraceEntry::seconds)
        .def_readonly("shard_doc_counts", &ctm::TraceEntry::shard_doc_counts);

    py::class_<ctm::TrainTrace>(m, "TrainTrace")
        .def_readonly("entries", &ctm::TrainTrace::entries);

    py::enum_<ctm::CoherenceMeasure>(m, "CoherenceMeasure")
        .value("UCI", ctm::CoherenceMeasure::Uci)
        .value("UMASS", ctm::CoherenceMeasure::Umass);

    py::class_<ctm::CoherenceConfig>(m, "CoherenceConfig")
        .def(py::init<>())
        .def_readwrite("top_n", &ctm::CoherenceConfig::top_n)
        .def_readwrite("epsilon", &ctm::CoherenceConfig::epsilon)
        .def_readwrite("window", &ctm::CoherenceConfig::window)
        .def_readwrite("measure", &ctm::CoherenceConfig::measure);

    py::class_<ctm::TopicScore>(m, "TopicScore")
        .def_readonly("topic", &ctm::TopicScore::topic)
        .def_readonly("score", &ctm::TopicScore::score)
        .def_readonly("skipped_pairs", &ctm::TopicScore::skipped_pairs);

    py::class_<ctm::CoherenceReport>(m, "CoherenceReport")
        .def_readonly("topics", &ctm::CoherenceReport::topics)
        .def_readonly("model_score", &ctm::CoherenceReport::model_score);

    py::class_<ctm::PreprocessResult>(m, "PreprocessResult")
        .def_readonly("vocab", &ctm::PreprocessResult::vocab)
        .def_readonly("corpus", &ctm::PreprocessResult::corpus)
        .def_readonly("total_tokens", &ctm::PreprocessResult::total_tokens)
        .def_readonly("dropped_doc_ids", &ctm::PreprocessResult::dropped_doc_ids);

    py::class_<ctm::ModelBundle>(m, "ModelBundle")
        .def(py::init<>())
        .def_readwrite("params", &ctm::ModelBundle::params)
        .def_readwrite("vocab_path", &ctm::ModelBundle::vocab_path)
        .def_readwrite("config", &ctm::ModelBundle::config)
        .def_readwrite("trace", &ctm::ModelBundle::trace)
        .def_readwrite("format_version", &ctm::ModelBundle::format_version)
        .def_readwrite("iterations", &ctm::ModelBundle::iterations)
        .def_readwrite("final_bound", &ctm::ModelBundle::final_bound);

    m.def("tokenize",
          [](const std::string& text, const ctm::PreprocessConfig& cfg) {
              return ctm::tokenize(text, cfg);
          },
          py::arg("text"), py::arg("config") = ctm::PreprocessConfig());
    m.def("preprocess_dir", &ctm::preprocess_dir, py::arg("input_dir"), py::arg("config"));

    m.def("make_model", &make_model, py::arg("mu"), py::arg("sigma"), py::arg("log_beta"));
    m.def("init_model", &ctm::init_model, py::arg("k"), py::arg("v"), py::arg("seed"));
    m.def("logistic_normal", &ctm::logistic_normal, py::arg("eta"));

    m.def("infer_document",
          [](const ctm::BagOfWords& doc, const ctm::ModelParams& params,
             const ctm::InferenceConfig& cfg) {
              py::gil_scoped_release release;
              return ctm::infer_document(doc, params, cfg);
          },
          py::arg("doc"), py::arg("params"), py::arg("config") = ctm::InferenceConfig());
    m.def("doc_bound", &ctm::doc_bound, py::arg("params"), py::arg("state"), py::arg("doc"));

    m.def("train",
          [](const ctm::Corpus& corpus, int vocab_size, const ctm::TrainConfig& cfg,
             const ctm::IterationCallback& on_iteration) {
              py::gil_scoped_release release;
              return ctm::train(corpus, vocab_size, cfg, on_iteration);
          },
          py::arg("corpus"), py::arg("vocab_size"), py::arg("config"),
          py::arg("on_iteration") = ctm::IterationCallback());

    m.def("top_words", &ctm::top_words, py::arg("params"), py::arg("topic"), py::arg("n"));
    m.def("model_coherence_umass", &ctm::model_coherence_umass, py::arg("params"),
          py::arg("corpus"), py::arg("config") = ctm::CoherenceConfig());
    m.def("model_coherence_uci", &ctm::model_coherence_uci, py::arg("params"),
          py::arg("reference_docs"), py::arg("vocab"),
          py::arg("config") = ctm::CoherenceConfig());

    m.def("save_model", &ctm::save_model, py::arg("bundle"), py::arg("directory"));
    m.def("load_model", &ctm::load_model, py::arg("directory"));
    m.def("save_corpus", &ctm::save_corpus, py::arg("corpus"), py::arg("vocab"),
          py::arg("prefix"));
    m.def("load_corpus", &ctm::load_corpus, py::arg("prefix"));

    m.attr("__version__") = "0.1.0";
}
