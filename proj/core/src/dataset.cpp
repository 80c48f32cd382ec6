#include "atmn/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace atmn {

namespace {

using nlohmann::json;

}  // namespace

Matrix load_embedding_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::invalid_argument("embedding matrix: cannot open '" + path + "'");
    }
    std::uint32_t shape[2];
    in.read(reinterpret_cast<char*>(shape), sizeof(shape));
    if (!in) {
        throw std::invalid_argument("embedding matrix: truncated shape header");
    }
    Matrix m(shape[0], shape[1]);
    in.read(reinterpret_cast<char*>(m.data.data()),
            static_cast<std::streamsize>(m.size_bytes()));
    if (!in) {
        throw std::invalid_argument("embedding matrix: data shorter than header implies");
    }
    return m;
}

void save_embedding_matrix(const Matrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::invalid_argument("embedding matrix: cannot open '" + path +
                                    "' for writing");
    }
    const std::uint32_t shape[2] = {static_cast<std::uint32_t>(m.rows),
                                    static_cast<std::uint32_t>(m.cols)};
    out.write(reinterpret_cast<const char*>(shape), sizeof(shape));
    out.write(reinterpret_cast<const char*>(m.data.data()),
              static_cast<std::streamsize>(m.size_bytes()));
    if (!out) {
        throw std::runtime_error("embedding matrix: write failed");
    }
}

std::vector<DatasetSample> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("dataset: cannot open '" + path + "'");
    }
    std::vector<DatasetSample> samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception& e) {
            throw std::invalid_argument("dataset: line " + std::to_string(line_no) +
                                        ": " + e.what());
        }
        DatasetSample sample;
        sample.id = doc.at("id").get<std::string>();
        if (doc.contains("prompt")) {
            sample.prompt = doc.at("prompt").get<std::string>();
        } else if (doc.contains("embedding_file")) {
            sample.embedding_file = doc.at("embedding_file").get<std::string>();
        } else {
            throw std::invalid_argument("dataset: sample '" + sample.id +
                                        "' has neither prompt nor embedding_file");
        }
        sample.target = doc.at("target").get<std::string>();
        sample.labels = doc.at("labels").get<std::vector<std::uint8_t>>();
        sample.chunking = doc.value("chunking", false);
        samples.push_back(std::move(sample));
    }
    if (samples.empty()) {
        throw std::invalid_argument("dataset: no samples in '" + path + "'");
    }
    return samples;
}

namespace {

// Chunk scores are expanded back to token granularity so that labels stay
// one-per-token regardless of the explanation unit.
std::vector<double> per_token_scores(const RelevanceMap& map, std::size_t n_tokens) {
    std::vector<double> scores(n_tokens, 0.0);
    for (std::size_t s = 0; s < map.spans.size(); ++s) {
        for (std::uint32_t t = map.spans[s].begin;
             t < map.spans[s].end && t < n_tokens; ++t) {
            scores[t] = map.scores[s];
        }
    }
    return scores;
}

}  // namespace

MetricReport evaluate_dataset(const std::string& path, const WeightSet& weights,
                              const Vocabulary& vocab, const EvaluateOptions& options) {
    const std::vector<DatasetSample> samples = load_dataset(path);
    const std::filesystem::path base = std::filesystem::path(path).parent_path();

    std::vector<double> ap_values, ar_values;
    std::size_t skipped = 0;

    for (const DatasetSample& sample : samples) {
        try {
            const Tokenization target_tok = tokenize(sample.target, vocab);
            if (target_tok.ids.empty()) {
                throw std::invalid_argument("empty target");
            }
            const ExplanationTarget target =
                ExplanationTarget::explicit_tokens(target_tok.ids);

            RelevanceMap map;
            std::size_t n_tokens = 0;
            if (!sample.embedding_file.empty()) {
                std::filesystem::path file(sample.embedding_file);
                if (file.is_relative()) file = base / file;
                const Matrix embeddings = load_embedding_matrix(file.string());
                n_tokens = embeddings.rows;
                if (sample.chunking) {
                    throw std::invalid_argument(
                        "chunking requires a textual prompt");
                }
                map = explain(embeddings, target, weights, options.explain,
                              options.policy);
            } else {
                const Tokenization prompt_tok = tokenize(sample.prompt, vocab);
                n_tokens = prompt_tok.ids.size();
                if (n_tokens == 0) {
                    throw std::invalid_argument("empty prompt");
                }
                if (sample.chunking) {
                    map = explain_chunks(prompt_tok.ids, prompt_tok.texts, target,
                                         weights, options.chunking, options.explain,
                                         options.policy);
                } else {
                    map = explain(prompt_tok.ids, target, weights, options.explain,
                                  options.policy);
                }
            }

            if (sample.labels.size() != n_tokens) {
                throw std::invalid_argument(
                    "label count " + std::to_string(sample.labels.size()) +
                    " does not match prompt token count " + std::to_string(n_tokens));
            }

            std::vector<double> scores = per_token_scores(map, n_tokens);
            for (double& v : scores) v = std::max(0.0, v);

            ap_values.push_back(average_precision(scores, sample.labels));
            ar_values.push_back(average_recall(scores, sample.labels));
        } catch (const std::exception&) {
            ++skipped;
        }
    }

    if (ap_values.empty()) {
        throw std::invalid_argument("dataset: no evaluable samples (all " +
                                    std::to_string(skipped) + " skipped)");
    }
    return aggregate_metrics(ap_values, ar_values, skipped);
}

}  // namespace atmn
