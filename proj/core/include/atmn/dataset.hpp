#pragma once

#include <string>
#include <vector>

#include "atmn/explain.hpp"
#include "atmn/metrics.hpp"
#include "atmn/vocab.hpp"

namespace atmn {

// Raw embedding matrix file: two little-endian u32 (rows, cols) followed by
// rows*cols float32, row-major.
Matrix load_embedding_matrix(const std::string& path);
void save_embedding_matrix(const Matrix& m, const std::string& path);

// One JSON-lines record: id, prompt or embedding_file, target, labels (one
// 0/1 per prompt token), optional chunking flag.
struct DatasetSample {
    std::string id;
    std::string prompt;
    std::string embedding_file;  // empty when prompt is textual
    std::string target;
    std::vector<std::uint8_t> labels;
    bool chunking = false;
};

std::vector<DatasetSample> load_dataset(const std::string& path);

struct EvaluateOptions {
    ExplainOptions explain;
    ExecutionPolicy policy;
    ChunkingRule chunking;
};

// Runs explain (or explain_chunks) per sample, clamps negative influences
// to zero, computes AP/AR per sample, and aggregates plain and
// interquartile means. Samples that fail or have all-zero scores are
// skipped and counted.
MetricReport evaluate_dataset(const std::string& path, const WeightSet& weights,
                              const Vocabulary& vocab,
                              const EvaluateOptions& options = {});

}  // namespace atmn
