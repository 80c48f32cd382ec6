#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace atmn {

// Continuous relevance scores paired with binary token labels.
struct EvalSample {
    std::string id;
    std::vector<double> scores;   // non-negative
    std::vector<std::uint8_t> labels;  // 0/1, at least one 1
};

// AP = sum(x_i * y_i) / sum(x_i) on raw scores. Requires sum(x) > 0.
double average_precision(const std::vector<double>& x,
                         const std::vector<std::uint8_t>& y);

// AR = sum(x~_i * y_i) / sum(y_i) with x~ = x / max(x). Requires max(x) > 0
// and at least one positive label.
double average_recall(const std::vector<double>& x, const std::vector<std::uint8_t>& y);

// Mean of the values v with Q1 <= v <= Q3, quartiles by median-of-halves
// (lower half = first floor(n/2) sorted values, upper half = last
// floor(n/2)). Fewer than 4 values fall back to the plain mean.
double interquartile_mean(std::vector<double> values);

struct MetricReport {
    double map = 0.0;
    double map_iq = 0.0;
    double mar = 0.0;
    double mar_iq = 0.0;
    std::size_t n_samples = 0;
    std::size_t skipped = 0;
};

// Plain and interquartile means over per-sample AP/AR values.
MetricReport aggregate_metrics(const std::vector<double>& per_sample_ap,
                               const std::vector<double>& per_sample_ar,
                               std::size_t skipped);

}  // namespace atmn
