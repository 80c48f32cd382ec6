#include "atmn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace atmn {

namespace {

void check_pair(const std::vector<double>& x, const std::vector<std::uint8_t>& y) {
    if (x.size() != y.size() || x.empty()) {
        throw std::invalid_argument("metrics: score/label length mismatch");
    }
    for (double v : x) {
        if (!std::isfinite(v) || v < 0.0) {
            throw std::invalid_argument("metrics: scores must be finite and >= 0");
        }
    }
    for (std::uint8_t l : y) {
        if (l > 1) {
            throw std::invalid_argument("metrics: labels must be 0 or 1");
        }
    }
}

double median_sorted(const double* v, std::size_t n) {
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double average_precision(const std::vector<double>& x,
                         const std::vector<std::uint8_t>& y) {
    check_pair(x, y);
    double hit = 0.0, total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        total += x[i];
        if (y[i]) hit += x[i];
    }
    if (total <= 0.0) {
        throw std::domain_error("average_precision: undefined for all-zero scores");
    }
    return hit / total;
}

double average_recall(const std::vector<double>& x, const std::vector<std::uint8_t>& y) {
    check_pair(x, y);
    double max = 0.0;
    double positives = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        max = std::max(max, x[i]);
        positives += y[i];
    }
    if (max <= 0.0) {
        throw std::domain_error("average_recall: undefined for all-zero scores");
    }
    if (positives <= 0.0) {
        throw std::invalid_argument("average_recall: no positive labels");
    }
    double hit = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (y[i]) hit += x[i] / max;
    }
    return hit / positives;
}

double interquartile_mean(std::vector<double> values) {
    if (values.empty()) {
        throw std::invalid_argument("interquartile_mean: empty input");
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n < 4) {
        double sum = 0.0;
        for (double v : values) sum += v;
        return sum / static_cast<double>(n);
    }
    const std::size_t half = n / 2;
    const double q1 = median_sorted(values.data(), half);
    const double q3 = median_sorted(values.data() + (n - half), half);
    double sum = 0.0;
    std::size_t count = 0;
    for (double v : values) {
        if (v >= q1 && v <= q3) {
            sum += v;
            ++count;
        }
    }
    return sum / static_cast<double>(count);
}

MetricReport aggregate_metrics(const std::vector<double>& per_sample_ap,
                               const std::vector<double>& per_sample_ar,
                               std::size_t skipped) {
    if (per_sample_ap.size() != per_sample_ar.size() || per_sample_ap.empty()) {
        throw std::invalid_argument("aggregate_metrics: no evaluable samples");
    }
    MetricReport report;
    report.n_samples = per_sample_ap.size();
    report.skipped = skipped;
    double ap_sum = 0.0, ar_sum = 0.0;
    for (std::size_t i = 0; i < per_sample_ap.size(); ++i) {
        ap_sum += per_sample_ap[i];
        ar_sum += per_sample_ar[i];
    }
    report.map = ap_sum / static_cast<double>(report.n_samples);
    report.mar = ar_sum / static_cast<double>(report.n_samples);
    report.map_iq = interquartile_mean(per_sample_ap);
    report.mar_iq = interquartile_mean(per_sample_ar);
    return report;
}

}  // namespace atmn
