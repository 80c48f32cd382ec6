#include "atmn/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace atmn {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw std::invalid_argument("matmul: shape mismatch " +
                                    std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                                    " * " + std::to_string(b.rows) + "x" +
                                    std::to_string(b.cols));
    }
    Matrix c(a.rows, b.cols);
    // i-k-j order: each c[i][j] accumulates contributions in ascending k.
    for (std::size_t i = 0; i < a.rows; ++i) {
        const float* arow = a.data.data() + i * a.cols;
        float* crow = c.data.data() + i * c.cols;
        for (std::size_t k = 0; k < a.cols; ++k) {
            const float aik = arow[k];
            const float* brow = b.data.data() + k * b.cols;
            for (std::size_t j = 0; j < b.cols; ++j) {
                crow[j] += aik * brow[j];
            }
        }
    }
    return c;
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) {
        throw std::invalid_argument("matmul_transposed: inner dimension mismatch");
    }
    Matrix c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const float* arow = a.data.data() + i * a.cols;
        for (std::size_t j = 0; j < b.rows; ++j) {
            const float* brow = b.data.data() + j * b.cols;
            float acc = 0.0f;
            for (std::size_t k = 0; k < a.cols; ++k) {
                acc += arow[k] * brow[k];
            }
            c.at(i, j) = acc;
        }
    }
    return c;
}

void softmax_row_inplace(std::span<float> row) {
    float max = kNegInf;
    for (float v : row) {
        if (v > max) max = v;
    }
    if (max == kNegInf) {
        throw std::domain_error("softmax_rows: degenerate attention row (all -inf)");
    }
    float sum = 0.0f;
    for (float& v : row) {
        v = std::exp(v - max);  // exp(-inf) == 0 exactly
        sum += v;
    }
    for (float& v : row) {
        v /= sum;
    }
}

Matrix softmax_rows(const Matrix& scores) {
    Matrix out = scores;
    for (std::size_t r = 0; r < out.rows; ++r) {
        softmax_row_inplace(out.row(r));
    }
    return out;
}

void layer_norm(std::span<const float> x, std::span<const float> gain,
                std::span<const float> bias, float epsilon, std::span<float> out) {
    if (x.size() != gain.size() || x.size() != bias.size() || x.size() != out.size()) {
        throw std::invalid_argument("layer_norm: length mismatch");
    }
    if (!(epsilon > 0.0f)) {
        throw std::invalid_argument("layer_norm: epsilon must be positive");
    }
    const std::size_t n = x.size();
    double mean = 0.0;
    for (float v : x) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (float v : x) {
        const double d = v - mean;
        var += d * d;
    }
    var /= static_cast<double>(n);  // population variance
    const double inv = 1.0 / std::sqrt(var + static_cast<double>(epsilon));
    for (std::size_t i = 0; i < n; ++i) {
        const float normed = static_cast<float>((x[i] - mean) * inv);
        out[i] = normed * gain[i] + bias[i];
    }
}

std::vector<float> layer_norm(const std::vector<float>& x, const std::vector<float>& gain,
                              const std::vector<float>& bias, float epsilon) {
    std::vector<float> out(x.size());
    layer_norm(std::span<const float>(x), std::span<const float>(gain),
               std::span<const float>(bias), epsilon, std::span<float>(out));
    return out;
}

float gelu(float x) {
    // Phi(x) = 0.5 * (1 + erf(x / sqrt(2)))
    const double phi = 0.5 * (1.0 + std::erf(static_cast<double>(x) / std::sqrt(2.0)));
    return static_cast<float>(static_cast<double>(x) * phi);
}

}  // namespace atmn
