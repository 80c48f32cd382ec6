#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace atmn {

// Dense row-major float32 matrix. The only sentinel value permitted is
// -infinity, which marks masked entries in pre-softmax score matrices.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, float fill = 0.0f)
        : rows(r), cols(c), data(r * c, fill) {}

    float& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    float at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<float> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const float> row(std::size_t r) const {
        return {data.data() + r * cols, cols};
    }

    std::size_t size_bytes() const { return data.size() * sizeof(float); }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
};

inline constexpr float kNegInf = -std::numeric_limits<float>::infinity();

// c = a * b. Accumulation is float32, ascending over the inner index, so
// repeated calls on identical inputs are bit-identical.
Matrix matmul(const Matrix& a, const Matrix& b);

// a * b^T without materializing the transpose.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);

// Row-wise softmax with max-subtraction. -inf entries map to exactly 0.
// A row consisting only of -inf has no distribution and is rejected.
Matrix softmax_rows(const Matrix& scores);
void softmax_row_inplace(std::span<float> row);

// (x - mean) / sqrt(var + epsilon) * gain + bias, population variance.
void layer_norm(std::span<const float> x, std::span<const float> gain,
                std::span<const float> bias, float epsilon, std::span<float> out);
std::vector<float> layer_norm(const std::vector<float>& x,
                              const std::vector<float>& gain,
                              const std::vector<float>& bias, float epsilon);

// Exact-erf GELU: x * Phi(x). Not the tanh approximation.
float gelu(float x);

}  // namespace atmn
