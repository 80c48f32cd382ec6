#include "atmn/suppression.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace atmn {

SimilarityMatrix cosine_similarity_matrix(const Matrix& embeddings) {
    const std::size_t n = embeddings.rows;
    const std::size_t d = embeddings.cols;
    if (n < 1) {
        throw std::invalid_argument("cosine_similarity_matrix: empty input");
    }
    Matrix normalized(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        double norm_sq = 0.0;
        const auto row = embeddings.row(i);
        for (float v : row) norm_sq += static_cast<double>(v) * v;
        if (norm_sq == 0.0) {
            throw std::domain_error("cosine_similarity_matrix: zero-norm embedding row " +
                                    std::to_string(i));
        }
        const float inv = static_cast<float>(1.0 / std::sqrt(norm_sq));
        auto out = normalized.row(i);
        for (std::size_t j = 0; j < d; ++j) out[j] = row[j] * inv;
    }
    SimilarityMatrix sim;
    sim.s = matmul_transposed(normalized, normalized);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            float& v = sim.s.at(i, j);
            if (v > 1.0f) v = 1.0f;
            if (v < -1.0f) v = -1.0f;
        }
        sim.s.at(i, i) = 1.0f;
    }
    return sim;
}

namespace {

void check_factor(float f, bool allow_amplification) {
    if (!std::isfinite(f)) {
        throw std::invalid_argument("suppression factor must be finite");
    }
    if (f > 1.0f) {
        throw std::invalid_argument("suppression factor must not exceed 1");
    }
    if (!allow_amplification && f < 0.0f) {
        throw std::invalid_argument("amplification is not defined for this plan");
    }
}

}  // namespace

ModifierPlan build_single_token(std::size_t i, float f, std::size_t n) {
    if (i >= n) {
        throw std::out_of_range("build_single_token: position out of range");
    }
    check_factor(f, /*allow_amplification=*/true);
    ModifierPlan plan = ModifierPlan::identity(n);
    const float value = 1.0f - f;
    for (std::size_t q = 0; q < n; ++q) {
        plan.factors.at(q, i) = value;
    }
    return plan;
}

ModifierPlan build_correlated(std::size_t i, float f, float kappa,
                              const SimilarityMatrix& sim) {
    const std::size_t n = sim.size();
    if (i >= n) {
        throw std::out_of_range("build_correlated: position out of range");
    }
    if (!(kappa > 0.0f) || kappa > 1.0f) {
        throw std::invalid_argument("build_correlated: kappa must be in (0, 1]");
    }
    check_factor(f, /*allow_amplification=*/false);
    ModifierPlan plan = ModifierPlan::identity(n);
    for (std::size_t k = 0; k < n; ++k) {
        const float s = sim.s.at(i, k);
        if (s < kappa || s > 1.0f) {
            continue;  // outside the neighborhood: column untouched
        }
        // Linear interpolation between the suppression factor (1-f) at
        // similarity 1 and no change at the threshold boundary.
        const float value = (1.0f - f) + f * (1.0f - s);
        for (std::size_t q = 0; q < n; ++q) {
            plan.factors.at(q, k) = value;
        }
    }
    return plan;
}

ModifierPlan build_chunk(const std::vector<std::size_t>& indices, float f,
                         std::size_t n) {
    if (indices.empty()) {
        throw std::invalid_argument("build_chunk: empty index set");
    }
    check_factor(f, /*allow_amplification=*/true);
    ModifierPlan plan = ModifierPlan::identity(n);
    const float value = 1.0f - f;
    for (std::size_t i : indices) {
        if (i >= n) {
            throw std::out_of_range("build_chunk: position out of range");
        }
        for (std::size_t q = 0; q < n; ++q) {
            plan.factors.at(q, i) = value;
        }
    }
    return plan;
}

ModifierPlan build_log_additive(std::size_t i, float f, std::size_t n) {
    if (i >= n) {
        throw std::out_of_range("build_log_additive: position out of range");
    }
    if (!std::isfinite(f) || f < 0.0f || f > 1.0f) {
        throw std::invalid_argument(
            "build_log_additive: factor must be in [0, 1] (0 masks fully)");
    }
    ModifierPlan plan = ModifierPlan::identity(n, ModifierMode::Additive);
    const float offset = f == 0.0f ? kNegInf : std::log(f);
    if (offset != 0.0f) {
        for (std::size_t q = 0; q < n; ++q) {
            plan.factors.at(q, i) = offset;
        }
    }
    return plan;
}

}  // namespace atmn
