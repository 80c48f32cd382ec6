#pragma once

#include <cstdint>
#include <vector>

#include "atmn/model.hpp"
#include "atmn/tensor.hpp"

namespace atmn {

// Pairwise cosine similarities of the initial (pre-positional) input
// embeddings. Row-normalized dot products, clamped to [-1, 1], diagonal
// snapped to exactly 1.
struct SimilarityMatrix {
    Matrix s;  // n x n, symmetric

    std::size_t size() const { return s.rows; }
};

SimilarityMatrix cosine_similarity_matrix(const Matrix& embeddings);

// A suppression request before it is lowered to a ModifierPlan.
// factor f: 0 < f < 1 suppresses, f < 0 amplifies, f = 0 is the identity.
struct SuppressionSpec {
    std::vector<std::size_t> indices;
    float factor = 0.9f;
    float kappa = 0.7f;
    bool correlated = false;
    ModifierMode mode = ModifierMode::Multiplicative;
};

// Multiplicative plan scaling every (query, key=i) score by (1 - f).
ModifierPlan build_single_token(std::size_t i, float f, std::size_t n);

// Correlated suppression: key k is scaled by (1-f) + f*(1 - s_ik) for
// similarities inside the kappa neighborhood, untouched outside it.
// Degenerates to build_single_token when the neighborhood is {i} alone.
// Amplification (f < 0) is not defined for correlated plans.
ModifierPlan build_correlated(std::size_t i, float f, float kappa,
                              const SimilarityMatrix& sim);

// Multiplicative plan scaling every key column in `indices` by (1 - f).
ModifierPlan build_chunk(const std::vector<std::size_t>& indices, float f,
                         std::size_t n);

// Additive plan offsetting key column i by ln(f), f in (0, 1]. f = 0 is the
// explicit full-masking case (-inf offset).
ModifierPlan build_log_additive(std::size_t i, float f, std::size_t n);

}  // namespace atmn
