#pragma once

#include <atomic>
#include <cstdint>
#include <variant>
#include <vector>

#include "atmn/tensor.hpp"

namespace atmn {

struct ModelConfig {
    std::uint32_t n_layers = 0;
    std::uint32_t n_heads = 0;
    std::uint32_t d_model = 0;
    std::uint32_t d_head = 0;
    std::uint32_t vocab_size = 0;
    std::uint32_t max_seq = 0;

    // Throws std::invalid_argument when any count is zero or
    // d_model != n_heads * d_head.
    void validate() const;

    std::uint32_t ff_hidden() const { return 4 * d_model; }
};

struct LayerWeights {
    std::vector<float> ln1_gain, ln1_bias;
    Matrix wq, wk, wv, wo;            // d_model x d_model
    Matrix ff_in;                     // d_model x ff_hidden
    std::vector<float> ff_in_bias;    // ff_hidden
    Matrix ff_out;                    // ff_hidden x d_model
    std::vector<float> ff_out_bias;   // d_model
    std::vector<float> ln2_gain, ln2_bias;
};

// All learned parameters plus the configuration they must be consistent
// with. The unembedding is tied to token_embedding. Immutable once built;
// concurrent forward passes share a WeightSet freely.
struct WeightSet {
    ModelConfig config;
    Matrix token_embedding;        // vocab_size x d_model
    Matrix positional_embedding;   // max_seq x d_model
    std::vector<LayerWeights> layers;
    std::vector<float> final_ln_gain, final_ln_bias;

    void validate() const;  // throws on any shape inconsistency or non-finite value
};

struct TokenSequence {
    std::vector<std::uint32_t> ids;

    std::size_t size() const { return ids.size(); }
    bool empty() const { return ids.empty(); }
};

// Pre-computed input embeddings (n x d_model), the stand-in for image or
// other modality tokens.
using EmbeddingSequence = Matrix;

// A prompt is either token ids or raw embedding rows.
using PromptInput = std::variant<TokenSequence, EmbeddingSequence>;

std::size_t prompt_length(const PromptInput& prompt);

enum class ModifierMode { Multiplicative, Additive };

// Per-(query,key) factor field applied to pre-softmax attention scores,
// before the causal mask, identically on every head. Multiplicative mode:
// value 1 = untouched. Additive mode: value 0 = untouched, offsets <= 0
// (-inf reaches full masking).
struct ModifierPlan {
    ModifierMode mode = ModifierMode::Multiplicative;
    Matrix factors;                    // n x n
    std::vector<std::uint32_t> layers; // layer indices; empty = all layers

    float untouched_value() const {
        return mode == ModifierMode::Multiplicative ? 1.0f : 0.0f;
    }
    bool applies_to(std::uint32_t layer) const;

    // Grows the factor field to cover total_len positions, filling new
    // entries with the untouched value. Used when generation appends tokens.
    ModifierPlan extended(std::size_t total_len) const;

    static ModifierPlan identity(std::size_t n,
                                 ModifierMode mode = ModifierMode::Multiplicative);
};

// Forward-pass and activation-memory instrumentation. Counters are atomic;
// one PassBudget may be shared by every worker of an explanation.
struct PassBudget {
    std::atomic<std::uint64_t> passes_issued{0};
    std::atomic<std::int64_t> live_activation_bytes{0};
    std::atomic<std::int64_t> peak_live_activations{0};

    void reset();
    void on_pass() { passes_issued.fetch_add(1, std::memory_order_relaxed); }
    void on_alloc(std::int64_t bytes);
    void on_free(std::int64_t bytes);
};

// Optional per-layer, per-head capture of attention internals:
// raw pre-softmax scores H, scores after modifier and causal mask H_M,
// and the per-head attention output O.
struct AttentionTrace {
    struct HeadTrace {
        Matrix scores_raw;     // n x n, H
        Matrix scores_masked;  // n x n, H_M (-inf above the diagonal)
        Matrix output;         // n x d_head, O
    };
    std::vector<std::vector<HeadTrace>> layers;
};

enum class Reduction { Mean, Sum };

// LayerNorm epsilon is part of the model semantics and fixed for the
// ATMN format.
inline constexpr float kLayerNormEpsilon = 1e-5f;

// Initial embeddings only: token rows looked up (or embedding rows passed
// through). Positional embeddings are NOT included; this is the matrix the
// cosine-similarity neighborhood is computed from.
Matrix embed(const TokenSequence& tokens, const WeightSet& weights);
Matrix embed(const EmbeddingSequence& embeddings, const WeightSet& weights);
Matrix embed(const PromptInput& prompt, const WeightSet& weights);

// Full decoder stack: positional embeddings, pre-norm blocks, causal
// attention with the modifier applied to pre-softmax scores before the
// mask, tied unembedding. Returns n x vocab_size logits.
Matrix forward(const PromptInput& input, const WeightSet& weights,
               const ModifierPlan* modifier = nullptr, PassBudget* budget = nullptr,
               AttentionTrace* trace = nullptr);

// Teacher-forced cross-entropy of the target continuation, one forward
// pass. The modifier, when present, must cover prompt+target positions.
double target_loss(const PromptInput& prompt, const TokenSequence& target,
                   const WeightSet& weights, const ModifierPlan* modifier = nullptr,
                   Reduction reduction = Reduction::Mean, PassBudget* budget = nullptr);

// Per-target-token cross-entropies, same contract as target_loss.
std::vector<double> target_token_losses(const PromptInput& prompt,
                                        const TokenSequence& target,
                                        const WeightSet& weights,
                                        const ModifierPlan* modifier = nullptr,
                                        PassBudget* budget = nullptr);

// Greedy argmax continuation; ties break toward the lowest token id. The
// modifier is extended over generated positions with untouched entries.
TokenSequence greedy_generate(const PromptInput& prompt, const WeightSet& weights,
                              const ModifierPlan* modifier, std::uint32_t steps,
                              PassBudget* budget = nullptr);

}  // namespace atmn
