#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atmn/model.hpp"
#include "atmn/suppression.hpp"

namespace atmn {

// The continuation whose loss change is measured. Either supplied
// explicitly or produced by an unmodified greedy pass.
struct ExplanationTarget {
    enum class Origin { Explicit, Generated };

    TokenSequence tokens;
    Origin origin = Origin::Explicit;
    std::uint32_t steps = 0;  // generation length when origin == Generated

    static ExplanationTarget explicit_tokens(TokenSequence t) {
        return {std::move(t), Origin::Explicit, 0};
    }
};

struct ExplainOptions {
    float factor = 0.9f;
    float kappa = 0.7f;
    bool correlated = true;
    ModifierMode mode = ModifierMode::Multiplicative;
    std::vector<std::uint32_t> layers;  // empty = all layers
    Reduction reduction = Reduction::Mean;
};

// Where the perturbed passes run. workers == 0 picks hardware parallelism
// capped at the job count. The budget, when given, is reset at the start of
// each explanation and then counts every forward pass it causes.
struct ExecutionPolicy {
    std::uint32_t workers = 0;
    std::uint32_t batch_size = 16;
    PassBudget* budget = nullptr;
};

struct Span {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;  // exclusive

    bool operator==(const Span&) const = default;
};

// One influence score per prompt token or chunk: the target-loss delta
// between the perturbed and unperturbed pass. Signed; positive means the
// suppressed content supported the target. Spans cover prompt positions
// only, never target positions.
struct RelevanceMap {
    enum class Unit { Token, Chunk };

    Unit unit = Unit::Token;
    std::vector<Span> spans;
    std::vector<double> scores;
    double baseline_loss = 0.0;
    ExplanationTarget target;
    ExplainOptions options;
};

// Token groups separated by delimiter tokens. A delimiter terminates its
// chunk and belongs to it; empty chunks are dropped. A token matches a
// delimiter when its text equals the delimiter or the delimiter with
// surrounding whitespace stripped.
struct ChunkingRule {
    std::vector<std::string> delimiters = {".", ",", "\n", " and"};
};

std::vector<Span> chunk_spans(const std::vector<std::string>& token_texts,
                              const ChunkingRule& rule);

// Loss delta of one explicit perturbation: target_loss with the plan minus
// target_loss without it. The plan must cover prompt+target positions.
double influence_of(const PromptInput& prompt, const ExplanationTarget& target,
                    const ModifierPlan& plan, const WeightSet& weights,
                    Reduction reduction = Reduction::Mean, PassBudget* budget = nullptr);

// Per-token relevance: one baseline pass plus one perturbed pass per prompt
// token, executed through the scheduler. Exactly n+1 forward passes.
RelevanceMap explain(const PromptInput& prompt, const ExplanationTarget& target,
                     const WeightSet& weights, const ExplainOptions& options = {},
                     const ExecutionPolicy& policy = {});

// Chunk-level relevance over delimiter-separated token groups; exactly
// (#chunks + 1) forward passes. Requires token texts, so it is only
// available for token prompts.
RelevanceMap explain_chunks(const TokenSequence& prompt,
                            const std::vector<std::string>& token_texts,
                            const ExplanationTarget& target, const WeightSet& weights,
                            const ChunkingRule& rule = {},
                            const ExplainOptions& options = {},
                            const ExecutionPolicy& policy = {});

// Global explanation: the target is the model's own greedy completion of
// `steps` tokens (generated without a modifier), then explained as usual.
RelevanceMap explain_global(const PromptInput& prompt, std::uint32_t steps,
                            const WeightSet& weights, const ExplainOptions& options = {},
                            const ExecutionPolicy& policy = {});

// Stable JSON document: version, unit, spans, scores, baseline_loss,
// target, options echo. Scores round-trip exactly.
std::string relevance_to_json(const RelevanceMap& map);
RelevanceMap relevance_from_json(const std::string& text);

}  // namespace atmn
