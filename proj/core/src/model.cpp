#include "atmn/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace atmn {

namespace {

void check_finite(const std::vector<float>& v, const char* what) {
    for (float x : v) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument(std::string("WeightSet: non-finite value in ") + what);
        }
    }
}

void check_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* what) {
    if (m.rows != rows || m.cols != cols) {
        throw std::invalid_argument(std::string("WeightSet: bad shape for ") + what);
    }
    check_finite(m.data, what);
}

}  // namespace

void ModelConfig::validate() const {
    if (n_layers < 1 || n_heads < 1 || d_model < 1 || d_head < 1 || vocab_size < 1 ||
        max_seq < 1) {
        throw std::invalid_argument("ModelConfig: all counts must be >= 1");
    }
    if (d_model != n_heads * d_head) {
        throw std::invalid_argument("ModelConfig: d_model must equal n_heads * d_head");
    }
}

void WeightSet::validate() const {
    config.validate();
    const std::size_t d = config.d_model;
    const std::size_t h = config.ff_hidden();
    check_shape(token_embedding, config.vocab_size, d, "token_embedding");
    check_shape(positional_embedding, config.max_seq, d, "positional_embedding");
    if (layers.size() != config.n_layers) {
        throw std::invalid_argument("WeightSet: layer count mismatch");
    }
    for (const LayerWeights& lw : layers) {
        if (lw.ln1_gain.size() != d || lw.ln1_bias.size() != d ||
            lw.ln2_gain.size() != d || lw.ln2_bias.size() != d ||
            lw.ff_in_bias.size() != h || lw.ff_out_bias.size() != d) {
            throw std::invalid_argument("WeightSet: bad vector length in layer");
        }
        check_shape(lw.wq, d, d, "wq");
        check_shape(lw.wk, d, d, "wk");
        check_shape(lw.wv, d, d, "wv");
        check_shape(lw.wo, d, d, "wo");
        check_shape(lw.ff_in, d, h, "ff_in");
        check_shape(lw.ff_out, h, d, "ff_out");
        check_finite(lw.ln1_gain, "ln1_gain");
        check_finite(lw.ln1_bias, "ln1_bias");
        check_finite(lw.ln2_gain, "ln2_gain");
        check_finite(lw.ln2_bias, "ln2_bias");
        check_finite(lw.ff_in_bias, "ff_in_bias");
        check_finite(lw.ff_out_bias, "ff_out_bias");
    }
    if (final_ln_gain.size() != d || final_ln_bias.size() != d) {
        throw std::invalid_argument("WeightSet: bad final layer-norm length");
    }
    check_finite(final_ln_gain, "final_ln_gain");
    check_finite(final_ln_bias, "final_ln_bias");
}

std::size_t prompt_length(const PromptInput& prompt) {
    if (const auto* tokens = std::get_if<TokenSequence>(&prompt)) {
        return tokens->size();
    }
    return std::get<EmbeddingSequence>(prompt).rows;
}

bool ModifierPlan::applies_to(std::uint32_t layer) const {
    if (layers.empty()) return true;
    return std::find(layers.begin(), layers.end(), layer) != layers.end();
}

ModifierPlan ModifierPlan::extended(std::size_t total_len) const {
    if (factors.rows > total_len) {
        throw std::invalid_argument("ModifierPlan::extended: cannot shrink a plan");
    }
    ModifierPlan out;
    out.mode = mode;
    out.layers = layers;
    out.factors = Matrix(total_len, total_len, untouched_value());
    for (std::size_t r = 0; r < factors.rows; ++r) {
        for (std::size_t c = 0; c < factors.cols; ++c) {
            out.factors.at(r, c) = factors.at(r, c);
        }
    }
    return out;
}

ModifierPlan ModifierPlan::identity(std::size_t n, ModifierMode mode) {
    ModifierPlan plan;
    plan.mode = mode;
    plan.factors = Matrix(n, n, plan.untouched_value());
    return plan;
}

void PassBudget::reset() {
    passes_issued.store(0, std::memory_order_relaxed);
    live_activation_bytes.store(0, std::memory_order_relaxed);
    peak_live_activations.store(0, std::memory_order_relaxed);
}

void PassBudget::on_alloc(std::int64_t bytes) {
    const std::int64_t live =
        live_activation_bytes.fetch_add(bytes, std::memory_order_relaxed) + bytes;
    std::int64_t peak = peak_live_activations.load(std::memory_order_relaxed);
    while (live > peak &&
           !peak_live_activations.compare_exchange_weak(peak, live,
                                                        std::memory_order_relaxed)) {
    }
}

void PassBudget::on_free(std::int64_t bytes) {
    live_activation_bytes.fetch_sub(bytes, std::memory_order_relaxed);
}

Matrix embed(const TokenSequence& tokens, const WeightSet& weights) {
    const ModelConfig& cfg = weights.config;
    if (tokens.size() > cfg.max_seq) {
        throw std::invalid_argument("embed: sequence longer than max_seq");
    }
    Matrix out(tokens.size(), cfg.d_model);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        const std::uint32_t id = tokens.ids[t];
        if (id >= cfg.vocab_size) {
            throw std::out_of_range("embed: token id " + std::to_string(id) +
                                    " out of range");
        }
        std::copy_n(weights.token_embedding.row(id).data(), cfg.d_model,
                    out.row(t).data());
    }
    return out;
}

Matrix embed(const EmbeddingSequence& embeddings, const WeightSet& weights) {
    const ModelConfig& cfg = weights.config;
    if (embeddings.rows > cfg.max_seq) {
        throw std::invalid_argument("embed: sequence longer than max_seq");
    }
    if (embeddings.cols != cfg.d_model) {
        throw std::invalid_argument("embed: embedding width != d_model");
    }
    return embeddings;
}

Matrix embed(const PromptInput& prompt, const WeightSet& weights) {
    if (const auto* tokens = std::get_if<TokenSequence>(&prompt)) {
        return embed(*tokens, weights);
    }
    return embed(std::get<EmbeddingSequence>(prompt), weights);
}

namespace {

// RAII registration of one forward pass's activation footprint.
class ActivationGuard {
  public:
    ActivationGuard(PassBudget* budget, std::int64_t bytes)
        : budget_(budget), bytes_(bytes) {
        if (budget_) budget_->on_alloc(bytes_);
    }
    ~ActivationGuard() {
        if (budget_) budget_->on_free(bytes_);
    }
    ActivationGuard(const ActivationGuard&) = delete;
    ActivationGuard& operator=(const ActivationGuard&) = delete;

  private:
    PassBudget* budget_;
    std::int64_t bytes_;
};

void apply_modifier_entry(float& score, float factor, ModifierMode mode) {
    if (mode == ModifierMode::Multiplicative) {
        if (factor != 1.0f) score *= factor;
    } else {
        if (factor != 0.0f) score += factor;
    }
}

Matrix forward_impl(const Matrix& input_embeddings, const WeightSet& weights,
                    const ModifierPlan* modifier, PassBudget* budget,
                    AttentionTrace* trace) {
    const ModelConfig& cfg = weights.config;
    const std::size_t n = input_embeddings.rows;
    const std::size_t d = cfg.d_model;
    const std::size_t dh = cfg.d_head;
    const std::size_t hidden = cfg.ff_hidden();

    if (n == 0) throw std::invalid_argument("forward: empty input");
    if (n > cfg.max_seq) throw std::invalid_argument("forward: input longer than max_seq");
    if (modifier) {
        if (modifier->factors.rows != n || modifier->factors.cols != n) {
            throw std::invalid_argument("forward: modifier shape " +
                                        std::to_string(modifier->factors.rows) + "x" +
                                        std::to_string(modifier->factors.cols) +
                                        " does not match sequence length " +
                                        std::to_string(n));
        }
        for (std::uint32_t layer : modifier->layers) {
            if (layer >= cfg.n_layers) {
                throw std::invalid_argument("forward: modifier layer index out of range");
            }
        }
    }

    // Private workspace; sized up front so the activation footprint of one
    // pass is a single number.
    Matrix x(n, d);
    Matrix normed(n, d);
    Matrix attn_concat(n, d);
    Matrix ff_hidden_buf(n, hidden);
    std::vector<float> score_row(n);
    Matrix logits;  // n x vocab, allocated at the end

    const std::int64_t workspace_bytes =
        static_cast<std::int64_t>(x.size_bytes() + normed.size_bytes() +
                                  attn_concat.size_bytes() + ff_hidden_buf.size_bytes() +
                                  score_row.size() * sizeof(float) +
                                  3 * n * d * sizeof(float) +  // q, k, v
                                  n * cfg.vocab_size * sizeof(float));
    ActivationGuard guard(budget, workspace_bytes);
    if (budget) budget->on_pass();

    if (trace) {
        trace->layers.assign(cfg.n_layers, {});
    }

    // Input embeddings plus learned absolute positions.
    for (std::size_t t = 0; t < n; ++t) {
        const auto pos = weights.positional_embedding.row(t);
        const auto src = input_embeddings.row(t);
        auto dst = x.row(t);
        for (std::size_t j = 0; j < d; ++j) {
            dst[j] = src[j] + pos[j];
        }
    }

    const float inv_sqrt_dh = 1.0f / std::sqrt(static_cast<float>(dh));

    for (std::uint32_t layer = 0; layer < cfg.n_layers; ++layer) {
        const LayerWeights& lw = weights.layers[layer];
        const bool modified = modifier && modifier->applies_to(layer);

        for (std::size_t t = 0; t < n; ++t) {
            layer_norm(x.row(t), lw.ln1_gain, lw.ln1_bias, kLayerNormEpsilon,
                       normed.row(t));
        }
        Matrix q = matmul(normed, lw.wq);
        Matrix k = matmul(normed, lw.wk);
        Matrix v = matmul(normed, lw.wv);

        if (trace) {
            (*trace).layers[layer].resize(cfg.n_heads);
        }

        for (std::uint32_t head = 0; head < cfg.n_heads; ++head) {
            const std::size_t off = static_cast<std::size_t>(head) * dh;
            AttentionTrace::HeadTrace* ht = nullptr;
            if (trace) {
                ht = &(*trace).layers[layer][head];
                ht->scores_raw = Matrix(n, n);
                ht->scores_masked = Matrix(n, n, kNegInf);
                ht->output = Matrix(n, dh);
            }
            for (std::size_t t = 0; t < n; ++t) {
                const float* qrow = q.data.data() + t * d + off;
                // Keys at positions <= t; entries above the diagonal are
                // masked to -inf after the modifier, so they are never
                // computed on the fast path.
                const std::size_t visible = trace ? n : t + 1;
                for (std::size_t key = 0; key < visible; ++key) {
                    const float* krow = k.data.data() + key * d + off;
                    float acc = 0.0f;
                    for (std::size_t j = 0; j < dh; ++j) {
                        acc += qrow[j] * krow[j];
                    }
                    acc *= inv_sqrt_dh;
                    if (ht) ht->scores_raw.at(t, key) = acc;
                    if (modified) {
                        apply_modifier_entry(acc, modifier->factors.at(t, key),
                                             modifier->mode);
                    }
                    if (key <= t) {
                        score_row[key] = acc;
                        if (ht) ht->scores_masked.at(t, key) = acc;
                    }
                }
                softmax_row_inplace(std::span<float>(score_row.data(), t + 1));
                float* orow = attn_concat.data.data() + t * d + off;
                std::fill_n(orow, dh, 0.0f);
                for (std::size_t key = 0; key <= t; ++key) {
                    const float w = score_row[key];
                    const float* vrow = v.data.data() + key * d + off;
                    for (std::size_t j = 0; j < dh; ++j) {
                        orow[j] += w * vrow[j];
                    }
                }
                if (ht) {
                    std::copy_n(orow, dh, ht->output.row(t).data());
                }
            }
        }

        Matrix attn_out = matmul(attn_concat, lw.wo);
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            x.data[i] += attn_out.data[i];
        }

        for (std::size_t t = 0; t < n; ++t) {
            layer_norm(x.row(t), lw.ln2_gain, lw.ln2_bias, kLayerNormEpsilon,
                       normed.row(t));
        }
        ff_hidden_buf = matmul(normed, lw.ff_in);
        for (std::size_t t = 0; t < n; ++t) {
            float* row = ff_hidden_buf.data.data() + t * hidden;
            for (std::size_t j = 0; j < hidden; ++j) {
                row[j] = gelu(row[j] + lw.ff_in_bias[j]);
            }
        }
        Matrix ff_out = matmul(ff_hidden_buf, lw.ff_out);
        for (std::size_t t = 0; t < n; ++t) {
            const float* row = ff_out.data.data() + t * d;
            auto xrow = x.row(t);
            for (std::size_t j = 0; j < d; ++j) {
                xrow[j] += row[j] + lw.ff_out_bias[j];
            }
        }
    }

    for (std::size_t t = 0; t < n; ++t) {
        layer_norm(x.row(t), weights.final_ln_gain, weights.final_ln_bias,
                   kLayerNormEpsilon, normed.row(t));
    }
    logits = matmul_transposed(normed, weights.token_embedding);
    return logits;
}

// Prompt embeddings with the target token rows appended.
Matrix concat_target(const PromptInput& prompt, const TokenSequence& target,
                     const WeightSet& weights) {
    Matrix base = embed(prompt, weights);
    Matrix out(base.rows + target.size(), weights.config.d_model);
    std::copy(base.data.begin(), base.data.end(), out.data.begin());
    for (std::size_t j = 0; j < target.size(); ++j) {
        const std::uint32_t id = target.ids[j];
        if (id >= weights.config.vocab_size) {
            throw std::out_of_range("target token id out of range");
        }
        std::copy_n(weights.token_embedding.row(id).data(), weights.config.d_model,
                    out.row(base.rows + j).data());
    }
    return out;
}

double row_cross_entropy(std::span<const float> logits, std::uint32_t target_id) {
    double max = kNegInf;
    for (float v : logits) {
        if (v > max) max = v;
    }
    double sum = 0.0;
    for (float v : logits) {
        sum += std::exp(static_cast<double>(v) - max);
    }
    return max + std::log(sum) - static_cast<double>(logits[target_id]);
}

}  // namespace

Matrix forward(const PromptInput& input, const WeightSet& weights,
               const ModifierPlan* modifier, PassBudget* budget, AttentionTrace* trace) {
    return forward_impl(embed(input, weights), weights, modifier, budget, trace);
}

std::vector<double> target_token_losses(const PromptInput& prompt,
                                        const TokenSequence& target,
                                        const WeightSet& weights,
                                        const ModifierPlan* modifier,
                                        PassBudget* budget) {
    if (target.empty()) {
        throw std::invalid_argument("target_loss: empty target");
    }
    const std::size_t n_prompt = prompt_length(prompt);
    const std::size_t total = n_prompt + target.size();
    if (total > weights.config.max_seq) {
        throw std::invalid_argument("target_loss: prompt plus target exceeds max_seq");
    }
    if (n_prompt == 0) {
        throw std::invalid_argument("target_loss: empty prompt");
    }
    Matrix input = concat_target(prompt, target, weights);
    Matrix logits = forward_impl(input, weights, modifier, budget, nullptr);
    std::vector<double> losses(target.size());
    for (std::size_t j = 0; j < target.size(); ++j) {
        const std::size_t predicted_at = n_prompt + j - 1;
        losses[j] = row_cross_entropy(logits.row(predicted_at), target.ids[j]);
    }
    return losses;
}

double target_loss(const PromptInput& prompt, const TokenSequence& target,
                   const WeightSet& weights, const ModifierPlan* modifier,
                   Reduction reduction, PassBudget* budget) {
    const std::vector<double> losses =
        target_token_losses(prompt, target, weights, modifier, budget);
    double sum = 0.0;
    for (double l : losses) sum += l;
    return reduction == Reduction::Mean ? sum / static_cast<double>(losses.size()) : sum;
}

TokenSequence greedy_generate(const PromptInput& prompt, const WeightSet& weights,
                              const ModifierPlan* modifier, std::uint32_t steps,
                              PassBudget* budget) {
    const std::size_t n_prompt = prompt_length(prompt);
    if (n_prompt + steps > weights.config.max_seq) {
        throw std::invalid_argument("greedy_generate: prompt plus steps exceeds max_seq");
    }
    TokenSequence continuation;
    if (steps == 0) return continuation;

    Matrix seq = embed(prompt, weights);
    for (std::uint32_t step = 0; step < steps; ++step) {
        const std::size_t len = seq.rows;
        Matrix logits;
        if (modifier) {
            const ModifierPlan grown = modifier->extended(len);
            logits = forward_impl(seq, weights, &grown, budget, nullptr);
        } else {
            logits = forward_impl(seq, weights, nullptr, budget, nullptr);
        }
        const auto last = logits.row(len - 1);
        std::uint32_t best = 0;
        for (std::uint32_t id = 1; id < weights.config.vocab_size; ++id) {
            if (last[id] > last[best]) best = id;  // ties keep the lowest id
        }
        continuation.ids.push_back(best);

        Matrix grown_seq(len + 1, weights.config.d_model);
        std::copy(seq.data.begin(), seq.data.end(), grown_seq.data.begin());
        std::copy_n(weights.token_embedding.row(best).data(), weights.config.d_model,
                    grown_seq.row(len).data());
        seq = std::move(grown_seq);
    }
    return continuation;
}

}  // namespace atmn
