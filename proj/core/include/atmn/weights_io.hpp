#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "atmn/model.hpp"

namespace atmn {

// ATMN weight container, little-endian:
//   magic "ATMN" (4 bytes)
//   version u32 = 1
//   config as six u32: n_layers, n_heads, d_model, d_head, vocab_size, max_seq
//   tensors as raw float32, row-major, no padding, in fixed order:
//     token_embedding, positional_embedding,
//     per layer: ln1 gain, ln1 bias, Wq, Wk, Wv, Wo,
//                ff_in, ff_in_bias, ff_out, ff_out_bias, ln2 gain, ln2 bias,
//     final ln gain, final ln bias
// The feed-forward hidden width is 4 * d_model and is not stored.
inline constexpr char kWeightsMagic[4] = {'A', 'T', 'M', 'N'};
inline constexpr std::uint32_t kWeightsVersion = 1;

class WeightsError : public std::runtime_error {
  public:
    enum class Kind {
        BadMagic,
        BadVersion,
        Truncated,      // stream ends inside the header
        ShapeMismatch,  // config inconsistent, or body size != header-implied size
        TrailingData,
    };

    WeightsError(Kind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    Kind kind() const { return kind_; }

  private:
    Kind kind_;
};

WeightSet load_weights(std::istream& in);
WeightSet load_weights_file(const std::string& path);

void save_weights(const WeightSet& weights, std::ostream& out);
void save_weights_file(const WeightSet& weights, const std::string& path);

// Deterministic pseudo-random weights. Generator: std::mt19937 seeded with
// `seed`; each draw takes the top 24 bits of one 32-bit output, mapped to
// u in [-1, 1); values are 0.1*u except layer-norm gains, which are 1 + 0.1*u.
// Tensors are drawn in ATMN file order, row-major. Same (config, seed) gives
// bit-identical weights on every platform.
WeightSet seeded_init(const ModelConfig& config, std::uint64_t seed);

}  // namespace atmn
