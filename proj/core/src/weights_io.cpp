#include "atmn/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <vector>

namespace atmn {

namespace {

static_assert(std::endian::native == std::endian::little,
              "ATMN I/O assumes a little-endian host");

std::uint64_t tensor_float_count(const ModelConfig& cfg) {
    const std::uint64_t d = cfg.d_model;
    const std::uint64_t hidden = cfg.ff_hidden();
    const std::uint64_t per_layer = 2 * d           // ln1 gain/bias
                                    + 4 * d * d     // wq wk wv wo
                                    + d * hidden + hidden + hidden * d + d  // ff
                                    + 2 * d;        // ln2 gain/bias
    return static_cast<std::uint64_t>(cfg.vocab_size) * d +
           static_cast<std::uint64_t>(cfg.max_seq) * d + cfg.n_layers * per_layer +
           2 * d;
}

class BodyReader {
  public:
    explicit BodyReader(std::istream& in) : in_(in) {}

    void read_floats(float* dst, std::size_t count) {
        in_.read(reinterpret_cast<char*>(dst),
                 static_cast<std::streamsize>(count * sizeof(float)));
        if (!in_) {
            throw WeightsError(WeightsError::Kind::ShapeMismatch,
                               "ATMN: tensor data shorter than the header implies");
        }
    }

    Matrix read_matrix(std::size_t rows, std::size_t cols) {
        Matrix m(rows, cols);
        read_floats(m.data.data(), m.data.size());
        return m;
    }

    std::vector<float> read_vector(std::size_t n) {
        std::vector<float> v(n);
        read_floats(v.data(), n);
        return v;
    }

  private:
    std::istream& in_;
};

void write_floats(std::ostream& out, const float* src, std::size_t count) {
    out.write(reinterpret_cast<const char*>(src),
              static_cast<std::streamsize>(count * sizeof(float)));
}

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

}  // namespace

WeightSet load_weights(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in) {
        throw WeightsError(WeightsError::Kind::Truncated, "ATMN: stream ends in magic");
    }
    if (std::memcmp(magic, kWeightsMagic, 4) != 0) {
        throw WeightsError(WeightsError::Kind::BadMagic,
                           "ATMN: bad magic '" + std::string(magic, 4) + "'");
    }
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in) {
        throw WeightsError(WeightsError::Kind::Truncated, "ATMN: stream ends in version");
    }
    if (version != kWeightsVersion) {
        throw WeightsError(WeightsError::Kind::BadVersion,
                           "ATMN: unsupported version " + std::to_string(version));
    }
    std::uint32_t fields[6];
    in.read(reinterpret_cast<char*>(fields), sizeof(fields));
    if (!in) {
        throw WeightsError(WeightsError::Kind::Truncated, "ATMN: stream ends in config");
    }
    ModelConfig cfg{fields[0], fields[1], fields[2], fields[3], fields[4], fields[5]};
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw WeightsError(WeightsError::Kind::ShapeMismatch,
                           std::string("ATMN: inconsistent config: ") + e.what());
    }

    WeightSet w;
    w.config = cfg;
    BodyReader reader(in);
    const std::size_t d = cfg.d_model;
    const std::size_t hidden = cfg.ff_hidden();
    w.token_embedding = reader.read_matrix(cfg.vocab_size, d);
    w.positional_embedding = reader.read_matrix(cfg.max_seq, d);
    w.layers.resize(cfg.n_layers);
    for (LayerWeights& lw : w.layers) {
        lw.ln1_gain = reader.read_vector(d);
        lw.ln1_bias = reader.read_vector(d);
        lw.wq = reader.read_matrix(d, d);
        lw.wk = reader.read_matrix(d, d);
        lw.wv = reader.read_matrix(d, d);
        lw.wo = reader.read_matrix(d, d);
        lw.ff_in = reader.read_matrix(d, hidden);
        lw.ff_in_bias = reader.read_vector(hidden);
        lw.ff_out = reader.read_matrix(hidden, d);
        lw.ff_out_bias = reader.read_vector(d);
        lw.ln2_gain = reader.read_vector(d);
        lw.ln2_bias = reader.read_vector(d);
    }
    w.final_ln_gain = reader.read_vector(d);
    w.final_ln_bias = reader.read_vector(d);

    if (in.peek() != std::char_traits<char>::eof()) {
        throw WeightsError(WeightsError::Kind::TrailingData,
                           "ATMN: bytes remain after the last tensor");
    }
    w.validate();
    return w;
}

WeightSet load_weights_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw WeightsError(WeightsError::Kind::Truncated,
                           "ATMN: cannot open '" + path + "'");
    }
    return load_weights(in);
}

void save_weights(const WeightSet& weights, std::ostream& out) {
    weights.validate();
    const ModelConfig& cfg = weights.config;
    out.write(kWeightsMagic, 4);
    write_u32(out, kWeightsVersion);
    for (std::uint32_t v : {cfg.n_layers, cfg.n_heads, cfg.d_model, cfg.d_head,
                            cfg.vocab_size, cfg.max_seq}) {
        write_u32(out, v);
    }
    write_floats(out, weights.token_embedding.data.data(),
                 weights.token_embedding.data.size());
    write_floats(out, weights.positional_embedding.data.data(),
                 weights.positional_embedding.data.size());
    for (const LayerWeights& lw : weights.layers) {
        write_floats(out, lw.ln1_gain.data(), lw.ln1_gain.size());
        write_floats(out, lw.ln1_bias.data(), lw.ln1_bias.size());
        for (const Matrix* m : {&lw.wq, &lw.wk, &lw.wv, &lw.wo, &lw.ff_in}) {
            write_floats(out, m->data.data(), m->data.size());
        }
        write_floats(out, lw.ff_in_bias.data(), lw.ff_in_bias.size());
        write_floats(out, lw.ff_out.data.data(), lw.ff_out.data.size());
        write_floats(out, lw.ff_out_bias.data(), lw.ff_out_bias.size());
        write_floats(out, lw.ln2_gain.data(), lw.ln2_gain.size());
        write_floats(out, lw.ln2_bias.data(), lw.ln2_bias.size());
    }
    write_floats(out, weights.final_ln_gain.data(), weights.final_ln_gain.size());
    write_floats(out, weights.final_ln_bias.data(), weights.final_ln_bias.size());
    if (!out) {
        throw std::runtime_error("ATMN: write failed");
    }
}

void save_weights_file(const WeightSet& weights, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("ATMN: cannot open '" + path + "' for writing");
    }
    save_weights(weights, out);
}

namespace {

class SeededDraw {
  public:
    explicit SeededDraw(std::uint64_t seed)
        : rng_(static_cast<std::mt19937::result_type>(seed)) {}

    // u in [-1, 1) from the top 24 bits of one generator output.
    float uniform() {
        const std::uint32_t bits = rng_() >> 8;
        const float u01 = static_cast<float>(bits) * (1.0f / 16777216.0f);
        return 2.0f * u01 - 1.0f;
    }

    void fill(std::vector<float>& v, float scale, float offset = 0.0f) {
        for (float& x : v) x = offset + scale * uniform();
    }
    void fill(Matrix& m, float scale) { fill(m.data, scale); }

  private:
    std::mt19937 rng_;
};

}  // namespace

WeightSet seeded_init(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    const std::size_t d = config.d_model;
    const std::size_t hidden = config.ff_hidden();
    constexpr float kScale = 0.1f;

    SeededDraw draw(seed);
    WeightSet w;
    w.config = config;
    w.token_embedding = Matrix(config.vocab_size, d);
    draw.fill(w.token_embedding, kScale);
    w.positional_embedding = Matrix(config.max_seq, d);
    draw.fill(w.positional_embedding, kScale);
    w.layers.resize(config.n_layers);
    for (LayerWeights& lw : w.layers) {
        lw.ln1_gain.resize(d);
        draw.fill(lw.ln1_gain, kScale, 1.0f);
        lw.ln1_bias.resize(d);
        draw.fill(lw.ln1_bias, kScale);
        lw.wq = Matrix(d, d);
        draw.fill(lw.wq, kScale);
        lw.wk = Matrix(d, d);
        draw.fill(lw.wk, kScale);
        lw.wv = Matrix(d, d);
        draw.fill(lw.wv, kScale);
        lw.wo = Matrix(d, d);
        draw.fill(lw.wo, kScale);
        lw.ff_in = Matrix(d, hidden);
        draw.fill(lw.ff_in, kScale);
        lw.ff_in_bias.resize(hidden);
        draw.fill(lw.ff_in_bias, kScale);
        lw.ff_out = Matrix(hidden, d);
        draw.fill(lw.ff_out, kScale);
        lw.ff_out_bias.resize(d);
        draw.fill(lw.ff_out_bias, kScale);
        lw.ln2_gain.resize(d);
        draw.fill(lw.ln2_gain, kScale, 1.0f);
        lw.ln2_bias.resize(d);
        draw.fill(lw.ln2_bias, kScale);
    }
    w.final_ln_gain.resize(d);
    draw.fill(w.final_ln_gain, kScale, 1.0f);
    w.final_ln_bias.resize(d);
    draw.fill(w.final_ln_bias, kScale);
    return w;
}

}  // namespace atmn
