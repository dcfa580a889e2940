#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "olt/serialization.hpp"

namespace olt {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Hyperparameters of the encoder-only surrogate. head_dims lists the widths of
// the spectra head from its input (hidden_dim) to its output (output_dim).
struct ModelConfig {
  std::size_t num_blocks = 2;
  std::size_t num_heads = 4;
  std::size_t hidden_dim = 64;
  std::size_t ffn_dim = 256;
  std::vector<std::size_t> head_dims{64, 64, 142};
  std::size_t max_seq_len = 6;
  std::size_t vocab_size = 32;
  std::size_t output_dim = 142;
  std::uint64_t seed = 0;

  // 2 blocks, 4 heads, hidden 64, head 64-64-output, sequences of <= 4 layers.
  static ModelConfig tiny(std::size_t vocab_size, std::size_t output_dim = 142,
                          std::size_t max_layers = 4);
  // 12 blocks, 16 heads, hidden 1024, head 1024-1024-142, 902-token vocabulary.
  static ModelConfig production();

  void validate() const;
  std::size_t head_dim() const { return hidden_dim / num_heads; }

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct TensorShape {
  std::string name;
  std::size_t rows;
  std::size_t cols;
};

// Every parameter tensor in canonical order. Pure shape arithmetic.
std::vector<TensorShape> parameter_shapes(const ModelConfig& cfg);
std::size_t parameter_count(const ModelConfig& cfg);

struct BlockParams {
  Matrix ln1_gain, ln1_bias;
  Matrix wq, bq, wk, bk, wv, bv, wo, bo;
  Matrix ln2_gain, ln2_bias;
  Matrix ff1_w, ff1_b, ff2_w, ff2_b;
};

// All weights. Linear maps are stored [in x out] and applied as x W + b;
// biases and layer-norm vectors are single rows. Gradients reuse this type.
struct ModelParams {
  Matrix token_embedding;       // [vocab_size x hidden_dim], the physical embedding
  Matrix positional_embedding;  // [max_seq_len x hidden_dim]
  std::vector<BlockParams> blocks;
  Matrix final_ln_gain, final_ln_bias;
  std::vector<Matrix> head_w, head_b;

  static ModelParams zeros(const ModelConfig& cfg);

  // Visits (name, tensor) in parameter_shapes() order.
  template <class F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <class F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

  friend bool operator==(const ModelParams& a, const ModelParams& b);

 private:
  template <class Self, class F>
  static void visit(Self& self, F& f) {
    f("token_embedding", self.token_embedding);
    f("positional_embedding", self.positional_embedding);
    for (std::size_t i = 0; i < self.blocks.size(); ++i) {
      auto& b = self.blocks[i];
      const std::string p = "blocks." + std::to_string(i) + ".";
      f(p + "ln1_gain", b.ln1_gain);
      f(p + "ln1_bias", b.ln1_bias);
      f(p + "wq", b.wq);
      f(p + "bq", b.bq);
      f(p + "wk", b.wk);
      f(p + "bk", b.bk);
      f(p + "wv", b.wv);
      f(p + "bv", b.bv);
      f(p + "wo", b.wo);
      f(p + "bo", b.bo);
      f(p + "ln2_gain", b.ln2_gain);
      f(p + "ln2_bias", b.ln2_bias);
      f(p + "ff1_w", b.ff1_w);
      f(p + "ff1_b", b.ff1_b);
      f(p + "ff2_w", b.ff2_w);
      f(p + "ff2_b", b.ff2_b);
    }
    f("final_ln_gain", self.final_ln_gain);
    f("final_ln_bias", self.final_ln_bias);
    for (std::size_t i = 0; i < self.head_w.size(); ++i) {
      f("head." + std::to_string(i) + ".w", self.head_w[i]);
      f("head." + std::to_string(i) + ".b", self.head_b[i]);
    }
  }
};

// Seeded init: linear weights ~ N(0, 1/fan_in), embeddings ~ N(0, 1/hidden_dim),
// layer-norm gains 1, all biases 0.
ModelParams init_params(const ModelConfig& cfg);

struct AttentionRecord {
  std::size_t block;
  std::size_t head;
  std::size_t sequence;  // index within the batch
  Matrix weights;        // [padded_len x padded_len]; padding columns are 0
};

struct ForwardOptions {
  bool capture_attention = false;
  // Pad every sequence to at least this length (EoS filler, masked keys).
  std::size_t pad_to = 0;
};

struct ForwardResult {
  Matrix predictions;  // [batch x output_dim]
  std::vector<AttentionRecord> attention;
};

// Pre-norm encoder; the final-layer BoS vector feeds the affine-GELU-affine
// head. Throws kSeqTooLong / kBadTokenId on invalid input.
ForwardResult forward(const ModelParams& params, const ModelConfig& cfg,
                      const std::vector<TokenSeq>& batch, const ForwardOptions& opts = {});

// Chunked forward returning only predictions. Chunks group sequences of equal
// length; results are in input order.
Matrix predict(const ModelParams& params, const ModelConfig& cfg, const std::vector<TokenSeq>& seqs,
               std::size_t batch_size = 256);

// Mean over all entries of the squared difference.
double loss_mse(const Matrix& predictions, const Matrix& targets);

struct LossAndGradients {
  double loss;
  ModelParams gradients;
};

// Exact reverse-mode gradients of loss_mse(forward(batch), targets).
LossAndGradients backward(const ModelParams& params, const ModelConfig& cfg,
                          const std::vector<TokenSeq>& batch, const Matrix& targets,
                          const ForwardOptions& opts = {});

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
  std::string vocab_manifest;
};

// Layout: "OLTCKPT1", u64 LE header length, JSON header, LE f64 tensor blob,
// 32-byte SHA-256 of everything before it.
void save_checkpoint(const ModelParams& params, const ModelConfig& cfg,
                     const std::string& vocab_manifest, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
// Additionally requires the stored vocabulary manifest to equal `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const std::string& expected_vocab_manifest);

}  // namespace olt
