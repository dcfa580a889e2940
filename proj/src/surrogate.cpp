#include "olt/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <json.hpp>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "olt/error.hpp"

namespace olt {
namespace {

constexpr double kLayerNormEps = 1e-5;

const double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

// Exact (erf) GELU.
double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  const double pdf = std::exp(-0.5 * x * x) * kInvSqrt2 * std::numbers::inv_sqrtpi;
  return cdf + x * pdf;
}

Matrix apply_gelu(const Matrix& x) { return x.unaryExpr([](double v) { return gelu(v); }); }

struct LayerNormCache {
  Matrix xhat;
  Eigen::VectorXd rstd;
};

Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, LayerNormCache& cache) {
  const auto cols = static_cast<double>(x.cols());
  cache.xhat.resize(x.rows(), x.cols());
  cache.rstd.resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).sum() / cols;
    const double var = (x.row(r).array() - mean).square().sum() / cols;
    const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.rstd(r) = rstd;
    cache.xhat.row(r) = (x.row(r).array() - mean) * rstd;
  }
  return (cache.xhat.array().rowwise() * gain.row(0).array()).rowwise() + bias.row(0).array();
}

// Returns dx; accumulates gain/bias gradients.
Matrix layer_norm_backward(const Matrix& dy, const Matrix& gain, const LayerNormCache& cache,
                           Matrix& dgain, Matrix& dbias) {
  dgain.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  dbias.row(0) += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * gain.row(0).array();
  const auto cols = static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_d = dxhat.row(r).sum() / cols;
    const double mean_dx = dxhat.row(r).dot(cache.xhat.row(r)) / cols;
    dx.row(r) = cache.rstd(r) * (dxhat.row(r).array() - mean_d - cache.xhat.row(r).array() * mean_dx);
  }
  return dx;
}

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix y = x * w;
  y.rowwise() += b.row(0);
  return y;
}

struct BlockCache {
  Matrix x_in;
  LayerNormCache ln1;
  Matrix h, q, k, v;
  std::vector<Matrix> probs;  // [sequence * num_heads + head], padded_len x padded_len
  Matrix concat;
  Matrix x_mid;
  LayerNormCache ln2;
  Matrix h2, u, g;
};

struct ForwardCache {
  std::size_t batch = 0;
  std::size_t len = 0;
  std::vector<std::size_t> lengths;
  std::vector<TokenId> ids;  // padded, row-major [batch * len]
  std::vector<BlockCache> blocks;
  LayerNormCache final_ln;
  Matrix pooled;
  std::vector<Matrix> head_in;   // input to head layer l
  std::vector<Matrix> head_pre;  // pre-activation output of head layer l
  Matrix predictions;
};

void check_batch(const ModelConfig& cfg, const std::vector<TokenSeq>& batch) {
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& ids = batch[b].ids;
    if (ids.empty()) raise(ErrorCode::kMalformedSequence, "sequence " + std::to_string(b) + " is empty");
    if (ids.size() > cfg.max_seq_len) {
      raise(ErrorCode::kSeqTooLong, "sequence " + std::to_string(b) + " has length " +
                                        std::to_string(ids.size()) + " > " + std::to_string(cfg.max_seq_len));
    }
    for (TokenId id : ids) {
      if (id >= cfg.vocab_size) {
        raise(ErrorCode::kBadTokenId, "token id " + std::to_string(id) + " >= vocab size " +
                                          std::to_string(cfg.vocab_size));
      }
    }
  }
}

void run_forward(const ModelParams& p, const ModelConfig& cfg, const std::vector<TokenSeq>& batch,
                 const ForwardOptions& opts, ForwardCache& c, std::vector<AttentionRecord>* attention) {
  check_batch(cfg, batch);
  c.batch = batch.size();
  c.len = opts.pad_to;
  c.lengths.resize(c.batch);
  for (std::size_t b = 0; b < c.batch; ++b) {
    c.lengths[b] = batch[b].ids.size();
    c.len = std::max(c.len, c.lengths[b]);
  }
  if (c.len > cfg.max_seq_len) {
    raise(ErrorCode::kSeqTooLong, "padded length " + std::to_string(c.len) + " > " +
                                      std::to_string(cfg.max_seq_len));
  }
  const std::size_t L = c.len;
  const auto rows = static_cast<Eigen::Index>(c.batch * L);
  const auto H = static_cast<Eigen::Index>(cfg.hidden_dim);
  const auto A = cfg.num_heads;
  const auto dh = static_cast<Eigen::Index>(cfg.head_dim());
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  c.ids.assign(c.batch * L, kEosId);
  Matrix x(rows, H);
  for (std::size_t b = 0; b < c.batch; ++b) {
    for (std::size_t i = 0; i < L; ++i) {
      const TokenId id = i < c.lengths[b] ? batch[b].ids[i] : kEosId;
      c.ids[b * L + i] = id;
      x.row(static_cast<Eigen::Index>(b * L + i)) =
          p.token_embedding.row(id) + p.positional_embedding.row(static_cast<Eigen::Index>(i));
    }
  }

  c.blocks.resize(cfg.num_blocks);
  for (std::size_t blk = 0; blk < cfg.num_blocks; ++blk) {
    const BlockParams& bp = p.blocks[blk];
    BlockCache& bc = c.blocks[blk];
    bc.x_in = x;
    bc.h = layer_norm(x, bp.ln1_gain, bp.ln1_bias, bc.ln1);
    bc.q = affine(bc.h, bp.wq, bp.bq);
    bc.k = affine(bc.h, bp.wk, bp.bk);
    bc.v = affine(bc.h, bp.wv, bp.bv);
    bc.concat.resize(rows, H);
    bc.probs.resize(c.batch * A);
    for (std::size_t b = 0; b < c.batch; ++b) {
      const auto r0 = static_cast<Eigen::Index>(b * L);
      const auto valid = static_cast<Eigen::Index>(c.lengths[b]);
      const auto Li = static_cast<Eigen::Index>(L);
      for (std::size_t a = 0; a < A; ++a) {
        const auto c0 = static_cast<Eigen::Index>(a) * dh;
        Matrix s = scale * bc.q.block(r0, c0, Li, dh) * bc.k.block(r0, c0, Li, dh).transpose();
        Matrix& prob = bc.probs[b * A + a];
        prob.setZero(Li, Li);
        for (Eigen::Index i = 0; i < Li; ++i) {
          const double mx = s.row(i).head(valid).maxCoeff();
          double sum = 0.0;
          for (Eigen::Index j = 0; j < valid; ++j) {
            prob(i, j) = std::exp(s(i, j) - mx);
            sum += prob(i, j);
          }
          prob.row(i).head(valid) /= sum;
        }
        bc.concat.block(r0, c0, Li, dh) = prob * bc.v.block(r0, c0, Li, dh);
        if (attention) attention->push_back({blk, a, b, prob});
      }
    }
    bc.x_mid = x + affine(bc.concat, bp.wo, bp.bo);
    bc.h2 = layer_norm(bc.x_mid, bp.ln2_gain, bp.ln2_bias, bc.ln2);
    bc.u = affine(bc.h2, bp.ff1_w, bp.ff1_b);
    bc.g = apply_gelu(bc.u);
    x = bc.x_mid + affine(bc.g, bp.ff2_w, bp.ff2_b);
  }

  const Matrix z = layer_norm(x, p.final_ln_gain, p.final_ln_bias, c.final_ln);
  c.pooled.resize(static_cast<Eigen::Index>(c.batch), H);
  for (std::size_t b = 0; b < c.batch; ++b) {
    c.pooled.row(static_cast<Eigen::Index>(b)) = z.row(static_cast<Eigen::Index>(b * L));
  }

  const std::size_t n_head = p.head_w.size();
  c.head_in.resize(n_head);
  c.head_pre.resize(n_head);
  Matrix act = c.pooled;
  for (std::size_t l = 0; l < n_head; ++l) {
    c.head_in[l] = act;
    c.head_pre[l] = affine(act, p.head_w[l], p.head_b[l]);
    act = l + 1 < n_head ? apply_gelu(c.head_pre[l]) : c.head_pre[l];
  }
  c.predictions = std::move(act);
}

Matrix normal_matrix(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

}  // namespace

ModelConfig ModelConfig::tiny(std::size_t vocab_size, std::size_t output_dim, std::size_t max_layers) {
  ModelConfig cfg;
  cfg.num_blocks = 2;
  cfg.num_heads = 4;
  cfg.hidden_dim = 64;
  cfg.ffn_dim = 4 * cfg.hidden_dim;
  cfg.head_dims = {64, 64, output_dim};
  cfg.max_seq_len = max_layers + 2;
  cfg.vocab_size = vocab_size;
  cfg.output_dim = output_dim;
  return cfg;
}

ModelConfig ModelConfig::production() {
  ModelConfig cfg;
  cfg.num_blocks = 12;
  cfg.num_heads = 16;
  cfg.hidden_dim = 1024;
  // The feed-forward width is not published; 512 reproduces the reported
  // total of about 65M parameters.
  cfg.ffn_dim = 512;
  cfg.head_dims = {1024, 1024, 142};
  cfg.max_seq_len = kDefaultMaxLayers + 2;
  cfg.vocab_size = 2 + 18 * 50;
  cfg.output_dim = 142;
  return cfg;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { raise(ErrorCode::kConfigError, m); };
  if (num_blocks == 0) fail("num_blocks must be >= 1");
  if (num_heads == 0 || hidden_dim == 0 || hidden_dim % num_heads != 0) {
    fail("hidden_dim must be a positive multiple of num_heads");
  }
  if (ffn_dim == 0) fail("ffn_dim must be >= 1");
  if (head_dims.size() < 2) fail("head_dims needs at least input and output widths");
  if (head_dims.front() != hidden_dim) fail("head_dims must start at hidden_dim");
  if (head_dims.back() != output_dim) fail("head_dims must end at output_dim");
  for (auto d : head_dims) {
    if (d == 0) fail("head widths must be positive");
  }
  if (max_seq_len < 1) fail("max_seq_len must be >= 1");
  if (vocab_size < 3) fail("vocab_size must include BoS, EoS and a structure token");
  if (output_dim == 0) fail("output_dim must be >= 1");
}

std::string ModelConfig::to_json() const {
  nlohmann::json j{{"num_blocks", num_blocks}, {"num_heads", num_heads},
                   {"hidden_dim", hidden_dim}, {"ffn_dim", ffn_dim},
                   {"head_dims", head_dims},   {"max_seq_len", max_seq_len},
                   {"vocab_size", vocab_size}, {"output_dim", output_dim},
                   {"seed", seed}};
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ModelConfig cfg;
    cfg.num_blocks = j.at("num_blocks").get<std::size_t>();
    cfg.num_heads = j.at("num_heads").get<std::size_t>();
    cfg.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    cfg.ffn_dim = j.at("ffn_dim").get<std::size_t>();
    cfg.head_dims = j.at("head_dims").get<std::vector<std::size_t>>();
    cfg.max_seq_len = j.at("max_seq_len").get<std::size_t>();
    cfg.vocab_size = j.at("vocab_size").get<std::size_t>();
    cfg.output_dim = j.at("output_dim").get<std::size_t>();
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::kConfigError, std::string("bad model config: ") + e.what());
  }
}

std::vector<TensorShape> parameter_shapes(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t H = cfg.hidden_dim;
  std::vector<TensorShape> out;
  out.push_back({"token_embedding", cfg.vocab_size, H});
  out.push_back({"positional_embedding", cfg.max_seq_len, H});
  for (std::size_t i = 0; i < cfg.num_blocks; ++i) {
    const std::string p = "blocks." + std::to_string(i) + ".";
    out.push_back({p + "ln1_gain", 1, H});
    out.push_back({p + "ln1_bias", 1, H});
    for (const char* n : {"q", "k", "v", "o"}) {
      out.push_back({p + "w" + n, H, H});
      out.push_back({p + "b" + n, 1, H});
    }
    out.push_back({p + "ln2_gain", 1, H});
    out.push_back({p + "ln2_bias", 1, H});
    out.push_back({p + "ff1_w", H, cfg.ffn_dim});
    out.push_back({p + "ff1_b", 1, cfg.ffn_dim});
    out.push_back({p + "ff2_w", cfg.ffn_dim, H});
    out.push_back({p + "ff2_b", 1, H});
  }
  out.push_back({"final_ln_gain", 1, H});
  out.push_back({"final_ln_bias", 1, H});
  for (std::size_t l = 0; l + 1 < cfg.head_dims.size(); ++l) {
    out.push_back({"head." + std::to_string(l) + ".w", cfg.head_dims[l], cfg.head_dims[l + 1]});
    out.push_back({"head." + std::to_string(l) + ".b", 1, cfg.head_dims[l + 1]});
  }
  return out;
}

std::size_t parameter_count(const ModelConfig& cfg) {
  std::size_t n = 0;
  for (const auto& s : parameter_shapes(cfg)) n += s.rows * s.cols;
  return n;
}

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
  ModelParams p;
  p.blocks.resize(cfg.num_blocks);
  p.head_w.resize(cfg.head_dims.size() - 1);
  p.head_b.resize(cfg.head_dims.size() - 1);
  const auto shapes = parameter_shapes(cfg);
  std::size_t i = 0;
  p.for_each([&](const std::string&, Matrix& m) {
    m.setZero(static_cast<Eigen::Index>(shapes[i].rows), static_cast<Eigen::Index>(shapes[i].cols));
    ++i;
  });
  return p;
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  std::vector<const Matrix*> lhs, rhs;
  a.for_each([&](const std::string&, const Matrix& m) { lhs.push_back(&m); });
  b.for_each([&](const std::string&, const Matrix& m) { rhs.push_back(&m); });
  if (lhs.size() != rhs.size()) return false;
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    if (lhs[i]->rows() != rhs[i]->rows() || lhs[i]->cols() != rhs[i]->cols()) return false;
    if (std::memcmp(lhs[i]->data(), rhs[i]->data(), sizeof(double) * lhs[i]->size()) != 0) return false;
  }
  return true;
}

ModelParams init_params(const ModelConfig& cfg) {
  ModelParams p = ModelParams::zeros(cfg);
  std::mt19937_64 rng(cfg.seed);
  const double embed_std = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim));
  p.token_embedding = normal_matrix(cfg.vocab_size, cfg.hidden_dim, embed_std, rng);
  p.positional_embedding = normal_matrix(cfg.max_seq_len, cfg.hidden_dim, embed_std, rng);
  auto linear = [&](Matrix& w) {
    w = normal_matrix(static_cast<std::size_t>(w.rows()), static_cast<std::size_t>(w.cols()),
                      1.0 / std::sqrt(static_cast<double>(w.rows())), rng);
  };
  for (auto& b : p.blocks) {
    b.ln1_gain.setOnes();
    b.ln2_gain.setOnes();
    linear(b.wq);
    linear(b.wk);
    linear(b.wv);
    linear(b.wo);
    linear(b.ff1_w);
    linear(b.ff2_w);
  }
  p.final_ln_gain.setOnes();
  for (auto& w : p.head_w) linear(w);
  return p;
}

ForwardResult forward(const ModelParams& params, const ModelConfig& cfg,
                      const std::vector<TokenSeq>& batch, const ForwardOptions& opts) {
  ForwardCache cache;
  ForwardResult out;
  run_forward(params, cfg, batch, opts, cache, opts.capture_attention ? &out.attention : nullptr);
  out.predictions = std::move(cache.predictions);
  return out;
}

Matrix predict(const ModelParams& params, const ModelConfig& cfg, const std::vector<TokenSeq>& seqs,
               std::size_t batch_size) {
  if (batch_size == 0) raise(ErrorCode::kConfigError, "batch_size must be >= 1");
  check_batch(cfg, seqs);
  // Chunks hold sequences of one length so no padding rows are computed.
  std::vector<std::size_t> order(seqs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return seqs[a].ids.size() < seqs[b].ids.size(); });
  Matrix out(static_cast<Eigen::Index>(seqs.size()), static_cast<Eigen::Index>(cfg.output_dim));
  std::vector<TokenSeq> chunk;
  for (std::size_t lo = 0; lo < order.size();) {
    const std::size_t len = seqs[order[lo]].ids.size();
    std::size_t hi = lo;
    chunk.clear();
    while (hi < order.size() && hi - lo < batch_size && seqs[order[hi]].ids.size() == len) {
      chunk.push_back(seqs[order[hi]]);
      ++hi;
    }
    const Matrix y = forward(params, cfg, chunk).predictions;
    for (std::size_t i = lo; i < hi; ++i) {
      out.row(static_cast<Eigen::Index>(order[i])) = y.row(static_cast<Eigen::Index>(i - lo));
    }
    lo = hi;
  }
  return out;
}

double loss_mse(const Matrix& predictions, const Matrix& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols()) {
    raise(ErrorCode::kShapeMismatch, "predictions and targets differ in shape");
  }
  if (predictions.size() == 0) raise(ErrorCode::kShapeMismatch, "empty prediction matrix");
  return (predictions - targets).squaredNorm() / static_cast<double>(predictions.size());
}

LossAndGradients backward(const ModelParams& p, const ModelConfig& cfg,
                          const std::vector<TokenSeq>& batch, const Matrix& targets,
                          const ForwardOptions& opts) {
  ForwardCache c;
  run_forward(p, cfg, batch, opts, c, nullptr);
  LossAndGradients out{loss_mse(c.predictions, targets), ModelParams::zeros(cfg)};
  ModelParams& g = out.gradients;

  const std::size_t L = c.len;
  const auto rows = static_cast<Eigen::Index>(c.batch * L);
  const auto H = static_cast<Eigen::Index>(cfg.hidden_dim);
  const auto A = cfg.num_heads;
  const auto dh = static_cast<Eigen::Index>(cfg.head_dim());
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix dy = (2.0 / static_cast<double>(c.predictions.size())) * (c.predictions - targets);
  for (std::size_t l = p.head_w.size(); l-- > 0;) {
    g.head_w[l] += c.head_in[l].transpose() * dy;
    g.head_b[l].row(0) += dy.colwise().sum();
    Matrix dx = dy * p.head_w[l].transpose();
    if (l > 0) {
      dx.array() *= c.head_pre[l - 1].unaryExpr([](double v) { return gelu_grad(v); }).array();
    }
    dy = std::move(dx);
  }

  Matrix dz = Matrix::Zero(rows, H);
  for (std::size_t b = 0; b < c.batch; ++b) dz.row(static_cast<Eigen::Index>(b * L)) = dy.row(static_cast<Eigen::Index>(b));
  Matrix dx = layer_norm_backward(dz, p.final_ln_gain, c.final_ln, g.final_ln_gain, g.final_ln_bias);

  for (std::size_t blk = cfg.num_blocks; blk-- > 0;) {
    const BlockParams& bp = p.blocks[blk];
    const BlockCache& bc = c.blocks[blk];
    BlockParams& gb = g.blocks[blk];

    // Feed-forward branch: x_out = x_mid + GELU(h2 W1 + b1) W2 + b2.
    gb.ff2_w += bc.g.transpose() * dx;
    gb.ff2_b.row(0) += dx.colwise().sum();
    Matrix du = (dx * bp.ff2_w.transpose()).array() *
                bc.u.unaryExpr([](double v) { return gelu_grad(v); }).array();
    gb.ff1_w += bc.h2.transpose() * du;
    gb.ff1_b.row(0) += du.colwise().sum();
    const Matrix dh2 = du * bp.ff1_w.transpose();
    const Matrix dmid = dx + layer_norm_backward(dh2, bp.ln2_gain, bc.ln2, gb.ln2_gain, gb.ln2_bias);

    // Attention branch: x_mid = x_in + concat W_o + b_o.
    gb.wo += bc.concat.transpose() * dmid;
    gb.bo.row(0) += dmid.colwise().sum();
    const Matrix dconcat = dmid * bp.wo.transpose();
    Matrix dq = Matrix::Zero(rows, H);
    Matrix dk = Matrix::Zero(rows, H);
    Matrix dv = Matrix::Zero(rows, H);
    const auto Li = static_cast<Eigen::Index>(L);
    for (std::size_t b = 0; b < c.batch; ++b) {
      const auto r0 = static_cast<Eigen::Index>(b * L);
      for (std::size_t a = 0; a < A; ++a) {
        const auto c0 = static_cast<Eigen::Index>(a) * dh;
        const Matrix& prob = bc.probs[b * A + a];
        const auto d_out = dconcat.block(r0, c0, Li, dh);
        const Matrix dprob = d_out * bc.v.block(r0, c0, Li, dh).transpose();
        dv.block(r0, c0, Li, dh) = prob.transpose() * d_out;
        Matrix ds = prob.array() *
                    (dprob.array().colwise() - (dprob.array() * prob.array()).rowwise().sum());
        ds *= scale;
        dq.block(r0, c0, Li, dh) = ds * bc.k.block(r0, c0, Li, dh);
        dk.block(r0, c0, Li, dh) = ds.transpose() * bc.q.block(r0, c0, Li, dh);
      }
    }
    gb.wq += bc.h.transpose() * dq;
    gb.bq.row(0) += dq.colwise().sum();
    gb.wk += bc.h.transpose() * dk;
    gb.bk.row(0) += dk.colwise().sum();
    gb.wv += bc.h.transpose() * dv;
    gb.bv.row(0) += dv.colwise().sum();
    const Matrix dh_in = dq * bp.wq.transpose() + dk * bp.wk.transpose() + dv * bp.wv.transpose();
    dx = dmid + layer_norm_backward(dh_in, bp.ln1_gain, bc.ln1, gb.ln1_gain, gb.ln1_bias);
  }

  for (std::size_t b = 0; b < c.batch; ++b) {
    for (std::size_t i = 0; i < L; ++i) {
      const auto r = static_cast<Eigen::Index>(b * L + i);
      g.token_embedding.row(c.ids[b * L + i]) += dx.row(r);
      g.positional_embedding.row(static_cast<Eigen::Index>(i)) += dx.row(r);
    }
  }
  return out;
}

}  // namespace olt
