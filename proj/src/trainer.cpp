#include "olt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <random>

#include "olt/checksum.hpp"
#include "olt/datagen.hpp"
#include "olt/error.hpp"
#include "olt/evalbench.hpp"

namespace olt {

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { raise(ErrorCode::kConfigError, m); };
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) fail("Adam betas must be in [0, 1)");
  if (!(epsilon > 0.0)) fail("epsilon must be > 0");
  if (epochs == 0 && max_steps == 0) fail("need epochs >= 1 or max_steps >= 1");
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    TrainConfig c;
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.grad_clip_norm = j.value("grad_clip_norm", c.grad_clip_norm);
    c.seed = j.value("seed", c.seed);
    c.eval_every = j.value("eval_every", c.eval_every);
    c.max_steps = j.value("max_steps", c.max_steps);
    if (j.contains("checkpoint_dir")) c.checkpoint_dir = j["checkpoint_dir"].get<std::string>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::kConfigError, std::string("bad train config: ") + e.what());
  }
}

double global_norm(const ModelParams& grads) {
  double sq = 0.0;
  grads.for_each([&](const std::string&, const Matrix& m) { sq += m.squaredNorm(); });
  return std::sqrt(sq);
}

AdamOptimizer::AdamOptimizer(const ModelConfig& cfg, const TrainConfig& train_cfg)
    : cfg_(train_cfg), m_(ModelParams::zeros(cfg)), v_(ModelParams::zeros(cfg)) {}

double AdamOptimizer::step(ModelParams& params, ModelParams& grads) {
  const double norm = global_norm(grads);
  if (cfg_.grad_clip_norm > 0.0 && norm > cfg_.grad_clip_norm) {
    const double s = cfg_.grad_clip_norm / norm;
    grads.for_each([&](const std::string&, Matrix& g) { g *= s; });
  }
  ++t_;
  if (cfg_.learning_rate == 0.0) return norm;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  std::vector<Matrix*> p, g, m, v;
  params.for_each([&](const std::string&, Matrix& x) { p.push_back(&x); });
  grads.for_each([&](const std::string&, Matrix& x) { g.push_back(&x); });
  m_.for_each([&](const std::string&, Matrix& x) { m.push_back(&x); });
  v_.for_each([&](const std::string&, Matrix& x) { v.push_back(&x); });
  for (std::size_t i = 0; i < p.size(); ++i) {
    *m[i] = cfg_.beta1 * *m[i] + (1.0 - cfg_.beta1) * *g[i];
    *v[i] = cfg_.beta2 * *v[i] + (1.0 - cfg_.beta2) * g[i]->cwiseAbs2();
    p[i]->array() -= cfg_.learning_rate * (m[i]->array() / bc1) /
                     ((v[i]->array() / bc2).sqrt() + cfg_.epsilon);
  }
  return norm;
}

std::string metrics_csv(const std::vector<LogEntry>& log) {
  std::string out = "step,split,mse\n";
  for (const auto& e : log) out += std::to_string(e.step) + ',' + e.split + ',' + format_double(e.mse) + '\n';
  return out;
}

TrainResult train_in_memory(const std::vector<TokenSeq>& train_seqs, const Matrix& train_targets,
                            const std::vector<TokenSeq>& val_seqs, const Matrix& val_targets,
                            const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                            const std::string& vocab_manifest) {
  model_cfg.validate();
  train_cfg.validate();
  if (train_seqs.empty() || static_cast<std::size_t>(train_targets.rows()) != train_seqs.size() ||
      static_cast<std::size_t>(train_targets.cols()) != model_cfg.output_dim) {
    raise(ErrorCode::kShapeMismatch, "training targets do not match sequences or output_dim");
  }
  const bool have_val = !val_seqs.empty();
  const bool write = !train_cfg.checkpoint_dir.empty();
  if (write) std::filesystem::create_directories(train_cfg.checkpoint_dir);

  TrainResult result;
  result.params = init_params(model_cfg);
  AdamOptimizer adam(model_cfg, train_cfg);
  std::mt19937_64 rng(train_cfg.seed);
  std::vector<std::size_t> order(train_seqs.size());
  std::iota(order.begin(), order.end(), 0);
  result.best_val_mse = std::numeric_limits<double>::infinity();

  const auto metrics_path = train_cfg.checkpoint_dir / "metrics.csv";
  std::ofstream metrics;
  if (write) {
    metrics.open(metrics_path, std::ios::trunc);
    metrics << "step,split,mse\n";
  }
  auto log = [&](std::size_t step, const char* split, double mse) {
    result.log.push_back({step, split, mse});
    if (write) metrics << step << ',' << split << ',' << format_double(mse) << '\n';
  };
  auto validate_now = [&](std::size_t step) {
    if (!have_val) return;
    const double mse = evaluate_mse(result.params, model_cfg, val_seqs, val_targets);
    log(step, "validation", mse);
    result.final_val_mse = mse;
    if (mse < result.best_val_mse) {
      result.best_val_mse = mse;
      if (write) {
        result.best_checkpoint = train_cfg.checkpoint_dir / "best.ckpt";
        save_checkpoint(result.params, model_cfg, vocab_manifest, result.best_checkpoint);
      }
    }
  };

  std::size_t step = 0;
  bool done = false;
  std::size_t last_eval = 0;
  for (std::size_t epoch = 0; !done && (train_cfg.epochs == 0 || epoch < train_cfg.epochs); ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t lo = 0; lo < order.size(); lo += train_cfg.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + train_cfg.batch_size);
      std::vector<TokenSeq> batch;
      Matrix targets(static_cast<Eigen::Index>(hi - lo), train_targets.cols());
      for (std::size_t i = lo; i < hi; ++i) {
        batch.push_back(train_seqs[order[i]]);
        targets.row(static_cast<Eigen::Index>(i - lo)) = train_targets.row(static_cast<Eigen::Index>(order[i]));
      }
      auto [loss, grads] = backward(result.params, model_cfg, batch, targets);
      if (!std::isfinite(loss)) {
        raise(ErrorCode::kNonFiniteLoss, "loss " + format_double(loss) + " at step " + std::to_string(step) +
                                             " (epoch " + std::to_string(epoch) + ", gradient norm " +
                                             format_double(global_norm(grads)) + ")");
      }
      adam.step(result.params, grads);
      ++step;
      log(step, "train", loss);
      if (train_cfg.eval_every && step % train_cfg.eval_every == 0) {
        validate_now(step);
        last_eval = step;
      }
      if (train_cfg.max_steps && step >= train_cfg.max_steps) {
        done = true;
        break;
      }
    }
    if (!train_cfg.eval_every && last_eval != step) {
      validate_now(step);
      last_eval = step;
    }
  }
  if (last_eval != step) validate_now(step);
  result.steps = step;
  if (!have_val) result.best_val_mse = 0.0;
  if (write) {
    result.final_checkpoint = train_cfg.checkpoint_dir / "final.ckpt";
    save_checkpoint(result.params, model_cfg, vocab_manifest, result.final_checkpoint);
    metrics.close();
    if (!metrics) raise(ErrorCode::kIoError, "failed writing " + metrics_path.string());
  }
  return result;
}

TrainResult train(const std::filesystem::path& dataset_path, const std::filesystem::path& val_path,
                  const ModelConfig& model_cfg, const TrainConfig& train_cfg) {
  const Dataset train_ds = read_dataset(dataset_path);
  const Dataset val_ds = read_dataset(val_path);
  if (train_ds.manifest.vocab_manifest != val_ds.manifest.vocab_manifest) {
    raise(ErrorCode::kManifestMismatch, "training and validation vocabularies differ");
  }
  if (train_ds.manifest.materials_hash != val_ds.manifest.materials_hash ||
      !(train_ds.manifest.grid == val_ds.manifest.grid)) {
    raise(ErrorCode::kManifestMismatch, "training and validation labels come from different setups");
  }
  const Vocabulary vocab = train_ds.manifest.vocab();
  if (model_cfg.vocab_size != vocab.total_size()) {
    raise(ErrorCode::kManifestMismatch, "model vocab_size " + std::to_string(model_cfg.vocab_size) +
                                            " != dataset vocabulary " + std::to_string(vocab.total_size()));
  }
  if (model_cfg.output_dim != 2 * train_ds.manifest.grid.count()) {
    raise(ErrorCode::kManifestMismatch, "model output_dim does not match the dataset wavelength grid");
  }
  if (model_cfg.max_seq_len < train_ds.manifest.sampler.max_layers + 2 ||
      model_cfg.max_seq_len < val_ds.manifest.sampler.max_layers + 2) {
    raise(ErrorCode::kManifestMismatch, "model max_seq_len is shorter than the dataset sequences");
  }
  return train_in_memory(tokens_of(train_ds.records), targets_of(train_ds.records),
                         tokens_of(val_ds.records), targets_of(val_ds.records), model_cfg, train_cfg,
                         train_ds.manifest.vocab_manifest);
}

}  // namespace olt
