#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "olt/surrogate.hpp"

namespace olt {

struct TrainConfig {
  std::size_t epochs = 1;
  std::size_t batch_size = 64;
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Global gradient-norm clip; <= 0 disables clipping.
  double grad_clip_norm = 1.0;
  std::uint64_t seed = 0;
  // Validation cadence in optimizer steps; 0 evaluates at the end of every epoch.
  std::size_t eval_every = 0;
  // Stop after this many optimizer steps (0: run all epochs).
  std::size_t max_steps = 0;
  std::filesystem::path checkpoint_dir;

  void validate() const;
  static TrainConfig from_json(const std::string& text);
};

class AdamOptimizer {
 public:
  AdamOptimizer(const ModelConfig& cfg, const TrainConfig& train_cfg);

  // Clips `grads` in place to the configured global norm, then applies one
  // bias-corrected Adam update. Returns the pre-clip gradient norm.
  double step(ModelParams& params, ModelParams& grads);
  std::size_t steps_taken() const noexcept { return t_; }

 private:
  TrainConfig cfg_;
  ModelParams m_;
  ModelParams v_;
  std::size_t t_ = 0;
};

double global_norm(const ModelParams& grads);

struct LogEntry {
  std::size_t step;
  std::string split;  // "train" or "validation"
  double mse;
};

struct TrainResult {
  ModelParams params;
  std::vector<LogEntry> log;
  double final_val_mse = 0.0;
  double best_val_mse = 0.0;
  std::size_t steps = 0;
  std::filesystem::path final_checkpoint;
  std::filesystem::path best_checkpoint;
};

// Training over in-memory data. Validation MSE is computed with
// evaluate_mse (clamped predictions). Checkpoints and metrics.csv are written
// only when train_cfg.checkpoint_dir is set.
TrainResult train_in_memory(const std::vector<TokenSeq>& train_seqs, const Matrix& train_targets,
                            const std::vector<TokenSeq>& val_seqs, const Matrix& val_targets,
                            const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                            const std::string& vocab_manifest);

// Reads and cross-checks both datasets against each other and the model config
// (kManifestMismatch), then trains.
TrainResult train(const std::filesystem::path& dataset_path, const std::filesystem::path& val_path,
                  const ModelConfig& model_cfg, const TrainConfig& train_cfg);

std::string metrics_csv(const std::vector<LogEntry>& log);

}  // namespace olt
