#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "olt/datagen.hpp"
#include "olt/surrogate.hpp"

namespace olt {

// Batch size used by every evaluation path so that identical inputs always
// produce identical numbers.
inline constexpr std::size_t kEvalBatchSize = 256;

// Model predictions clamped to [0, 1].
Matrix predict_clamped(const ModelParams& params, const ModelConfig& cfg,
                       const std::vector<TokenSeq>& seqs);

// Mean over records of the per-record mean squared error of clamped
// predictions.
double evaluate_mse(const ModelParams& params, const ModelConfig& cfg,
                    const std::vector<TokenSeq>& seqs, const Matrix& targets);

// Targets as a [records x 2*grid] matrix, and token sequences.
Matrix targets_of(const std::vector<DatasetRecord>& records);
std::vector<TokenSeq> tokens_of(const std::vector<DatasetRecord>& records);

// MSE on `eval_targets` of predicting the column means of `train_targets`.
double mean_predictor_mse(const Matrix& train_targets, const Matrix& eval_targets);

// Loads the checkpoint against the dataset's vocabulary manifest
// (kManifestMismatch otherwise) and evaluates.
double eval_mse(const std::filesystem::path& checkpoint, const std::filesystem::path& dataset);

struct FamilySpec {
  std::string name;
  std::vector<std::string> materials;  // front to back
  // Inclusive [lo, hi] nm per layer; thicknesses are drawn uniformly from the
  // vocabulary bins inside the range.
  std::vector<std::pair<double, double>> thickness_ranges_nm;
  std::size_t sample_count = 1000;
};

std::vector<FamilySpec> read_family_specs(const std::string& json_text);

struct FamilyResult {
  std::string name;
  std::size_t layers;
  std::size_t samples;
  double mse;
};

// Samples per_family_count structures per family (uniform over the bins in
// each layer's range), labels them with the oracle and reports the mean MSE.
// per_family_count = 0 uses each spec's own sample_count.
std::vector<FamilyResult> eval_families(const Checkpoint& checkpoint, const MaterialDb& db,
                                        const std::vector<FamilySpec>& families,
                                        std::size_t per_family_count, std::uint64_t seed,
                                        const WavelengthGrid& grid = {}, const AmbientConfig& amb = {});
std::string format_family_table(const std::vector<FamilyResult>& rows);

// Reference timings reported for the full-size model (GPU, 2.4 GHz CPU oracle).
// Recorded in reports; never asserted.
struct ReferenceTimings {
  static constexpr double kSingleOracleSeconds = 0.057;
  static constexpr double kSingleModelSeconds = 0.010;
  static constexpr double kBatchModelSecondsPerItem = 0.000015;
  static constexpr double kSpeedupSingle = 5.7;
  static constexpr double kSpeedupBatch = 3800.0;
  static constexpr double kMse = 0.000057;
  static constexpr std::size_t kBatchSize = 1000;
};

struct BenchReport {
  double single_oracle_s = 0.0;
  double single_model_s = 0.0;
  double batch_model_s_per_item = 0.0;
  double speedup_single = 0.0;
  double speedup_batch = 0.0;
  double mse_global = 0.0;
  std::size_t n_single = 0;
  std::size_t batch_size = 0;
  std::size_t repetitions = 0;
  std::string hardware_note;
  // Raw per-repetition timings, before taking medians.
  std::vector<double> oracle_samples, single_samples, batch_samples;

  std::string to_json() const;
  std::string to_table() const;
};

double median(std::vector<double> values);

// Times (median over repetitions, one excluded warm-up pass): single-structure
// oracle solves, single-sequence forward passes and one batched predict() call.
// mse_global is the clamped-prediction MSE over the n_single bench structures.
BenchReport bench(const Checkpoint& checkpoint, const MaterialDb& db, std::size_t n_single,
                  std::size_t batch_size, std::size_t repetitions, std::uint64_t seed = 0,
                  const WavelengthGrid& grid = {}, const AmbientConfig& amb = {});

}  // namespace olt
