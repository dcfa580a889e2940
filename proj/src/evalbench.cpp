#include "olt/evalbench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <json.hpp>
#include <random>
#include <thread>

#include "olt/checksum.hpp"
#include "olt/error.hpp"

namespace olt {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Vocabulary checkpoint_vocab(const Checkpoint& ck, const MaterialDb& db) {
  Vocabulary vocab = Vocabulary::from_manifest_json(ck.vocab_manifest);
  if (vocab.material_names() != db.names()) {
    raise(ErrorCode::kManifestMismatch, "material database does not match the checkpoint vocabulary");
  }
  if (vocab.total_size() != ck.config.vocab_size) {
    raise(ErrorCode::kManifestMismatch, "checkpoint vocabulary size differs from its model config");
  }
  return vocab;
}

}  // namespace

Matrix predict_clamped(const ModelParams& params, const ModelConfig& cfg,
                       const std::vector<TokenSeq>& seqs) {
  return predict(params, cfg, seqs, kEvalBatchSize).cwiseMax(0.0).cwiseMin(1.0);
}

double evaluate_mse(const ModelParams& params, const ModelConfig& cfg,
                    const std::vector<TokenSeq>& seqs, const Matrix& targets) {
  if (static_cast<std::size_t>(targets.rows()) != seqs.size() ||
      static_cast<std::size_t>(targets.cols()) != cfg.output_dim) {
    raise(ErrorCode::kShapeMismatch, "targets do not match sequences and model output");
  }
  if (seqs.empty()) raise(ErrorCode::kShapeMismatch, "no records to evaluate");
  const Matrix pred = predict_clamped(params, cfg, seqs);
  double total = 0.0;
  for (Eigen::Index r = 0; r < pred.rows(); ++r) {
    total += (pred.row(r) - targets.row(r)).squaredNorm() / static_cast<double>(pred.cols());
  }
  return total / static_cast<double>(pred.rows());
}

Matrix targets_of(const std::vector<DatasetRecord>& records) {
  if (records.empty()) return {};
  const auto cols = static_cast<Eigen::Index>(records.front().R.size() + records.front().T.size());
  Matrix out(static_cast<Eigen::Index>(records.size()), cols);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto t = records[i].target();
    if (static_cast<Eigen::Index>(t.size()) != cols) {
      raise(ErrorCode::kShapeMismatch, "record " + std::to_string(i) + " has a different spectrum length");
    }
    out.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(t.data(), cols);
  }
  return out;
}

std::vector<TokenSeq> tokens_of(const std::vector<DatasetRecord>& records) {
  std::vector<TokenSeq> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.tokens);
  return out;
}

double mean_predictor_mse(const Matrix& train_targets, const Matrix& eval_targets) {
  if (train_targets.rows() == 0 || eval_targets.rows() == 0 ||
      train_targets.cols() != eval_targets.cols()) {
    raise(ErrorCode::kShapeMismatch, "baseline needs non-empty targets of equal width");
  }
  const Eigen::RowVectorXd mean = train_targets.colwise().mean();
  return (eval_targets.rowwise() - mean).squaredNorm() / static_cast<double>(eval_targets.size());
}

double eval_mse(const std::filesystem::path& checkpoint, const std::filesystem::path& dataset) {
  const Dataset ds = read_dataset(dataset);
  const Checkpoint ck = load_checkpoint(checkpoint, ds.manifest.vocab_manifest);
  return evaluate_mse(ck.params, ck.config, tokens_of(ds.records), targets_of(ds.records));
}

std::vector<FamilySpec> read_family_specs(const std::string& json_text) {
  try {
    const auto j = nlohmann::json::parse(json_text);
    std::vector<FamilySpec> out;
    for (const auto& f : j.at("families")) {
      FamilySpec spec;
      spec.name = f.at("name").get<std::string>();
      spec.materials = f.at("materials").get<std::vector<std::string>>();
      for (const auto& r : f.at("thickness_ranges_nm")) {
        spec.thickness_ranges_nm.emplace_back(r.at(0).get<double>(), r.at(1).get<double>());
      }
      spec.sample_count = f.value("sample_count", std::size_t{1000});
      out.push_back(std::move(spec));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::kConfigError, std::string("bad family spec file: ") + e.what());
  }
}

std::vector<FamilyResult> eval_families(const Checkpoint& checkpoint, const MaterialDb& db,
                                        const std::vector<FamilySpec>& families,
                                        std::size_t per_family_count, std::uint64_t seed,
                                        const WavelengthGrid& grid, const AmbientConfig& amb) {
  const Vocabulary vocab = checkpoint_vocab(checkpoint, db);
  const std::size_t max_layers = checkpoint.config.max_seq_len - 2;
  std::mt19937_64 rng(seed);
  std::vector<FamilyResult> out;
  for (const auto& fam : families) {
    const std::size_t count = per_family_count ? per_family_count : fam.sample_count;
    if (count == 0) raise(ErrorCode::kConfigError, "family " + fam.name + " has no samples");
    if (fam.materials.empty() || fam.materials.size() > max_layers) {
      raise(ErrorCode::kConfigError, "family " + fam.name + " layer count outside [1, " +
                                         std::to_string(max_layers) + "]");
    }
    if (fam.thickness_ranges_nm.size() != fam.materials.size()) {
      raise(ErrorCode::kConfigError, "family " + fam.name + " needs one thickness range per layer");
    }
    std::vector<std::size_t> material_ids;
    std::vector<std::vector<double>> choices;
    for (std::size_t i = 0; i < fam.materials.size(); ++i) {
      if (!db.contains(fam.materials[i])) {
        raise(ErrorCode::kConfigError, "family " + fam.name + ": unknown material " + fam.materials[i]);
      }
      material_ids.push_back(db.id_of(fam.materials[i]));
      const auto [lo, hi] = fam.thickness_ranges_nm[i];
      std::vector<double> bins;
      for (double b : vocab.thickness_bins_nm()) {
        if (b >= lo && b <= hi) bins.push_back(b);
      }
      if (bins.empty()) {
        raise(ErrorCode::kConfigError, "family " + fam.name + ": layer " + std::to_string(i) +
                                           " range holds no thickness bin");
      }
      choices.push_back(std::move(bins));
    }

    std::vector<Structure> structures(count);
    std::vector<TokenSeq> seqs(count);
    for (auto& s : structures) {
      for (std::size_t i = 0; i < material_ids.size(); ++i) {
        std::uniform_int_distribution<std::size_t> pick(0, choices[i].size() - 1);
        s.layers.push_back({material_ids[i], choices[i][pick(rng)]});
      }
    }
    const auto spectra = simulate_batch(db, structures, grid, amb);
    Matrix targets(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(2 * grid.count()));
    for (std::size_t n = 0; n < count; ++n) {
      seqs[n] = tokenize(vocab, structures[n], max_layers);
      const auto flat = spectra[n].flattened();
      targets.row(static_cast<Eigen::Index>(n)) =
          Eigen::Map<const Eigen::RowVectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
    }
    out.push_back({fam.name, fam.materials.size(), count,
                   evaluate_mse(checkpoint.params, checkpoint.config, seqs, targets)});
  }
  return out;
}

std::string format_family_table(const std::vector<FamilyResult>& rows) {
  std::size_t width = std::string("Description of Multilayer Structure").size();
  for (const auto& r : rows) width = std::max(width, r.name.size());
  std::string out;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-*s  %6s  %8s  %12s\n", static_cast<int>(width),
                "Description of Multilayer Structure", "Layers", "Samples", "MSE");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %6zu  %8zu  %12.4e\n", static_cast<int>(width), r.name.c_str(),
                  r.layers, r.samples, r.mse);
    out += buf;
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) raise(ErrorCode::kConfigError, "median of no values");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string BenchReport::to_json() const {
  nlohmann::json j{
      {"single_oracle_s", single_oracle_s},
      {"single_model_s", single_model_s},
      {"batch_model_s_per_item", batch_model_s_per_item},
      {"speedup_single", speedup_single},
      {"speedup_batch", speedup_batch},
      {"mse_global", mse_global},
      {"mse_definition", "mean over records of the mean squared error over all 2*grid spectrum values"},
      {"n_single", n_single},
      {"batch_size", batch_size},
      {"repetitions", repetitions},
      {"timing", "median over repetitions, one warm-up pass excluded"},
      {"hardware_note", hardware_note},
      {"samples_s", {{"oracle", oracle_samples}, {"single", single_samples}, {"batch", batch_samples}}},
      {"reference",
       {{"single_oracle_s", ReferenceTimings::kSingleOracleSeconds},
        {"single_model_s", ReferenceTimings::kSingleModelSeconds},
        {"batch_model_s_per_item", ReferenceTimings::kBatchModelSecondsPerItem},
        {"speedup_single", ReferenceTimings::kSpeedupSingle},
        {"speedup_batch", ReferenceTimings::kSpeedupBatch},
        {"mse", ReferenceTimings::kMse},
        {"batch_size", ReferenceTimings::kBatchSize},
        {"note", "full-size model on GPU vs single-CPU oracle; hardware dependent, not asserted"}}}};
  return j.dump(2);
}

std::string BenchReport::to_table() const {
  char buf[1024];
  std::snprintf(buf, sizeof buf,
                "%-24s %14s %14s %10s\n"
                "%-24s %14.6e %14.6e %10.2f\n"
                "%-24s %14s %14.6e %10.2f\n"
                "%-24s %14s %14.6e %10s\n"
                "reference (not asserted): single 0.057 s / 0.010 s (x5.7), batch 15 us (x3800), MSE 5.7e-5\n"
                "hardware: %s\n",
                "Attribute", "Oracle", "Surrogate", "Speedup", "Single simulation (s)", single_oracle_s,
                single_model_s, speedup_single, "Batch simulation (s)", "-", batch_model_s_per_item,
                speedup_batch, "MSE", "-", mse_global, "-", hardware_note.c_str());
  return buf;
}

BenchReport bench(const Checkpoint& checkpoint, const MaterialDb& db, std::size_t n_single,
                  std::size_t batch_size, std::size_t repetitions, std::uint64_t seed,
                  const WavelengthGrid& grid, const AmbientConfig& amb) {
  if (n_single == 0 || batch_size == 0 || repetitions == 0) {
    raise(ErrorCode::kConfigError, "n_single, batch_size and repetitions must be >= 1");
  }
  const Vocabulary vocab = checkpoint_vocab(checkpoint, db);
  const auto& cfg = checkpoint.config;
  const auto& params = checkpoint.params;

  SamplerConfig sampler;
  sampler.max_layers = cfg.max_seq_len - 2;
  std::mt19937_64 rng(seed);
  const std::size_t pool = std::max(n_single, batch_size);
  std::vector<Structure> structures;
  std::vector<TokenSeq> seqs;
  for (std::size_t i = 0; i < pool; ++i) {
    structures.push_back(sample_structure(sampler, vocab, rng));
    seqs.push_back(tokenize(vocab, structures.back(), sampler.max_layers));
  }
  const std::vector<TokenSeq> batch(seqs.begin(), seqs.begin() + static_cast<std::ptrdiff_t>(batch_size));

  BenchReport report;
  report.n_single = n_single;
  report.batch_size = batch_size;
  report.repetitions = repetitions;

  auto time_oracle = [&] {
    const auto t0 = Clock::now();
    for (std::size_t i = 0; i < n_single; ++i) (void)simulate(db, structures[i], grid, amb);
    return seconds_since(t0) / static_cast<double>(n_single);
  };
  auto time_single = [&] {
    const auto t0 = Clock::now();
    for (std::size_t i = 0; i < n_single; ++i) (void)forward(params, cfg, {seqs[i]});
    return seconds_since(t0) / static_cast<double>(n_single);
  };
  auto time_batch = [&] {
    const auto t0 = Clock::now();
    (void)predict(params, cfg, batch, batch_size);
    return seconds_since(t0) / static_cast<double>(batch_size);
  };

  (void)time_oracle();
  (void)time_single();
  (void)time_batch();
  for (std::size_t r = 0; r < repetitions; ++r) {
    report.oracle_samples.push_back(time_oracle());
    report.single_samples.push_back(time_single());
    report.batch_samples.push_back(time_batch());
  }
  report.single_oracle_s = median(report.oracle_samples);
  report.single_model_s = median(report.single_samples);
  report.batch_model_s_per_item = median(report.batch_samples);
  report.speedup_single = report.single_oracle_s / report.single_model_s;
  report.speedup_batch = report.single_oracle_s / report.batch_model_s_per_item;

  const std::vector<Structure> eval_structures(structures.begin(),
                                               structures.begin() + static_cast<std::ptrdiff_t>(n_single));
  const auto spectra = simulate_batch(db, eval_structures, grid, amb);
  Matrix targets(static_cast<Eigen::Index>(n_single), static_cast<Eigen::Index>(2 * grid.count()));
  for (std::size_t i = 0; i < n_single; ++i) {
    const auto flat = spectra[i].flattened();
    targets.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
  }
  const std::vector<TokenSeq> eval_seqs(seqs.begin(), seqs.begin() + static_cast<std::ptrdiff_t>(n_single));
  report.mse_global = evaluate_mse(params, cfg, eval_seqs, targets);

  report.hardware_note = "CPU, " + std::to_string(std::thread::hardware_concurrency()) +
                         " hardware threads, double precision, oracle single-threaded";
  return report;
}

}  // namespace olt
