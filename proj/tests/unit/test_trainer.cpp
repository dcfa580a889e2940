#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "olt/checksum.hpp"
#include "olt/datagen.hpp"
#include "olt/evalbench.hpp"
#include "olt/trainer.hpp"
#include "support.hpp"

namespace olt {
namespace {

using testing::error_code_of;
using testing::TempDir;

struct Fixture {
  MaterialDb db = toy_material_db();
  Vocabulary vocab = Vocabulary::from_db(db, {50, 100, 150, 200, 250, 300, 350, 400, 450, 500});
  std::vector<TokenSeq> seqs;
  Matrix targets;

  explicit Fixture(std::size_t n, std::uint64_t seed = 1) {
    SamplerConfig cfg;
    cfg.max_layers = 4;
    cfg.seed = seed;
    std::mt19937_64 rng(seed);
    std::vector<Structure> structures;
    for (std::size_t i = 0; i < n; ++i) structures.push_back(sample_structure(cfg, vocab, rng));
    const auto spectra = simulate_batch(db, structures, WavelengthGrid{}, AmbientConfig{});
    targets.resize(static_cast<Eigen::Index>(n), 142);
    for (std::size_t i = 0; i < n; ++i) {
      seqs.push_back(tokenize(vocab, structures[i], 4));
      const auto flat = spectra[i].flattened();
      for (std::size_t j = 0; j < flat.size(); ++j) targets(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = flat[j];
    }
  }
};

ModelConfig model(const Fixture& f) { return ModelConfig::tiny(f.vocab.total_size()); }

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.batch_size = 0;
  EXPECT_EQ(error_code_of([&] { c.validate(); }), ErrorCode::kConfigError);
  c = TrainConfig{};
  c.learning_rate = -1.0;
  EXPECT_EQ(error_code_of([&] { c.validate(); }), ErrorCode::kConfigError);
  const auto parsed = TrainConfig::from_json(R"({"epochs": 3, "batch_size": 8, "learning_rate": 0.001})");
  EXPECT_EQ(parsed.epochs, 3u);
  EXPECT_EQ(parsed.batch_size, 8u);
  EXPECT_EQ(parsed.learning_rate, 0.001);
}

TEST(Adam, ZeroLearningRateLeavesParamsUnchanged) {
  Fixture f(16);
  const auto cfg = model(f);
  TrainConfig tc;
  tc.learning_rate = 0.0;
  tc.batch_size = 8;
  tc.epochs = 2;
  const auto r = train_in_memory(f.seqs, f.targets, {}, Matrix{}, cfg, tc, f.vocab.manifest_json());
  EXPECT_EQ(r.steps, 4u);
  EXPECT_TRUE(r.params == init_params(cfg));
}

TEST(Adam, FirstStepMovesEachWeightByAboutLr) {
  Fixture f(8);
  const auto cfg = model(f);
  TrainConfig tc;
  tc.grad_clip_norm = 0.0;
  auto params = init_params(cfg);
  const auto before = params;
  auto lg = backward(params, cfg, f.seqs, f.targets);
  AdamOptimizer adam(cfg, tc);
  adam.step(params, lg.gradients);
  EXPECT_EQ(adam.steps_taken(), 1u);
  // Bias-corrected first Adam step is lr * g / (|g| + eps) per coordinate.
  const double d = std::abs(params.head_b.back()(0, 0) - before.head_b.back()(0, 0));
  EXPECT_NEAR(d, tc.learning_rate, 1e-6);
}

TEST(Adam, ClippingBoundsGlobalNorm) {
  Fixture f(8);
  const auto cfg = model(f);
  auto params = init_params(cfg);
  auto lg = backward(params, cfg, f.seqs, f.targets);
  lg.gradients.for_each([](const std::string&, Matrix& m) { m *= 1e3; });
  const double raw = global_norm(lg.gradients);
  EXPECT_GT(raw, 1.0);
  TrainConfig tc;
  AdamOptimizer adam(cfg, tc);
  const double reported = adam.step(params, lg.gradients);
  EXPECT_NEAR(reported, raw, 1e-9 * raw);
}

TEST(Train, DeterministicFirstHundredSteps) {
  Fixture f(128);
  const auto cfg = model(f);
  TrainConfig tc;
  tc.batch_size = 16;
  tc.epochs = 0;
  tc.max_steps = 100;
  const auto a = train_in_memory(f.seqs, f.targets, {}, Matrix{}, cfg, tc, f.vocab.manifest_json());
  const auto b = train_in_memory(f.seqs, f.targets, {}, Matrix{}, cfg, tc, f.vocab.manifest_json());
  ASSERT_EQ(a.log.size(), 100u);
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].mse, b.log[i].mse);
  EXPECT_TRUE(a.params == b.params);
  tc.seed = 1;
  const auto c = train_in_memory(f.seqs, f.targets, {}, Matrix{}, cfg, tc, f.vocab.manifest_json());
  EXPECT_FALSE(a.params == c.params);
}

TEST(Train, OverfitsSmallSet) {
  Fixture f(32, 5);
  const auto cfg = model(f);
  TrainConfig tc;
  tc.batch_size = 32;
  tc.learning_rate = 1e-3;
  tc.epochs = 0;
  tc.max_steps = 2000;
  tc.eval_every = 100;
  auto r = train_in_memory(f.seqs, f.targets, f.seqs, f.targets, cfg, tc, f.vocab.manifest_json());
  EXPECT_LT(r.best_val_mse, 1e-4);
}

TEST(Train, NonFiniteLossIsReported) {
  Fixture f(8);
  Matrix targets = f.targets;
  targets(3, 7) = std::numeric_limits<double>::quiet_NaN();
  TrainConfig tc;
  tc.batch_size = 8;
  EXPECT_EQ(error_code_of([&] {
              train_in_memory(f.seqs, targets, {}, Matrix{}, model(f), tc, f.vocab.manifest_json());
            }),
            ErrorCode::kNonFiniteLoss);
}

TEST(Train, WritesCheckpointsAndMetrics) {
  TempDir dir;
  Fixture f(40);
  const auto cfg = model(f);
  TrainConfig tc;
  tc.batch_size = 10;
  tc.epochs = 2;
  tc.checkpoint_dir = dir.path();
  const auto r = train_in_memory(f.seqs, f.targets, f.seqs, f.targets, cfg, tc, f.vocab.manifest_json());
  EXPECT_EQ(r.steps, 8u);
  const auto final_ck = load_checkpoint(r.final_checkpoint, f.vocab.manifest_json());
  EXPECT_TRUE(final_ck.params == r.params);
  EXPECT_TRUE(std::filesystem::exists(r.best_checkpoint));
  const auto csv = read_file(dir / "metrics.csv");
  EXPECT_EQ(csv, metrics_csv(r.log));
  std::size_t val_rows = 0;
  for (const auto& e : r.log) val_rows += e.split == "validation";
  EXPECT_EQ(val_rows, 2u);
  EXPECT_DOUBLE_EQ(r.final_val_mse, evaluate_mse(r.params, cfg, f.seqs, f.targets));
}

TEST(Train, RejectsMismatchedDatasets) {
  TempDir dir;
  const auto db = toy_material_db();
  const Vocabulary vocab = Vocabulary::from_db(db, {50, 100});
  SamplerConfig sc;
  sc.max_layers = 3;
  sc.count = 20;
  generate_dataset(db, vocab, sc, {}, {}, dir / "a.jsonl");
  generate_dataset(db, Vocabulary::from_db(db, {50, 100, 150}), sc, {}, {}, dir / "b.jsonl");
  auto cfg = ModelConfig::tiny(vocab.total_size(), 142, 3);
  TrainConfig tc;
  tc.max_steps = 1;
  EXPECT_EQ(error_code_of([&] { train(dir / "a.jsonl", dir / "b.jsonl", cfg, tc); }),
            ErrorCode::kManifestMismatch);
  cfg.vocab_size += 1;
  EXPECT_EQ(error_code_of([&] { train(dir / "a.jsonl", dir / "a.jsonl", cfg, tc); }),
            ErrorCode::kManifestMismatch);
  cfg.vocab_size -= 1;
  EXPECT_NO_THROW(train(dir / "a.jsonl", dir / "a.jsonl", cfg, tc));
}

}  // namespace
}  // namespace olt
