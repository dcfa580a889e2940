#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "olt/checksum.hpp"
#include "olt/datagen.hpp"
#include "olt/evalbench.hpp"
#include "olt/trainer.hpp"
#include "support.hpp"

namespace olt {
namespace {

using testing::error_code_of;
using testing::TempDir;

const std::vector<double> kBins{50, 100, 150, 200, 250, 300, 350, 400, 450, 500};

struct Bench {
  TempDir dir;
  MaterialDb db = toy_material_db();
  Vocabulary vocab = Vocabulary::from_db(db, kBins);
  ModelConfig cfg = ModelConfig::tiny(vocab.total_size());
  Checkpoint ck;

  Bench() {
    ck.config = cfg;
    ck.params = init_params(cfg);
    ck.vocab_manifest = vocab.manifest_json();
  }

  Dataset dataset(std::size_t n, std::uint64_t seed) {
    SamplerConfig sc;
    sc.max_layers = 4;
    sc.count = n;
    sc.seed = seed;
    const auto path = dir / ("d" + std::to_string(seed) + ".jsonl");
    generate_dataset(db, vocab, sc, {}, {}, path);
    return read_dataset(path);
  }
};

TEST(EvaluateMse, ZeroForOwnPredictions) {
  Bench s;
  const auto ds = s.dataset(50, 1);
  const auto seqs = tokens_of(ds.records);
  const Matrix own = predict_clamped(s.ck.params, s.cfg, seqs);
  EXPECT_TRUE((own.array() >= 0.0).all() && (own.array() <= 1.0).all());
  EXPECT_EQ(evaluate_mse(s.ck.params, s.cfg, seqs, own), 0.0);
}

TEST(EvaluateMse, MatchesHandComputation) {
  Bench s;
  const auto ds = s.dataset(30, 2);
  const auto seqs = tokens_of(ds.records);
  const Matrix targets = targets_of(ds.records);
  ASSERT_EQ(targets.cols(), 142);
  const Matrix raw = forward(s.ck.params, s.cfg, seqs).predictions;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
      const double p = std::clamp(raw(i, j), 0.0, 1.0);
      row += (p - targets(i, j)) * (p - targets(i, j));
    }
    acc += row / static_cast<double>(raw.cols());
  }
  EXPECT_NEAR(evaluate_mse(s.ck.params, s.cfg, seqs, targets), acc / static_cast<double>(raw.rows()), 1e-15);
}

TEST(EvaluateMse, PermutationInvariant) {
  Bench s;
  const auto ds = s.dataset(300, 3);
  auto records = ds.records;
  const double a = evaluate_mse(s.ck.params, s.cfg, tokens_of(records), targets_of(records));
  std::mt19937_64 rng(4);
  std::shuffle(records.begin(), records.end(), rng);
  const double b = evaluate_mse(s.ck.params, s.cfg, tokens_of(records), targets_of(records));
  EXPECT_NEAR(a, b, 1e-14 * a);
}

TEST(MeanPredictor, ClosedForm) {
  Matrix train(2, 2), eval(1, 2);
  train << 0.0, 1.0, 1.0, 0.0;
  eval << 0.0, 0.5;
  EXPECT_DOUBLE_EQ(mean_predictor_mse(train, eval), (0.25 + 0.0) / 2.0);
}

TEST(EvalMse, EqualsTrainerFinalValidation) {
  Bench s;
  s.dataset(64, 5);
  s.dataset(32, 6);
  TrainConfig tc;
  tc.batch_size = 16;
  tc.epochs = 1;
  tc.checkpoint_dir = s.dir / "run";
  const auto r = train(s.dir / "d5.jsonl", s.dir / "d6.jsonl", s.cfg, tc);
  EXPECT_DOUBLE_EQ(eval_mse(r.final_checkpoint, s.dir / "d6.jsonl"), r.final_val_mse);

  SamplerConfig sc;
  sc.count = 4;
  generate_dataset(s.db, Vocabulary::from_db(s.db, {50, 100}), sc, {}, {}, s.dir / "other.jsonl");
  EXPECT_EQ(error_code_of([&] { eval_mse(r.final_checkpoint, s.dir / "other.jsonl"); }),
            ErrorCode::kManifestMismatch);
}

TEST(Families, ParseAndSingleThicknessFamily) {
  Bench s;
  const auto specs = read_family_specs(R"({"families": [
    {"name": "AR", "materials": ["toy_n1.5", "toy_n2.0"], "thickness_ranges_nm": [[100, 100], [200, 200]],
     "sample_count": 5},
    {"name": "absorber", "materials": ["toy_absorber"], "thickness_ranges_nm": [[50, 500]]}]})");
  ASSERT_EQ(specs.size(), 2u);
  EXPECT_EQ(specs[1].sample_count, 1000u);

  const auto rows = eval_families(s.ck, s.db, {specs[0]}, 0, 1);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].samples, 5u);
  EXPECT_EQ(rows[0].layers, 2u);
  // Every sample is the same structure, so the family MSE is that structure's MSE.
  const Structure st{{{1, 100.0}, {2, 200.0}}};
  const auto flat = simulate(s.db, st, WavelengthGrid{}, AmbientConfig{}).flattened();
  const Matrix target = Eigen::Map<const Eigen::RowVectorXd>(flat.data(), 142);
  const double expected = evaluate_mse(s.ck.params, s.cfg, {tokenize(s.vocab, st, 4)}, target);
  EXPECT_NEAR(rows[0].mse, expected, 1e-15);
  EXPECT_NE(format_family_table(rows).find("AR"), std::string::npos);
}

TEST(Families, DeterministicAndValidated) {
  Bench s;
  FamilySpec f{"mix", {"toy_absorber", "toy_n2.0"}, {{50, 300}, {100, 500}}, 20};
  const auto a = eval_families(s.ck, s.db, {f}, 0, 9);
  const auto b = eval_families(s.ck, s.db, {f}, 0, 9);
  EXPECT_EQ(a[0].mse, b[0].mse);
  auto empty = f;
  empty.sample_count = 0;
  EXPECT_EQ(error_code_of([&] { eval_families(s.ck, s.db, {empty}, 0, 1); }), ErrorCode::kConfigError);
  auto unknown = f;
  unknown.materials[0] = "unobtainium";
  EXPECT_EQ(error_code_of([&] { eval_families(s.ck, s.db, {unknown}, 0, 1); }), ErrorCode::kConfigError);
  auto no_bins = f;
  no_bins.thickness_ranges_nm[0] = {51, 52};
  EXPECT_EQ(error_code_of([&] { eval_families(s.ck, s.db, {no_bins}, 0, 1); }), ErrorCode::kConfigError);
}

TEST(Median, OddEvenAndEmpty) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
  EXPECT_EQ(error_code_of([] { median({}); }), ErrorCode::kConfigError);
}

TEST(BenchReport, Identities) {
  Bench s;
  const auto r = bench(s.ck, s.db, 5, 64, 3, 1);
  EXPECT_EQ(r.oracle_samples.size(), 3u);
  EXPECT_EQ(r.single_oracle_s, median(r.oracle_samples));
  EXPECT_EQ(r.single_model_s, median(r.single_samples));
  EXPECT_EQ(r.batch_model_s_per_item, median(r.batch_samples));
  EXPECT_DOUBLE_EQ(r.speedup_single, r.single_oracle_s / r.single_model_s);
  EXPECT_DOUBLE_EQ(r.speedup_batch, r.single_oracle_s / r.batch_model_s_per_item);
  EXPECT_GT(r.mse_global, 0.0);
  EXPECT_NE(r.to_json().find("\"reference\""), std::string::npos);
  EXPECT_NE(r.to_table().find("Speedup"), std::string::npos);
  EXPECT_EQ(error_code_of([&] { bench(s.ck, s.db, 0, 1, 1); }), ErrorCode::kConfigError);
}

}  // namespace
}  // namespace olt
