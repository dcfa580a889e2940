#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "olt/checksum.hpp"
#include "olt/datagen.hpp"
#include "support.hpp"

namespace olt {
namespace {

using testing::error_code_of;
using testing::TempDir;

SamplerConfig small_cfg(std::size_t count, std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.max_layers = 5;
  cfg.count = count;
  cfg.seed = seed;
  return cfg;
}

TEST(SampleStructure, DegenerateWeightsGiveOneLayer) {
  const auto vocab = Vocabulary::from_db(toy_material_db());
  SamplerConfig cfg;
  cfg.layer_count_weights.assign(cfg.max_layers, 0.0);
  cfg.layer_count_weights[0] = 1.0;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 500; ++i) EXPECT_EQ(sample_structure(cfg, vocab, rng).layers.size(), 1u);
}

TEST(SampleStructure, LinearLayerCountLaw) {
  const auto vocab = Vocabulary::from_db(toy_material_db());
  SamplerConfig cfg;  // max_layers 20, w_N = N
  std::mt19937_64 rng(2);
  const int draws = 100000;
  std::vector<double> counts(cfg.max_layers, 0.0);
  for (int i = 0; i < draws; ++i) counts[sample_structure(cfg, vocab, rng).layers.size() - 1] += 1.0;

  // Chi-square goodness of fit against p_N = N / 210 (19 dof; 0.999 quantile 43.82).
  double chi2 = 0.0;
  for (std::size_t n = 1; n <= 20; ++n) {
    const double expected = draws * static_cast<double>(n) / 210.0;
    chi2 += (counts[n - 1] - expected) * (counts[n - 1] - expected) / expected;
  }
  EXPECT_LT(chi2, 43.82);

  // P(20)/P(1) ~ 20 within 3 sigma (delta method on the two multinomial cells).
  const double ratio = counts[19] / counts[0];
  const double sigma = ratio * std::sqrt(1.0 / counts[19] + 1.0 / counts[0]);
  EXPECT_NEAR(ratio, 20.0, 3.0 * sigma);
}

TEST(SampleStructure, UniformMaterialsAndBinsOnGrid) {
  const auto vocab = Vocabulary::from_db(toy_material_db());
  SamplerConfig cfg;
  std::mt19937_64 rng(3);
  std::vector<int> per_material(vocab.num_materials(), 0);
  std::set<double> bins(vocab.thickness_bins_nm().begin(), vocab.thickness_bins_nm().end());
  for (int i = 0; i < 2000; ++i) {
    for (const auto& l : sample_structure(cfg, vocab, rng).layers) {
      ++per_material[l.material_id];
      EXPECT_TRUE(bins.count(l.thickness_nm));
    }
  }
  const int total = per_material[0] + per_material[1] + per_material[2];
  for (int c : per_material) EXPECT_NEAR(static_cast<double>(c) / total, 1.0 / 3.0, 0.02);
}

TEST(SampleStructure, SeededDeterminism) {
  const auto vocab = Vocabulary::from_db(toy_material_db());
  SamplerConfig cfg;
  std::mt19937_64 a(99), b(99);
  for (int i = 0; i < 200; ++i) EXPECT_EQ(sample_structure(cfg, vocab, a), sample_structure(cfg, vocab, b));
}

TEST(SamplerConfig, Validation) {
  SamplerConfig cfg;
  cfg.layer_count_weights.assign(cfg.max_layers, 0.0);
  EXPECT_EQ(error_code_of([&] { cfg.validate(); }), ErrorCode::kConfigError);
  cfg.layer_count_weights = {1.0, -1.0};
  EXPECT_EQ(error_code_of([&] { cfg.validate(); }), ErrorCode::kConfigError);
}

TEST(GenerateDataset, EmptyDatasetHasValidManifest) {
  TempDir dir;
  const auto db = toy_material_db();
  const auto m = generate_dataset(db, Vocabulary::from_db(db), small_cfg(0, 1), {}, {}, dir / "d.jsonl");
  EXPECT_EQ(m.record_count, 0u);
  EXPECT_EQ(read_file(dir / "d.jsonl"), "");
  const auto ds = read_dataset(dir / "d.jsonl");
  EXPECT_TRUE(ds.records.empty());
  EXPECT_EQ(ds.manifest.sha256, sha256_hex(""));
}

TEST(GenerateDataset, ByteIdenticalAcrossRuns) {
  TempDir dir;
  const auto db = toy_material_db();
  const auto vocab = Vocabulary::from_db(db);
  generate_dataset(db, vocab, small_cfg(100, 7), {}, {}, dir / "a.jsonl");
  generate_dataset(db, vocab, small_cfg(100, 7), {}, {}, dir / "b.jsonl");
  EXPECT_EQ(read_file(dir / "a.jsonl"), read_file(dir / "b.jsonl"));
  generate_dataset(db, vocab, small_cfg(100, 8), {}, {}, dir / "c.jsonl");
  EXPECT_NE(read_file(dir / "a.jsonl"), read_file(dir / "c.jsonl"));
}

TEST(GenerateDataset, RecordsRoundTripAndReproduceLabels) {
  TempDir dir;
  const auto db = testing::mixed_material_db();
  const auto vocab = Vocabulary::from_db(db);
  const AmbientConfig amb;
  generate_dataset(db, vocab, small_cfg(200, 3), {}, amb, dir / "d.jsonl");
  const auto ds = read_dataset(dir / "d.jsonl");
  ASSERT_EQ(ds.records.size(), 200u);
  for (const auto& rec : ds.records) {
    const Structure s = detokenize(vocab, rec.tokens);
    ASSERT_EQ(s.layers.size(), rec.materials.size());
    for (std::size_t i = 0; i < s.layers.size(); ++i) {
      EXPECT_EQ(vocab.material_names()[s.layers[i].material_id], rec.materials[i]);
      EXPECT_EQ(s.layers[i].thickness_nm, rec.thicknesses_nm[i]);
    }
    const auto spec = simulate(db, s, WavelengthGrid{}, amb);
    for (std::size_t j = 0; j < spec.R.size(); ++j) {
      EXPECT_NEAR(rec.R[j], spec.R[j], 1e-12);
      EXPECT_NEAR(rec.T[j], spec.T[j], 1e-12);
    }
  }
}

TEST(GenerateDataset, DedupFlagRemovesRepeats) {
  TempDir dir;
  const auto db = toy_material_db();
  const Vocabulary vocab(db.names(), {10.0, 20.0});
  SamplerConfig cfg = small_cfg(40, 4);
  cfg.max_layers = 2;
  cfg.dedup = true;  // 6 + 36 = 42 distinct structures exist
  generate_dataset(db, vocab, cfg, {}, {}, dir / "d.jsonl");
  std::set<std::vector<TokenId>> seen;
  for (const auto& r : read_dataset(dir / "d.jsonl").records) EXPECT_TRUE(seen.insert(r.tokens.ids).second);
}

TEST(ReadDataset, DetectsTampering) {
  TempDir dir;
  const auto db = toy_material_db();
  generate_dataset(db, Vocabulary::from_db(db), small_cfg(10, 5), {}, {}, dir / "d.jsonl");
  auto text = read_file(dir / "d.jsonl");
  text[text.find("\"R\":[0.") + 7] ^= 1;
  write_file(dir / "d.jsonl", text);
  EXPECT_EQ(error_code_of([&] { read_dataset(dir / "d.jsonl"); }), ErrorCode::kManifestMismatch);
  const auto report = validate_dataset(db, dir / "d.jsonl", 1.0);
  EXPECT_FALSE(report.checksum_ok);
  EXPECT_FALSE(report.passed());
}

TEST(SplitDataset, DisjointAndComplete) {
  TempDir dir;
  const auto db = toy_material_db();
  generate_dataset(db, Vocabulary::from_db(db), small_cfg(500, 6), {}, {}, dir / "all.jsonl");
  const auto r = split_dataset(dir / "all.jsonl", 0.2, 17, dir / "train.jsonl", dir / "val.jsonl");
  EXPECT_EQ(r.train.record_count + r.validation.record_count, 500u);
  EXPECT_GT(r.validation.record_count, 60u);
  EXPECT_LT(r.validation.record_count, 140u);
  EXPECT_EQ(r.train.split_role, "train");

  const auto all = read_dataset(dir / "all.jsonl");
  const auto train = read_dataset(dir / "train.jsonl");
  const auto val = read_dataset(dir / "val.jsonl");
  std::size_t ti = 0, vi = 0;
  for (std::size_t i = 0; i < all.records.size(); ++i) {
    const auto line = record_to_json_line(all.records[i]);
    if (is_validation_record(i, 0.2, 17)) {
      EXPECT_EQ(record_to_json_line(val.records[vi++]), line);
    } else {
      EXPECT_EQ(record_to_json_line(train.records[ti++]), line);
    }
  }
  EXPECT_EQ(train.manifest.parent_sha256, all.manifest.sha256);
}

TEST(ValidateDataset, PassesOnCleanData) {
  TempDir dir;
  const auto db = testing::mixed_material_db();
  generate_dataset(db, Vocabulary::from_db(db), small_cfg(300, 9), {}, {}, dir / "d.jsonl");
  const auto r = validate_dataset(db, dir / "d.jsonl", 0.01, 1);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.checked, 3u);
  EXPECT_LE(r.max_abs_error, 1e-12);
  EXPECT_EQ(error_code_of([&] { validate_dataset(toy_material_db(), dir / "d.jsonl"); }),
            ErrorCode::kManifestMismatch);
}

TEST(ValidateDataset, FlagsWrongLabels) {
  TempDir dir;
  const auto db = toy_material_db();
  generate_dataset(db, Vocabulary::from_db(db), small_cfg(5, 2), {}, {}, dir / "d.jsonl");
  auto ds = read_dataset(dir / "d.jsonl");
  ds.records[2].R[10] += 1e-9;
  std::string text;
  for (const auto& r : ds.records) text += record_to_json_line(r) + "\n";
  write_file(dir / "d.jsonl", text);
  auto manifest = ds.manifest;
  manifest.sha256 = sha256_hex(text);
  write_file(manifest_path_for(dir / "d.jsonl"), manifest.to_json());
  const auto r = validate_dataset(db, dir / "d.jsonl", 1.0);
  EXPECT_TRUE(r.checksum_ok);
  EXPECT_EQ(r.mismatches, 1u);
}

}  // namespace
}  // namespace olt
