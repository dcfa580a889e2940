#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "olt/serialization.hpp"
#include "olt/tmm.hpp"

namespace olt {

struct SamplerConfig {
  std::size_t max_layers = kDefaultMaxLayers;
  // Relative weight of N = 1 .. max_layers layers. Empty means w_N = N.
  std::vector<double> layer_count_weights;
  std::uint64_t seed = 0;
  std::size_t count = 0;
  // Resample structures already emitted in this run.
  bool dedup = false;

  std::vector<double> resolved_weights() const;
  void validate() const;
};

// Layer count from the weights, then uniform material and uniform bin per layer.
Structure sample_structure(const SamplerConfig& cfg, const Vocabulary& vocab, std::mt19937_64& rng);

struct DatasetRecord {
  TokenSeq tokens;
  std::vector<std::string> materials;
  std::vector<double> thicknesses_nm;
  std::vector<double> R;
  std::vector<double> T;

  // [R..., T...]
  std::vector<double> target() const;
};

struct DatasetManifest {
  std::string data_file;  // file name, resolved next to the manifest
  std::size_t record_count = 0;
  std::uint64_t seed = 0;
  SamplerConfig sampler;
  WavelengthGrid grid;
  AmbientConfig ambient;
  std::string vocab_manifest;  // Vocabulary::manifest_json()
  std::string materials_hash;  // sha256 of MaterialDb::serialize()
  std::string config_hash;
  std::string sha256;          // of the data file
  std::string split_role;      // "", "train" or "validation"
  std::string parent_sha256;

  std::string to_json() const;
  static DatasetManifest from_json(const std::string& text);
  Vocabulary vocab() const { return Vocabulary::from_manifest_json(vocab_manifest); }
};

std::filesystem::path manifest_path_for(const std::filesystem::path& data_path);

std::string record_to_json_line(const DatasetRecord& rec);
DatasetRecord record_from_json_line(const std::string& line);

// Writes cfg.count records as JSON Lines to out_path and the manifest to
// manifest_path_for(out_path). Labels come from simulate_batch.
DatasetManifest generate_dataset(const MaterialDb& db, const Vocabulary& vocab,
                                 const SamplerConfig& cfg, const WavelengthGrid& grid,
                                 const AmbientConfig& amb, const std::filesystem::path& out_path);

struct Dataset {
  DatasetManifest manifest;
  std::vector<DatasetRecord> records;
};

// Reads manifest + data and verifies the data checksum and record count
// (kManifestMismatch on failure).
Dataset read_dataset(const std::filesystem::path& data_path);
DatasetManifest read_manifest(const std::filesystem::path& data_path);

// Assigns record i to validation iff a hash of (i, salt) falls below
// val_fraction. The two outputs are disjoint and together hold every record.
struct SplitResult {
  DatasetManifest train;
  DatasetManifest validation;
};
SplitResult split_dataset(const std::filesystem::path& data_path, double val_fraction,
                          std::uint64_t salt, const std::filesystem::path& train_out,
                          const std::filesystem::path& val_out);
bool is_validation_record(std::size_t index, double val_fraction, std::uint64_t salt);

struct ValidationReport {
  std::size_t record_count = 0;
  std::size_t checked = 0;
  std::size_t mismatches = 0;
  double max_abs_error = 0.0;
  bool checksum_ok = false;
  bool passed() const { return checksum_ok && mismatches == 0; }
};

// Re-simulates a seeded sample (at least one record when non-empty) and
// compares against the stored labels to `tolerance`.
ValidationReport validate_dataset(const MaterialDb& db, const std::filesystem::path& data_path,
                                  double sample_fraction = 0.01, std::uint64_t seed = 0,
                                  double tolerance = 1e-12);

}  // namespace olt
