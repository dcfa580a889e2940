#include "olt/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <set>
#include <sstream>

#include "olt/checksum.hpp"
#include "olt/error.hpp"

namespace olt {
namespace {

using nlohmann::json;

constexpr std::size_t kLabelChunk = 4096;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::string json_array(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  out += ']';
  return out;
}

json sampler_json(const SamplerConfig& cfg) {
  return {{"max_layers", cfg.max_layers},
          {"layer_count_weights", cfg.resolved_weights()},
          {"seed", cfg.seed},
          {"count", cfg.count},
          {"dedup", cfg.dedup}};
}

json grid_json(const WavelengthGrid& g) {
  return {{"start_nm", g.start_nm()}, {"stop_nm", g.stop_nm()}, {"step_nm", g.step_nm()}};
}

json ambient_json(const AmbientConfig& a) {
  return {{"incident_index", {a.incident_index.real(), a.incident_index.imag()}},
          {"exit_index", {a.exit_index.real(), a.exit_index.imag()}}};
}

std::string config_hash(const SamplerConfig& cfg, const WavelengthGrid& grid, const AmbientConfig& amb) {
  json j{{"sampler", sampler_json(cfg)}, {"grid", grid_json(grid)}, {"ambient", ambient_json(amb)}};
  return sha256_hex(j.dump());
}

DatasetRecord make_record(const Vocabulary& vocab, const Structure& s, const Spectrum& spec,
                          std::size_t max_layers) {
  DatasetRecord rec;
  rec.tokens = tokenize(vocab, s, max_layers);
  for (const auto& l : s.layers) {
    rec.materials.push_back(vocab.material_names()[l.material_id]);
    rec.thicknesses_nm.push_back(l.thickness_nm);
  }
  rec.R = spec.R;
  rec.T = spec.T;
  return rec;
}

Structure structure_of(const Vocabulary& vocab, const MaterialDb& db, const DatasetRecord& rec,
                       std::size_t max_layers) {
  Structure s = detokenize(vocab, rec.tokens, max_layers);
  if (rec.materials.size() != s.layers.size() || rec.thicknesses_nm.size() != s.layers.size()) {
    raise(ErrorCode::kMalformedSequence, "record tokens and structure disagree in layer count");
  }
  for (std::size_t i = 0; i < s.layers.size(); ++i) {
    if (vocab.material_names()[s.layers[i].material_id] != rec.materials[i] ||
        s.layers[i].thickness_nm != rec.thicknesses_nm[i]) {
      raise(ErrorCode::kMalformedSequence, "record tokens do not round-trip to its structure");
    }
    s.layers[i].material_id = db.id_of(rec.materials[i]);
  }
  return s;
}

void write_manifest(const std::filesystem::path& data_path, const DatasetManifest& m) {
  write_file(manifest_path_for(data_path), m.to_json() + "\n");
}

}  // namespace

std::vector<double> SamplerConfig::resolved_weights() const {
  if (!layer_count_weights.empty()) return layer_count_weights;
  std::vector<double> w(max_layers);
  std::iota(w.begin(), w.end(), 1.0);
  return w;
}

void SamplerConfig::validate() const {
  if (max_layers == 0) raise(ErrorCode::kConfigError, "max_layers must be >= 1");
  const auto w = resolved_weights();
  if (w.size() != max_layers) {
    raise(ErrorCode::kConfigError, "layer_count_weights needs exactly max_layers entries");
  }
  double total = 0.0;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) raise(ErrorCode::kConfigError, "weights must be >= 0");
    total += x;
  }
  if (!(total > 0.0)) raise(ErrorCode::kConfigError, "weights must not all be zero");
}

Structure sample_structure(const SamplerConfig& cfg, const Vocabulary& vocab, std::mt19937_64& rng) {
  const auto w = cfg.resolved_weights();
  std::discrete_distribution<std::size_t> layer_count(w.begin(), w.end());
  std::uniform_int_distribution<std::size_t> material(0, vocab.num_materials() - 1);
  std::uniform_int_distribution<std::size_t> bin(0, vocab.bin_count() - 1);
  Structure s;
  const std::size_t n = layer_count(rng) + 1;
  s.layers.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t m = material(rng);
    s.layers.push_back({m, vocab.thickness_bins_nm()[bin(rng)]});
  }
  return s;
}

std::vector<double> DatasetRecord::target() const {
  std::vector<double> out;
  out.reserve(R.size() + T.size());
  out.insert(out.end(), R.begin(), R.end());
  out.insert(out.end(), T.begin(), T.end());
  return out;
}

std::string DatasetManifest::to_json() const {
  json j;
  j["format"] = "olt-dataset-v1";
  j["data_file"] = data_file;
  j["record_count"] = record_count;
  j["seed"] = seed;
  j["sampler"] = sampler_json(sampler);
  j["grid"] = grid_json(grid);
  j["ambient"] = ambient_json(ambient);
  j["vocab"] = json::parse(vocab_manifest);
  j["vocab_hash"] = sha256_hex(vocab_manifest);
  j["materials_hash"] = materials_hash;
  j["config_hash"] = config_hash;
  j["sha256"] = sha256;
  if (!split_role.empty()) {
    j["split"] = {{"role", split_role}, {"parent_sha256", parent_sha256}};
  }
  return j.dump(2);
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    if (j.at("format") != "olt-dataset-v1") raise(ErrorCode::kManifestMismatch, "unknown format");
    DatasetManifest m;
    m.data_file = j.at("data_file").get<std::string>();
    m.record_count = j.at("record_count").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto& s = j.at("sampler");
    m.sampler.max_layers = s.at("max_layers").get<std::size_t>();
    m.sampler.layer_count_weights = s.at("layer_count_weights").get<std::vector<double>>();
    m.sampler.seed = s.at("seed").get<std::uint64_t>();
    m.sampler.count = s.at("count").get<std::size_t>();
    m.sampler.dedup = s.at("dedup").get<bool>();
    const auto& g = j.at("grid");
    m.grid = WavelengthGrid(g.at("start_nm").get<double>(), g.at("stop_nm").get<double>(),
                            g.at("step_nm").get<double>());
    const auto& a = j.at("ambient");
    m.ambient.incident_index = {a.at("incident_index")[0].get<double>(), a.at("incident_index")[1].get<double>()};
    m.ambient.exit_index = {a.at("exit_index")[0].get<double>(), a.at("exit_index")[1].get<double>()};
    m.vocab_manifest = j.at("vocab").dump();
    if (sha256_hex(m.vocab_manifest) != j.at("vocab_hash").get<std::string>()) {
      raise(ErrorCode::kManifestMismatch, "vocabulary manifest does not match its hash");
    }
    m.materials_hash = j.at("materials_hash").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.sha256 = j.at("sha256").get<std::string>();
    if (j.contains("split")) {
      m.split_role = j["split"].at("role").get<std::string>();
      m.parent_sha256 = j["split"].at("parent_sha256").get<std::string>();
    }
    return m;
  } catch (const json::exception& e) {
    raise(ErrorCode::kManifestMismatch, std::string("bad dataset manifest: ") + e.what());
  }
}

std::filesystem::path manifest_path_for(const std::filesystem::path& data_path) {
  auto p = data_path;
  p += ".manifest.json";
  return p;
}

std::string record_to_json_line(const DatasetRecord& rec) {
  std::string out = "{\"tokens\":[";
  for (std::size_t i = 0; i < rec.tokens.ids.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(rec.tokens.ids[i]);
  }
  out += "],\"materials\":[";
  for (std::size_t i = 0; i < rec.materials.size(); ++i) {
    if (i) out += ',';
    out += json(rec.materials[i]).dump();
  }
  out += "],\"thicknesses_nm\":" + json_array(rec.thicknesses_nm);
  out += ",\"R\":" + json_array(rec.R);
  out += ",\"T\":" + json_array(rec.T);
  out += '}';
  return out;
}

DatasetRecord record_from_json_line(const std::string& line) {
  try {
    const auto j = json::parse(line);
    DatasetRecord rec;
    rec.tokens.ids = j.at("tokens").get<std::vector<TokenId>>();
    rec.materials = j.at("materials").get<std::vector<std::string>>();
    rec.thicknesses_nm = j.at("thicknesses_nm").get<std::vector<double>>();
    rec.R = j.at("R").get<std::vector<double>>();
    rec.T = j.at("T").get<std::vector<double>>();
    return rec;
  } catch (const json::exception& e) {
    raise(ErrorCode::kMalformedRow, std::string("bad dataset record: ") + e.what());
  }
}

DatasetManifest generate_dataset(const MaterialDb& db, const Vocabulary& vocab,
                                 const SamplerConfig& cfg, const WavelengthGrid& grid,
                                 const AmbientConfig& amb, const std::filesystem::path& out_path) {
  cfg.validate();
  validate_ambient(amb);
  if (vocab.material_names() != db.names()) {
    raise(ErrorCode::kManifestMismatch, "vocabulary materials differ from the material database");
  }
  for (double b : vocab.thickness_bins_nm()) {
    if (b < kMinThicknessNm || b > kMaxThicknessNm) {
      raise(ErrorCode::kConfigError, "thickness bins must lie in [10, 500] nm");
    }
  }

  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::kIoError, "cannot write " + out_path.string());

  std::mt19937_64 rng(cfg.seed);
  std::set<std::vector<TokenId>> seen;
  std::size_t emitted = 0;
  while (emitted < cfg.count) {
    const std::size_t n = std::min(kLabelChunk, cfg.count - emitted);
    std::vector<Structure> chunk;
    chunk.reserve(n);
    while (chunk.size() < n) {
      Structure s = sample_structure(cfg, vocab, rng);
      if (cfg.dedup && !seen.insert(tokenize(vocab, s, cfg.max_layers).ids).second) continue;
      chunk.push_back(std::move(s));
    }
    std::vector<Spectrum> spectra;
    try {
      spectra = simulate_batch(db, chunk, grid, amb);
    } catch (const Error& e) {
      raise(e.code(), "record batch starting at " + std::to_string(emitted) + ": " + e.what());
    }
    for (std::size_t i = 0; i < n; ++i) {
      out << record_to_json_line(make_record(vocab, chunk[i], spectra[i], cfg.max_layers)) << '\n';
    }
    emitted += n;
  }
  out.close();
  if (!out) raise(ErrorCode::kIoError, "write failed for " + out_path.string());

  DatasetManifest m;
  m.data_file = out_path.filename().string();
  m.record_count = cfg.count;
  m.seed = cfg.seed;
  m.sampler = cfg;
  m.sampler.layer_count_weights = cfg.resolved_weights();
  m.grid = grid;
  m.ambient = amb;
  m.vocab_manifest = vocab.manifest_json();
  m.materials_hash = sha256_hex(db.serialize());
  m.config_hash = config_hash(cfg, grid, amb);
  m.sha256 = sha256_file_hex(out_path);
  write_manifest(out_path, m);
  return m;
}

DatasetManifest read_manifest(const std::filesystem::path& data_path) {
  return DatasetManifest::from_json(read_file(manifest_path_for(data_path)));
}

Dataset read_dataset(const std::filesystem::path& data_path) {
  Dataset ds;
  ds.manifest = read_manifest(data_path);
  const std::string bytes = read_file(data_path);
  if (sha256_hex(bytes) != ds.manifest.sha256) {
    raise(ErrorCode::kManifestMismatch, data_path.string() + ": checksum differs from manifest");
  }
  std::istringstream in(bytes);
  std::string line;
  ds.records.reserve(ds.manifest.record_count);
  while (std::getline(in, line)) {
    if (!line.empty()) ds.records.push_back(record_from_json_line(line));
  }
  if (ds.records.size() != ds.manifest.record_count) {
    raise(ErrorCode::kManifestMismatch, data_path.string() + ": record count differs from manifest");
  }
  return ds;
}

bool is_validation_record(std::size_t index, double val_fraction, std::uint64_t salt) {
  const std::uint64_t h = splitmix64(static_cast<std::uint64_t>(index) ^ splitmix64(salt));
  return static_cast<double>(h >> 11) * 0x1.0p-53 < val_fraction;
}

SplitResult split_dataset(const std::filesystem::path& data_path, double val_fraction,
                          std::uint64_t salt, const std::filesystem::path& train_out,
                          const std::filesystem::path& val_out) {
  if (!(val_fraction >= 0.0 && val_fraction <= 1.0)) {
    raise(ErrorCode::kConfigError, "validation fraction must be in [0, 1]");
  }
  const auto parent = read_manifest(data_path);
  const std::string bytes = read_file(data_path);
  if (sha256_hex(bytes) != parent.sha256) {
    raise(ErrorCode::kManifestMismatch, data_path.string() + ": checksum differs from manifest");
  }
  std::string train_bytes, val_bytes;
  std::size_t n_train = 0, n_val = 0, index = 0;
  std::istringstream in(bytes);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (is_validation_record(index++, val_fraction, salt)) {
      val_bytes += line + '\n';
      ++n_val;
    } else {
      train_bytes += line + '\n';
      ++n_train;
    }
  }
  write_file(train_out, train_bytes);
  write_file(val_out, val_bytes);

  SplitResult result{parent, parent};
  auto finish = [&](DatasetManifest& m, const std::filesystem::path& p, const std::string& b,
                    std::size_t n, const char* role) {
    m.data_file = p.filename().string();
    m.record_count = n;
    m.sha256 = sha256_hex(b);
    m.split_role = role;
    m.parent_sha256 = parent.sha256;
    write_manifest(p, m);
  };
  finish(result.train, train_out, train_bytes, n_train, "train");
  finish(result.validation, val_out, val_bytes, n_val, "validation");
  return result;
}

ValidationReport validate_dataset(const MaterialDb& db, const std::filesystem::path& data_path,
                                  double sample_fraction, std::uint64_t seed, double tolerance) {
  ValidationReport report;
  const auto manifest = read_manifest(data_path);
  if (manifest.materials_hash != sha256_hex(db.serialize())) {
    raise(ErrorCode::kManifestMismatch, "material database differs from the one used to label " +
                                            data_path.string());
  }
  const std::string bytes = read_file(data_path);
  report.checksum_ok = sha256_hex(bytes) == manifest.sha256;

  std::vector<std::string> lines;
  std::istringstream in(bytes);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  report.record_count = lines.size();
  if (lines.size() != manifest.record_count) report.checksum_ok = false;
  if (lines.empty()) return report;

  const auto vocab = manifest.vocab();
  const auto want = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(sample_fraction * static_cast<double>(lines.size()))));
  std::vector<std::size_t> order(lines.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(std::min(want, order.size()));
  std::sort(order.begin(), order.end());

  for (std::size_t idx : order) {
    const auto rec = record_from_json_line(lines[idx]);
    bool ok = true;
    try {
      const Structure s = structure_of(vocab, db, rec, manifest.sampler.max_layers);
      const Spectrum spec = simulate(db, s, manifest.grid, manifest.ambient);
      if (rec.R.size() != spec.R.size() || rec.T.size() != spec.T.size()) {
        ok = false;
      } else {
        for (std::size_t j = 0; j < spec.R.size(); ++j) {
          const double err = std::max(std::abs(rec.R[j] - spec.R[j]), std::abs(rec.T[j] - spec.T[j]));
          report.max_abs_error = std::max(report.max_abs_error, err);
          if (!(err <= tolerance)) ok = false;
        }
      }
    } catch (const Error&) {
      ok = false;
    }
    ++report.checked;
    if (!ok) ++report.mismatches;
  }
  return report;
}

}  // namespace olt
