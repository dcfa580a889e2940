#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "olt/analysis.hpp"
#include "olt/checksum.hpp"
#include "olt/datagen.hpp"
#include "olt/error.hpp"
#include "olt/evalbench.hpp"
#include "olt/materials.hpp"
#include "olt/trainer.hpp"

namespace olt::cli {
namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string materials;
  std::string grid = "400:1100:10";
  double ambient_in = 1.0;
  double ambient_out = 1.45;
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
};

void add_setup_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--materials", c.materials, "Directory of dispersion CSVs (default: built-in toy set)");
  cmd->add_option("--grid", c.grid, "Wavelength grid start:stop:step in nm")->capture_default_str();
  cmd->add_option("--ambient-in", c.ambient_in, "Incident medium index")->capture_default_str();
  cmd->add_option("--ambient-out", c.ambient_out, "Exit medium index")->capture_default_str();
}

MaterialDb load_db(const Common& c) {
  return c.materials.empty() ? toy_material_db() : load_material_db(c.materials);
}

WavelengthGrid parse_grid(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad --grid '" + text + "', expected start:stop:step");
    }
  }
  if (parts.size() != 3) throw UsageError("bad --grid '" + text + "', expected start:stop:step");
  return WavelengthGrid(parts[0], parts[1], parts[2]);
}

AmbientConfig ambient(const Common& c) { return {{c.ambient_in, 0.0}, {c.ambient_out, 0.0}}; }

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError(std::string("bad ") + flag + " entry '" + item + "'");
    }
  }
  return out;
}

std::vector<double> parse_bins(const std::string& text) {
  if (text.empty()) return Vocabulary::default_bins();
  const auto g = parse_grid(text);
  return g.points();
}

Structure read_structure(const std::string& path, const MaterialDb& db) {
  try {
    const auto j = nlohmann::json::parse(read_file(path));
    Structure s;
    for (const auto& layer : j.at("layers")) {
      s.layers.push_back({db.id_of(layer.at("material").get<std::string>()),
                          layer.at("thickness_nm").get<double>()});
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::kConfigError, path + ": bad structure file: " + e.what());
  }
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_file(path, text);
  }
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multilayer thin-film optics: TMM oracle and transformer surrogate", "olt"};
  app.require_subcommand(1);
  Common c;

  // simulate
  std::string structure_path;
  auto* simulate_cmd = app.add_subcommand("simulate", "Spectrum of one structure (CSV: wavelength_nm,R,T)");
  add_setup_flags(simulate_cmd, c);
  simulate_cmd->add_option("--structure", structure_path, "Structure JSON")->required();
  simulate_cmd->add_option("--out", c.out, "Output CSV (default stdout)");

  // gen-data
  std::size_t count = 0, max_layers = kDefaultMaxLayers;
  std::string bins_text, weights_text;
  bool dedup = false;
  auto* gen_cmd = app.add_subcommand("gen-data", "Sample structures and label them with the oracle");
  add_setup_flags(gen_cmd, c);
  gen_cmd->add_option("--count", count, "Number of records")->required();
  gen_cmd->add_option("--seed", c.seed, "RNG seed");
  gen_cmd->add_option("--out", c.out, "Output JSONL path")->required();
  gen_cmd->add_option("--max-layers", max_layers, "Maximum layer count")->capture_default_str();
  gen_cmd->add_option("--bins", bins_text, "Thickness bins start:stop:step (default 10:500:10)");
  gen_cmd->add_option("--weights", weights_text, "Comma-separated layer-count weights (default w_N = N)");
  gen_cmd->add_flag("--dedup", dedup, "Skip structures already emitted");

  // split-data
  std::string data_path, train_out, val_out;
  double val_fraction = 0.1;
  auto* split_cmd = app.add_subcommand("split-data", "Split a dataset into disjoint train/validation files");
  split_cmd->add_option("--data", data_path, "Input JSONL")->required();
  split_cmd->add_option("--val-fraction", val_fraction, "Validation fraction")->capture_default_str();
  split_cmd->add_option("--seed", c.seed, "Split salt");
  split_cmd->add_option("--train-out", train_out, "Training JSONL")->required();
  split_cmd->add_option("--val-out", val_out, "Validation JSONL")->required();

  // train
  std::string val_path, model_config_path;
  auto* train_cmd = app.add_subcommand("train", "Train the surrogate");
  train_cmd->add_option("--data", data_path, "Training JSONL")->required();
  train_cmd->add_option("--val", val_path, "Validation JSONL")->required();
  train_cmd->add_option("--config", c.config, "Training config JSON");
  train_cmd->add_option("--model-config", model_config_path, "Model config JSON (default: tiny preset)");
  train_cmd->add_option("--seed", c.seed, "Seed for init and shuffling");
  train_cmd->add_option("--out", c.out, "Checkpoint directory")->required();

  // eval
  std::string checkpoint_path;
  auto* eval_cmd = app.add_subcommand("eval", "Global MSE of a checkpoint on a dataset");
  eval_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  eval_cmd->add_option("--data", data_path, "Dataset JSONL")->required();

  // eval-families
  std::size_t per_family = 0;
  auto* fam_cmd = app.add_subcommand("eval-families", "Per-family MSE table");
  add_setup_flags(fam_cmd, c);
  fam_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  fam_cmd->add_option("--config", c.config, "Family spec JSON")->required();
  fam_cmd->add_option("--count", per_family, "Samples per family (default: from spec)");
  fam_cmd->add_option("--seed", c.seed, "Sampling seed");
  fam_cmd->add_option("--out", c.out, "JSON report path");

  // bench
  std::size_t n_single = 100, batch_size = 1000, repetitions = 5;
  auto* bench_cmd = app.add_subcommand("bench", "Oracle vs surrogate timing");
  add_setup_flags(bench_cmd, c);
  bench_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  bench_cmd->add_option("--n-single", n_single, "Structures timed one at a time")->capture_default_str();
  bench_cmd->add_option("--batch-size", batch_size, "Batched forward size")->capture_default_str();
  bench_cmd->add_option("--repetitions", repetitions, "Timed repetitions")->capture_default_str();
  bench_cmd->add_option("--seed", c.seed, "Structure sampling seed");
  bench_cmd->add_option("--out", c.out, "JSON report path");

  // export-embeddings
  auto* emb_cmd = app.add_subcommand("export-embeddings", "Token embedding table as labeled CSV");
  emb_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  emb_cmd->add_option("--out", c.out, "Output CSV")->required();

  // export-attention
  std::size_t block = 0, head = 0;
  auto* att_cmd = app.add_subcommand("export-attention", "Attention map of one head for a structure");
  add_setup_flags(att_cmd, c);
  att_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  att_cmd->add_option("--structure", structure_path, "Structure JSON")->required();
  att_cmd->add_option("--block", block, "Encoder block index")->capture_default_str();
  att_cmd->add_option("--head", head, "Attention head index")->capture_default_str();
  att_cmd->add_option("--out", c.out, "Output CSV")->required();

  // export-field
  double z_step = 1.0;
  auto* field_cmd = app.add_subcommand("export-field", "|E(z, lambda)| inside a structure");
  add_setup_flags(field_cmd, c);
  field_cmd->add_option("--structure", structure_path, "Structure JSON")->required();
  field_cmd->add_option("--z-step", z_step, "Depth step in nm")->capture_default_str();
  field_cmd->add_option("--out", c.out, "Output CSV")->required();

  // validate-data
  double fraction = 0.01;
  auto* validate_cmd = app.add_subcommand("validate-data", "Checksum and label audit of a dataset");
  add_setup_flags(validate_cmd, c);
  validate_cmd->add_option("--data", data_path, "Dataset JSONL")->required();
  validate_cmd->add_option("--fraction", fraction, "Fraction of records re-simulated")->capture_default_str();
  validate_cmd->add_option("--seed", c.seed, "Sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*simulate_cmd) {
      const auto db = load_db(c);
      const auto grid = parse_grid(c.grid);
      const auto spec = simulate(db, read_structure(structure_path, db), grid, ambient(c));
      std::string csv = "wavelength_nm,R,T\n";
      for (std::size_t j = 0; j < grid.count(); ++j) {
        csv += format_double(grid.at(j)) + ',' + format_double(spec.R[j]) + ',' + format_double(spec.T[j]) + '\n';
      }
      emit(c.out, csv, out);
    } else if (*gen_cmd) {
      const auto db = load_db(c);
      const auto vocab = Vocabulary::from_db(db, parse_bins(bins_text));
      SamplerConfig sc;
      sc.max_layers = max_layers;
      sc.seed = c.seed;
      sc.count = count;
      sc.dedup = dedup;
      if (!weights_text.empty()) sc.layer_count_weights = parse_list(weights_text, "--weights");
      const auto m = generate_dataset(db, vocab, sc, parse_grid(c.grid), ambient(c), c.out);
      out << "wrote " << m.record_count << " records to " << c.out << " (sha256 " << m.sha256 << ")\n";
    } else if (*split_cmd) {
      const auto r = split_dataset(data_path, val_fraction, c.seed, train_out, val_out);
      out << "train " << r.train.record_count << " records, validation " << r.validation.record_count
          << " records\n";
    } else if (*train_cmd) {
      TrainConfig tc = c.config.empty() ? TrainConfig{} : TrainConfig::from_json(read_file(c.config));
      tc.checkpoint_dir = c.out;
      if (train_cmd->count("--seed")) tc.seed = c.seed;
      ModelConfig mc;
      if (model_config_path.empty()) {
        const auto manifest = read_manifest(data_path);
        mc = ModelConfig::tiny(manifest.vocab().total_size(), 2 * manifest.grid.count(),
                               manifest.sampler.max_layers);
      } else {
        mc = ModelConfig::from_json(read_file(model_config_path));
      }
      if (train_cmd->count("--seed")) mc.seed = c.seed;
      const auto r = train(data_path, val_path, mc, tc);
      out << "steps " << r.steps << ", final validation MSE " << format_double(r.final_val_mse)
          << ", best " << format_double(r.best_val_mse) << "\ncheckpoint " << r.final_checkpoint.string()
          << "\n";
    } else if (*eval_cmd) {
      out << format_double(eval_mse(checkpoint_path, data_path)) << "\n";
    } else if (*fam_cmd) {
      const auto db = load_db(c);
      const auto ck = load_checkpoint(checkpoint_path);
      const auto rows = eval_families(ck, db, read_family_specs(read_file(c.config)), per_family, c.seed,
                                      parse_grid(c.grid), ambient(c));
      out << format_family_table(rows);
      if (!c.out.empty()) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& r : rows) {
          j.push_back({{"name", r.name}, {"layers", r.layers}, {"samples", r.samples}, {"mse", r.mse}});
        }
        write_file(c.out, j.dump(2) + "\n");
      }
    } else if (*bench_cmd) {
      const auto db = load_db(c);
      const auto ck = load_checkpoint(checkpoint_path);
      const auto report = bench(ck, db, n_single, batch_size, repetitions, c.seed, parse_grid(c.grid), ambient(c));
      out << report.to_table();
      if (!c.out.empty()) write_file(c.out, report.to_json() + "\n");
    } else if (*emb_cmd) {
      const auto ck = load_checkpoint(checkpoint_path);
      const auto rows = export_embeddings(ck, Vocabulary::from_manifest_json(ck.vocab_manifest), c.out);
      out << "wrote " << rows << " embedding rows to " << c.out << "\n";
    } else if (*att_cmd) {
      const auto db = load_db(c);
      const auto ck = load_checkpoint(checkpoint_path);
      const auto vocab = Vocabulary::from_manifest_json(ck.vocab_manifest);
      if (vocab.material_names() != db.names()) {
        raise(ErrorCode::kManifestMismatch, "material database does not match the checkpoint vocabulary");
      }
      const auto att = export_attention(ck, vocab, read_structure(structure_path, db), block, head, c.out);
      out << "wrote " << att.rows() << "x" << att.cols() << " attention map to " << c.out << "\n";
    } else if (*field_cmd) {
      const auto db = load_db(c);
      const auto map = export_field(db, read_structure(structure_path, db), parse_grid(c.grid), ambient(c),
                                    z_step, c.out);
      out << "wrote " << map.wavelengths_nm.size() << "x" << map.z_nm.size() << " field grid to " << c.out
          << "\n";
    } else if (*validate_cmd) {
      const auto db = load_db(c);
      const auto r = validate_dataset(db, data_path, fraction, c.seed);
      out << "records " << r.record_count << ", checked " << r.checked << ", mismatches " << r.mismatches
          << ", max |error| " << format_double(r.max_abs_error) << ", checksum "
          << (r.checksum_ok ? "ok" : "MISMATCH") << "\n";
      return r.passed() ? 0 : 2;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace olt::cli
