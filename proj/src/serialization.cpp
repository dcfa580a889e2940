#include "olt/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "olt/checksum.hpp"
#include "olt/error.hpp"

namespace olt {

Vocabulary::Vocabulary(std::vector<std::string> material_names, std::vector<double> thickness_bins_nm)
    : materials_(std::move(material_names)), bins_(std::move(thickness_bins_nm)) {
  if (materials_.empty()) raise(ErrorCode::kConfigError, "vocabulary needs at least one material");
  if (bins_.empty()) raise(ErrorCode::kConfigError, "vocabulary needs at least one thickness bin");
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    if (!(bins_[i] > 0.0) || !std::isfinite(bins_[i]) || (i > 0 && !(bins_[i] > bins_[i - 1]))) {
      raise(ErrorCode::kConfigError, "thickness bins must be positive and strictly ascending");
    }
  }
  auto sorted = materials_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    raise(ErrorCode::kDuplicateName, "duplicate material in vocabulary");
  }
}

std::vector<double> Vocabulary::default_bins() {
  std::vector<double> bins;
  for (int t = 10; t <= 500; t += 10) bins.push_back(t);
  return bins;
}

Vocabulary Vocabulary::from_db(const MaterialDb& db, std::vector<double> bins) {
  return Vocabulary(db.names(), std::move(bins));
}

TokenId Vocabulary::token_id(std::size_t material, std::size_t bin) const {
  if (material >= num_materials()) {
    raise(ErrorCode::kMaterialOutOfVocab, "material index " + std::to_string(material) +
                                              " not in vocabulary of " + std::to_string(num_materials()));
  }
  if (bin >= bin_count()) raise(ErrorCode::kBadId, "bin index " + std::to_string(bin));
  return static_cast<TokenId>(kFirstStructureId + material * bin_count() + bin);
}

std::size_t Vocabulary::snap_bin(double thickness_nm) const {
  const double lo_margin = bins_.size() > 1 ? 0.5 * (bins_[1] - bins_[0]) : 0.5 * bins_[0];
  const double hi_margin =
      bins_.size() > 1 ? 0.5 * (bins_.back() - bins_[bins_.size() - 2]) : 0.5 * bins_[0];
  if (!(thickness_nm >= bins_.front() - lo_margin && thickness_nm < bins_.back() + hi_margin)) {
    raise(ErrorCode::kOutOfRange,
          "thickness " + format_double(thickness_nm) + " nm cannot be snapped to the bin grid");
  }
  std::size_t bin = 0;
  while (bin + 1 < bins_.size() && thickness_nm >= 0.5 * (bins_[bin] + bins_[bin + 1])) ++bin;
  return bin;
}

std::string Vocabulary::manifest_json() const {
  nlohmann::json j;
  j["material_names"] = materials_;
  j["thickness_bins_nm"] = bins_;
  j["specials"] = {{"BoS", kBosId}, {"EoS", kEosId}};
  return j.dump();
}

std::string Vocabulary::manifest_hash() const { return sha256_hex(manifest_json()); }

Vocabulary Vocabulary::from_manifest_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("specials").at("BoS").get<TokenId>() != kBosId ||
        j.at("specials").at("EoS").get<TokenId>() != kEosId) {
      raise(ErrorCode::kManifestMismatch, "unsupported special token ids");
    }
    return Vocabulary(j.at("material_names").get<std::vector<std::string>>(),
                      j.at("thickness_bins_nm").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::kManifestMismatch, std::string("bad vocabulary manifest: ") + e.what());
  }
}

void validate_token_seq(const Vocabulary& vocab, const TokenSeq& seq, std::size_t max_layers) {
  const auto& ids = seq.ids;
  if (ids.size() < 3) raise(ErrorCode::kMalformedSequence, "sequence needs BoS, >=1 layer, EoS");
  if (ids.size() > max_layers + 2) {
    raise(ErrorCode::kMalformedSequence, "sequence longer than " + std::to_string(max_layers + 2));
  }
  if (ids.front() != kBosId) raise(ErrorCode::kMalformedSequence, "sequence must start with BoS");
  if (ids.back() != kEosId) raise(ErrorCode::kMalformedSequence, "sequence must end with EoS");
  for (std::size_t i = 1; i + 1 < ids.size(); ++i) {
    if (ids[i] < kFirstStructureId || ids[i] >= vocab.total_size()) {
      raise(ErrorCode::kMalformedSequence,
            "position " + std::to_string(i) + " holds non-structure id " + std::to_string(ids[i]));
    }
  }
}

TokenSeq tokenize(const Vocabulary& vocab, const Structure& s, std::size_t max_layers) {
  if (s.layers.size() > max_layers) {
    raise(ErrorCode::kTooManyLayers, std::to_string(s.layers.size()) + " layers exceed limit " +
                                         std::to_string(max_layers));
  }
  if (s.layers.empty()) raise(ErrorCode::kInvalidStructure, "structure has no layers");
  TokenSeq seq;
  seq.ids.reserve(s.layers.size() + 2);
  seq.ids.push_back(kBosId);
  for (const auto& layer : s.layers) {
    seq.ids.push_back(vocab.token_id(layer.material_id, vocab.snap_bin(layer.thickness_nm)));
  }
  seq.ids.push_back(kEosId);
  return seq;
}

Structure detokenize(const Vocabulary& vocab, const TokenSeq& seq, std::size_t max_layers) {
  validate_token_seq(vocab, seq, max_layers);
  Structure s;
  s.layers.reserve(seq.ids.size() - 2);
  for (std::size_t i = 1; i + 1 < seq.ids.size(); ++i) {
    const std::size_t offset = seq.ids[i] - kFirstStructureId;
    s.layers.push_back({offset / vocab.bin_count(), vocab.thickness_bins_nm()[offset % vocab.bin_count()]});
  }
  return s;
}

TokenLabel vocab_label(const Vocabulary& vocab, TokenId id) {
  if (id == kBosId) return {"BoS", std::nullopt};
  if (id == kEosId) return {"EoS", std::nullopt};
  if (id >= vocab.total_size()) raise(ErrorCode::kBadId, "token id " + std::to_string(id));
  const std::size_t offset = id - kFirstStructureId;
  return {vocab.material_names()[offset / vocab.bin_count()],
          vocab.thickness_bins_nm()[offset % vocab.bin_count()]};
}

}  // namespace olt
