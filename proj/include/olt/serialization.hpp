#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "olt/tmm.hpp"

namespace olt {

using TokenId = std::uint32_t;

inline constexpr TokenId kBosId = 0;
inline constexpr TokenId kEosId = 1;
inline constexpr TokenId kFirstStructureId = 2;

// Bijection between (material, thickness bin) pairs plus the two specials and
// integer token ids:  id(m, b) = 2 + m * bin_count + b.
class Vocabulary {
 public:
  // Bins must be strictly ascending and positive.
  Vocabulary(std::vector<std::string> material_names, std::vector<double> thickness_bins_nm);

  // 10, 20, ..., 500 nm.
  static std::vector<double> default_bins();
  static Vocabulary from_db(const MaterialDb& db, std::vector<double> bins = default_bins());

  std::size_t num_materials() const noexcept { return materials_.size(); }
  std::size_t bin_count() const noexcept { return bins_.size(); }
  std::size_t total_size() const noexcept { return 2 + materials_.size() * bins_.size(); }
  // Structure tokens plus EoS; BoS is counted separately.
  std::size_t structure_and_eos_count() const noexcept { return total_size() - 1; }

  const std::vector<std::string>& material_names() const noexcept { return materials_; }
  const std::vector<double>& thickness_bins_nm() const noexcept { return bins_; }

  TokenId token_id(std::size_t material, std::size_t bin) const;
  // Index of the nearest bin; exact midpoints round to the thicker bin.
  // Throws kOutOfRange beyond half a bin spacing outside the grid.
  std::size_t snap_bin(double thickness_nm) const;

  // Canonical manifest JSON. Artifacts built from different vocabularies
  // never compare equal byte-wise.
  std::string manifest_json() const;
  std::string manifest_hash() const;
  static Vocabulary from_manifest_json(const std::string& text);

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

 private:
  std::vector<std::string> materials_;
  std::vector<double> bins_;
};

struct TokenSeq {
  std::vector<TokenId> ids;

  std::size_t layer_count() const noexcept { return ids.size() < 2 ? 0 : ids.size() - 2; }
  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

// Throws kMalformedSequence unless seq = [BoS, >=1 structure tokens, EoS].
void validate_token_seq(const Vocabulary& vocab, const TokenSeq& seq,
                        std::size_t max_layers = kDefaultMaxLayers);

TokenSeq tokenize(const Vocabulary& vocab, const Structure& s,
                  std::size_t max_layers = kDefaultMaxLayers);
// Thicknesses come back as bin values.
Structure detokenize(const Vocabulary& vocab, const TokenSeq& seq,
                     std::size_t max_layers = kDefaultMaxLayers);

struct TokenLabel {
  std::string name;  // material name, "BoS" or "EoS"
  std::optional<double> thickness_nm;

  friend bool operator==(const TokenLabel&, const TokenLabel&) = default;
};

TokenLabel vocab_label(const Vocabulary& vocab, TokenId id);

}  // namespace olt
