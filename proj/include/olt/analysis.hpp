#pragma once

#include <filesystem>

#include "olt/surrogate.hpp"
#include "olt/tmm.hpp"

namespace olt {

// One row per vocabulary token: token_id,label,thickness_nm,e0..e{H-1}.
// Values are written with 17 significant digits. Returns the row count.
std::size_t export_embeddings(const Checkpoint& checkpoint, const Vocabulary& vocab,
                              const std::filesystem::path& out_csv);

// Attention weights of one head for one structure, cropped to the sequence.
// Throws kBadIndex for an out-of-range block or head.
Matrix attention_map(const Checkpoint& checkpoint, const Vocabulary& vocab, const Structure& s,
                     std::size_t block, std::size_t head);

// Writes attention_map() as a labeled square CSV (BoS, layer tokens, EoS).
Matrix export_attention(const Checkpoint& checkpoint, const Vocabulary& vocab, const Structure& s,
                        std::size_t block, std::size_t head, const std::filesystem::path& out_csv);

// |E| grid: header row of z positions, then one row per wavelength.
FieldMap export_field(const MaterialDb& db, const Structure& s, const WavelengthGrid& grid,
                      const AmbientConfig& amb, double z_step_nm, const std::filesystem::path& out_csv);

}  // namespace olt
