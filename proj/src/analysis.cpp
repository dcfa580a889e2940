#include "olt/analysis.hpp"

#include "olt/checksum.hpp"
#include "olt/error.hpp"

namespace olt {
namespace {

std::string token_name(const Vocabulary& vocab, TokenId id) {
  const auto label = vocab_label(vocab, id);
  if (!label.thickness_nm) return label.name;
  return label.name + "@" + format_double(*label.thickness_nm) + "nm";
}

void check_vocab(const Checkpoint& ck, const Vocabulary& vocab) {
  if (ck.vocab_manifest != vocab.manifest_json()) {
    raise(ErrorCode::kManifestMismatch, "vocabulary differs from the checkpoint's manifest");
  }
}

}  // namespace

std::size_t export_embeddings(const Checkpoint& checkpoint, const Vocabulary& vocab,
                              const std::filesystem::path& out_csv) {
  check_vocab(checkpoint, vocab);
  const Matrix& emb = checkpoint.params.token_embedding;
  std::string out = "token_id,label,thickness_nm";
  for (Eigen::Index c = 0; c < emb.cols(); ++c) out += ",e" + std::to_string(c);
  out += '\n';
  for (std::size_t id = 0; id < vocab.total_size(); ++id) {
    const auto label = vocab_label(vocab, static_cast<TokenId>(id));
    out += std::to_string(id) + ',' + label.name + ',';
    if (label.thickness_nm) out += format_double(*label.thickness_nm);
    for (Eigen::Index c = 0; c < emb.cols(); ++c) {
      out += ',' + format_double(emb(static_cast<Eigen::Index>(id), c));
    }
    out += '\n';
  }
  write_file(out_csv, out);
  return vocab.total_size();
}

Matrix attention_map(const Checkpoint& checkpoint, const Vocabulary& vocab, const Structure& s,
                     std::size_t block, std::size_t head) {
  check_vocab(checkpoint, vocab);
  const auto& cfg = checkpoint.config;
  if (block >= cfg.num_blocks) {
    raise(ErrorCode::kBadIndex, "block " + std::to_string(block) + " >= " + std::to_string(cfg.num_blocks));
  }
  if (head >= cfg.num_heads) {
    raise(ErrorCode::kBadIndex, "head " + std::to_string(head) + " >= " + std::to_string(cfg.num_heads));
  }
  const TokenSeq seq = tokenize(vocab, s, cfg.max_seq_len - 2);
  const auto result = forward(checkpoint.params, cfg, {seq}, {.capture_attention = true});
  for (const auto& rec : result.attention) {
    if (rec.block == block && rec.head == head && rec.sequence == 0) {
      const auto n = static_cast<Eigen::Index>(seq.ids.size());
      return rec.weights.topLeftCorner(n, n);
    }
  }
  raise(ErrorCode::kBadIndex, "attention record not captured");
}

Matrix export_attention(const Checkpoint& checkpoint, const Vocabulary& vocab, const Structure& s,
                        std::size_t block, std::size_t head, const std::filesystem::path& out_csv) {
  const Matrix att = attention_map(checkpoint, vocab, s, block, head);
  const TokenSeq seq = tokenize(vocab, s, checkpoint.config.max_seq_len - 2);
  std::string out = "query\\key";
  for (TokenId id : seq.ids) out += ',' + token_name(vocab, id);
  out += '\n';
  for (Eigen::Index r = 0; r < att.rows(); ++r) {
    out += token_name(vocab, seq.ids[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < att.cols(); ++c) out += ',' + format_double(att(r, c));
    out += '\n';
  }
  write_file(out_csv, out);
  return att;
}

FieldMap export_field(const MaterialDb& db, const Structure& s, const WavelengthGrid& grid,
                      const AmbientConfig& amb, double z_step_nm, const std::filesystem::path& out_csv) {
  FieldMap map = field_distribution(db, s, grid, amb, z_step_nm);
  std::string out = "wavelength_nm\\z_nm";
  for (double z : map.z_nm) out += ',' + format_double(z);
  out += '\n';
  for (std::size_t j = 0; j < map.wavelengths_nm.size(); ++j) {
    out += format_double(map.wavelengths_nm[j]);
    for (double v : map.magnitude[j]) out += ',' + format_double(v);
    out += '\n';
  }
  write_file(out_csv, out);
  return map;
}

}  // namespace olt
