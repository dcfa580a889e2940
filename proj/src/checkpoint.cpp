#include <bit>
#include <cstring>
#include <json.hpp>

#include "olt/checksum.hpp"
#include "olt/error.hpp"
#include "olt/surrogate.hpp"

namespace olt {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'O', 'L', 'T', 'C', 'K', 'P', 'T', '1'};
constexpr std::size_t kDigestSize = 32;

void append_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t read_u64(const std::string& in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + static_cast<std::size_t>(i)])) << (8 * i);
  }
  return v;
}

std::string digest_of(std::string_view bytes) {
  const auto raw = sha256_raw({reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()});
  return {raw.begin(), raw.end()};
}

}  // namespace

void save_checkpoint(const ModelParams& params, const ModelConfig& cfg,
                     const std::string& vocab_manifest, const std::filesystem::path& path) {
  cfg.validate();
  nlohmann::json tensors = nlohmann::json::array();
  std::string blob;
  params.for_each([&](const std::string& name, const Matrix& m) {
    tensors.push_back({{"name", name},
                       {"shape", {m.rows(), m.cols()}},
                       {"offset", blob.size()},
                       {"dtype", "f64le"}});
    blob.append(reinterpret_cast<const char*>(m.data()), sizeof(double) * static_cast<std::size_t>(m.size()));
  });
  nlohmann::json header{{"format", "olt-checkpoint-v1"},
                        {"config", nlohmann::json::parse(cfg.to_json())},
                        {"config_hash", sha256_hex(cfg.to_json())},
                        {"vocab_manifest", nlohmann::json::parse(vocab_manifest)},
                        {"vocab_manifest_hash", sha256_hex(vocab_manifest)},
                        {"tensors", tensors},
                        {"blob_size", blob.size()}};
  const std::string header_text = header.dump();

  std::string out(kMagic, sizeof kMagic);
  append_u64(out, header_text.size());
  out += header_text;
  out += blob;
  out += digest_of(out);
  write_file(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  auto corrupt = [&](const std::string& why) {
    raise(ErrorCode::kCorruptCheckpoint, path.string() + ": " + why);
  };
  if (bytes.size() < sizeof kMagic + 8 + kDigestSize) corrupt("file too short");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) corrupt("bad magic");
  const std::uint64_t header_len = read_u64(bytes, sizeof kMagic);
  const std::size_t header_pos = sizeof kMagic + 8;
  if (header_len > bytes.size() - header_pos) corrupt("header length exceeds file");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(header_pos, header_len));
  } catch (const nlohmann::json::exception&) {
    corrupt("unreadable header");
  }

  Checkpoint ck;
  try {
    if (header.at("format") != "olt-checkpoint-v1") corrupt("unknown format");
    ck.vocab_manifest = header.at("vocab_manifest").dump();
    if (sha256_hex(ck.vocab_manifest) != header.at("vocab_manifest_hash").get<std::string>()) {
      raise(ErrorCode::kManifestMismatch, path.string() + ": vocabulary manifest does not match its hash");
    }
    const std::string cfg_text = header.at("config").dump();
    ck.config = ModelConfig::from_json(cfg_text);
    if (sha256_hex(ck.config.to_json()) != header.at("config_hash").get<std::string>()) {
      raise(ErrorCode::kManifestMismatch, path.string() + ": model config does not match its hash");
    }

    const std::size_t blob_pos = header_pos + header_len;
    const auto blob_size = header.at("blob_size").get<std::size_t>();
    if (bytes.size() != blob_pos + blob_size + kDigestSize) corrupt("size does not match header");
    const std::string_view body(bytes.data(), blob_pos + blob_size);
    if (digest_of(body) != bytes.substr(blob_pos + blob_size)) corrupt("checksum mismatch");

    ck.params = ModelParams::zeros(ck.config);
    const auto& tensors = header.at("tensors");
    std::size_t i = 0;
    ck.params.for_each([&](const std::string& name, Matrix& m) {
      if (i >= tensors.size()) corrupt("missing tensor " + name);
      const auto& t = tensors[i++];
      const auto shape = t.at("shape").get<std::vector<std::size_t>>();
      const auto offset = t.at("offset").get<std::size_t>();
      const auto bytes_needed = sizeof(double) * static_cast<std::size_t>(m.size());
      if (t.at("name") != name || shape.size() != 2 || shape[0] != static_cast<std::size_t>(m.rows()) ||
          shape[1] != static_cast<std::size_t>(m.cols()) || t.at("dtype") != "f64le" ||
          offset > blob_size || bytes_needed > blob_size - offset) {
        corrupt("tensor directory entry for " + name + " is inconsistent");
      }
      std::memcpy(m.data(), bytes.data() + blob_pos + offset, bytes_needed);
    });
    if (i != tensors.size()) corrupt("unexpected extra tensors");
  } catch (const nlohmann::json::exception& e) {
    corrupt(std::string("malformed header: ") + e.what());
  }
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::string& expected_vocab_manifest) {
  Checkpoint ck = load_checkpoint(path);
  if (ck.vocab_manifest != expected_vocab_manifest) {
    raise(ErrorCode::kManifestMismatch, path.string() + ": vocabulary manifest differs from the expected one");
  }
  return ck;
}

}  // namespace olt
