#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <string>

#include "olt/error.hpp"
#include "olt/materials.hpp"
#include "olt/tmm.hpp"

namespace olt::testing {

// Code of the olt::Error thrown by f, or nullopt when f returns normally.
template <class F>
std::optional<ErrorCode> error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

// Toy set plus two dispersive synthetic tables: a lossless Cauchy-like glass
// and a strongly absorbing metal-like medium.
inline MaterialDb mixed_material_db() {
  std::vector<Material> mats = toy_material_db().materials();
  std::vector<DispersionSample> glass, metal;
  for (double w = 380.0; w <= 1120.0; w += 20.0) {
    const double um = w / 1000.0;
    glass.push_back({w, 1.45 + 0.0036 / (um * um), 0.0});
    metal.push_back({w, 0.05 + 0.3 * um, 2.0 + 6.0 * um});
  }
  mats.emplace_back("synthetic_glass", glass);
  mats.emplace_back("synthetic_metal", metal);
  return MaterialDb(std::move(mats));
}

// Ids of the lossless materials in mixed_material_db().
inline std::vector<std::size_t> lossless_ids() { return {1, 2, 3}; }

inline Structure random_structure(std::mt19937_64& rng, const std::vector<std::size_t>& material_ids,
                                  std::size_t max_layers = kDefaultMaxLayers) {
  std::uniform_int_distribution<std::size_t> count(1, max_layers);
  std::uniform_int_distribution<std::size_t> pick(0, material_ids.size() - 1);
  std::uniform_real_distribution<double> thickness(kMinThicknessNm, kMaxThicknessNm);
  Structure s;
  const std::size_t n = count(rng);
  for (std::size_t i = 0; i < n; ++i) s.layers.push_back({material_ids[pick(rng)], thickness(rng)});
  return s;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("olt-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace olt::testing
