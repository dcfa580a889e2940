#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace olt {

// Coverage every material table must provide, in nm.
inline constexpr double kCoverageMinNm = 400.0;
inline constexpr double kCoverageMaxNm = 1100.0;

struct DispersionSample {
  double wavelength_nm;
  double n;
  double k;
};

// Tabulated complex refractive index n + i k of a passive, isotropic medium.
class Material {
 public:
  // Validates ordering, positivity and coverage; throws olt::Error.
  Material(std::string name, std::vector<DispersionSample> samples);

  const std::string& name() const noexcept { return name_; }
  const std::vector<DispersionSample>& samples() const noexcept { return samples_; }

  double min_wavelength_nm() const noexcept { return samples_.front().wavelength_nm; }
  double max_wavelength_nm() const noexcept { return samples_.back().wavelength_nm; }

  // Piecewise-linear interpolation of n and k independently.
  std::complex<double> index_at(double wavelength_nm) const;

 private:
  std::string name_;
  std::vector<DispersionSample> samples_;
};

// Immutable, ordered material database. Token ids depend on the ordering.
class MaterialDb {
 public:
  MaterialDb() = default;
  explicit MaterialDb(std::vector<Material> materials);

  std::size_t size() const noexcept { return materials_.size(); }
  bool empty() const noexcept { return materials_.empty(); }
  const Material& at(std::size_t id) const;
  const std::vector<Material>& materials() const noexcept { return materials_; }
  std::vector<std::string> names() const;

  // Throws kBadMaterialId when absent.
  std::size_t id_of(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  // Canonical JSON rendering of every table; equal databases render to
  // identical bytes.
  std::string serialize() const;

 private:
  std::vector<Material> materials_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Reads every `*.csv` file in the directory (lexicographic filename order).
// The file stem is the material name.
MaterialDb load_material_db(const std::filesystem::path& directory);

// Parses one dispersion table (`wavelength_nm,n,k` header).
Material parse_material_csv(const std::string& name, const std::string& text);

std::complex<double> refractive_index(const MaterialDb& db, std::size_t material_id,
                                      double wavelength_nm);

// Synthetic non-production materials for tests and demos:
// toy_absorber (n=1.8, k=0.5), toy_n1.5, toy_n2.0 (lossless).
MaterialDb toy_material_db();
std::string material_csv(const Material& material);

}  // namespace olt
