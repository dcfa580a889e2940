#include "olt/materials.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "olt/checksum.hpp"
#include "olt/error.hpp"

namespace olt {
namespace {

bool parse_real(std::string_view field, double& out) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
    field.remove_suffix(1);
  }
  if (field.empty()) return false;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size() && std::isfinite(out);
}

}  // namespace

Material::Material(std::string name, std::vector<DispersionSample> samples)
    : name_(std::move(name)), samples_(std::move(samples)) {
  if (name_.empty()) raise(ErrorCode::kMalformedRow, "material name is empty");
  if (samples_.empty()) raise(ErrorCode::kMissingCoverage, name_ + ": no samples");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (!(s.wavelength_nm > 0.0) || !(s.n > 0.0) || !(s.k >= 0.0) ||
        !std::isfinite(s.wavelength_nm) || !std::isfinite(s.n) || !std::isfinite(s.k)) {
      raise(ErrorCode::kMalformedRow,
            name_ + ": sample " + std::to_string(i) + " needs wavelength > 0, n > 0, k >= 0");
    }
    if (i > 0 && !(s.wavelength_nm > samples_[i - 1].wavelength_nm)) {
      raise(ErrorCode::kMalformedRow,
            name_ + ": wavelengths must be strictly ascending (sample " + std::to_string(i) + ")");
    }
  }
  if (min_wavelength_nm() > kCoverageMinNm || max_wavelength_nm() < kCoverageMaxNm) {
    raise(ErrorCode::kMissingCoverage,
          name_ + ": samples span [" + format_double(min_wavelength_nm()) + ", " +
              format_double(max_wavelength_nm()) + "] nm, need [400, 1100]");
  }
}

std::complex<double> Material::index_at(double wavelength_nm) const {
  if (!(wavelength_nm >= min_wavelength_nm() && wavelength_nm <= max_wavelength_nm())) {
    raise(ErrorCode::kOutOfRange,
          name_ + ": wavelength " + format_double(wavelength_nm) + " nm outside table");
  }
  auto hi = std::lower_bound(samples_.begin(), samples_.end(), wavelength_nm,
                             [](const DispersionSample& s, double w) { return s.wavelength_nm < w; });
  if (hi->wavelength_nm == wavelength_nm) return {hi->n, hi->k};
  auto lo = std::prev(hi);
  const double f = (wavelength_nm - lo->wavelength_nm) / (hi->wavelength_nm - lo->wavelength_nm);
  return {lo->n + f * (hi->n - lo->n), lo->k + f * (hi->k - lo->k)};
}

MaterialDb::MaterialDb(std::vector<Material> materials) : materials_(std::move(materials)) {
  for (std::size_t i = 0; i < materials_.size(); ++i) {
    if (!index_.emplace(materials_[i].name(), i).second) {
      raise(ErrorCode::kDuplicateName, "duplicate material name " + materials_[i].name());
    }
  }
}

const Material& MaterialDb::at(std::size_t id) const {
  if (id >= materials_.size()) {
    raise(ErrorCode::kBadMaterialId, "material id " + std::to_string(id) + " not in database of " +
                                         std::to_string(materials_.size()));
  }
  return materials_[id];
}

std::vector<std::string> MaterialDb::names() const {
  std::vector<std::string> out;
  out.reserve(materials_.size());
  for (const auto& m : materials_) out.push_back(m.name());
  return out;
}

std::size_t MaterialDb::id_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) raise(ErrorCode::kBadMaterialId, "unknown material " + name);
  return it->second;
}

std::string MaterialDb::serialize() const {
  std::string out = "[";
  for (std::size_t i = 0; i < materials_.size(); ++i) {
    if (i) out += ',';
    out += "{\"name\":\"" + materials_[i].name() + "\",\"samples\":[";
    const auto& samples = materials_[i].samples();
    for (std::size_t j = 0; j < samples.size(); ++j) {
      if (j) out += ',';
      out += '[' + format_double(samples[j].wavelength_nm) + ',' + format_double(samples[j].n) +
             ',' + format_double(samples[j].k) + ']';
    }
    out += "]}";
  }
  out += ']';
  return out;
}

Material parse_material_csv(const std::string& name, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) raise(ErrorCode::kMalformedRow, name + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (line != "wavelength_nm,n,k") {
    raise(ErrorCode::kMalformedRow, name + ": header must be 'wavelength_nm,n,k'");
  }
  std::vector<DispersionSample> samples;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::string_view row(line);
    const auto c1 = row.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : row.find(',', c1 + 1);
    DispersionSample s{};
    if (c2 == std::string_view::npos || row.find(',', c2 + 1) != std::string_view::npos ||
        !parse_real(row.substr(0, c1), s.wavelength_nm) ||
        !parse_real(row.substr(c1 + 1, c2 - c1 - 1), s.n) || !parse_real(row.substr(c2 + 1), s.k)) {
      raise(ErrorCode::kMalformedRow, name + ": line " + std::to_string(line_no) + " malformed");
    }
    samples.push_back(s);
  }
  return Material(name, std::move(samples));
}

MaterialDb load_material_db(const std::filesystem::path& directory) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(directory)) {
    raise(ErrorCode::kIoError, directory.string() + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  if (files.empty()) raise(ErrorCode::kIoError, "no dispersion CSV files in " + directory.string());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  std::vector<Material> materials;
  materials.reserve(files.size());
  for (const auto& f : files) materials.push_back(parse_material_csv(f.stem().string(), read_file(f)));
  return MaterialDb(std::move(materials));
}

std::complex<double> refractive_index(const MaterialDb& db, std::size_t material_id,
                                      double wavelength_nm) {
  return db.at(material_id).index_at(wavelength_nm);
}

MaterialDb toy_material_db() {
  auto constant = [](std::string name, double n, double k) {
    std::vector<DispersionSample> samples;
    for (double w = kCoverageMinNm; w <= kCoverageMaxNm; w += 100.0) samples.push_back({w, n, k});
    return Material(std::move(name), std::move(samples));
  };
  std::vector<Material> mats;
  mats.push_back(constant("toy_absorber", 1.8, 0.5));
  mats.push_back(constant("toy_n1.5", 1.5, 0.0));
  mats.push_back(constant("toy_n2.0", 2.0, 0.0));
  return MaterialDb(std::move(mats));
}

std::string material_csv(const Material& material) {
  std::string out = "wavelength_nm,n,k\n";
  for (const auto& s : material.samples()) {
    out += format_double(s.wavelength_nm) + ',' + format_double(s.n) + ',' + format_double(s.k) + '\n';
  }
  return out;
}

}  // namespace olt
