#include "olt/tmm.hpp"

#include <cmath>
#include <numbers>

#include "olt/checksum.hpp"
#include "olt/error.hpp"
#include "olt/parallel.hpp"

namespace olt {
namespace {

using cplx = std::complex<double>;
constexpr cplx kI{0.0, 1.0};

struct Admittance2 {
  cplx e;  // tangential E
  cplx h;  // tangential H in units of the free-space admittance
};

double total_thickness(const Structure& s) {
  double d = 0.0;
  for (const auto& l : s.layers) d += l.thickness_nm;
  return d;
}

}  // namespace

void validate_structure(const Structure& s, std::size_t max_layers, bool allow_empty) {
  if (s.layers.empty() && !allow_empty) {
    raise(ErrorCode::kInvalidStructure, "structure has no layers");
  }
  if (s.layers.size() > max_layers) {
    raise(ErrorCode::kInvalidStructure, "structure has " + std::to_string(s.layers.size()) +
                                            " layers, limit " + std::to_string(max_layers));
  }
  for (std::size_t i = 0; i < s.layers.size(); ++i) {
    const double d = s.layers[i].thickness_nm;
    if (!(d >= kMinThicknessNm && d <= kMaxThicknessNm)) {
      raise(ErrorCode::kInvalidStructure, "layer " + std::to_string(i) + " thickness " +
                                              format_double(d) + " nm outside [10, 500]");
    }
  }
}

WavelengthGrid::WavelengthGrid(double start_nm, double stop_nm, double step_nm)
    : start_(start_nm), stop_(stop_nm), step_(step_nm), count_(0) {
  if (!(step_nm > 0.0) || !(start_nm > 0.0) || !(stop_nm >= start_nm) || !std::isfinite(stop_nm)) {
    raise(ErrorCode::kConfigError, "wavelength grid needs 0 < start <= stop and step > 0");
  }
  const double intervals = (stop_nm - start_nm) / step_nm;
  const double rounded = std::round(intervals);
  if (std::abs(intervals - rounded) > 1e-9 * std::max(1.0, rounded)) {
    raise(ErrorCode::kConfigError, "(stop - start) / step must be an integer");
  }
  count_ = static_cast<std::size_t>(rounded) + 1;
}

std::vector<double> WavelengthGrid::points() const {
  std::vector<double> out(count_);
  for (std::size_t j = 0; j < count_; ++j) out[j] = at(j);
  return out;
}

std::vector<double> Spectrum::flattened() const {
  std::vector<double> out;
  out.reserve(R.size() + T.size());
  out.insert(out.end(), R.begin(), R.end());
  out.insert(out.end(), T.begin(), T.end());
  return out;
}

void validate_ambient(const AmbientConfig& amb) {
  if (amb.incident_index.imag() != 0.0 || !(amb.incident_index.real() > 0.0)) {
    raise(ErrorCode::kConfigError, "incident medium must be lossless with positive index");
  }
  if (!(amb.exit_index.real() > 0.0) || amb.exit_index.imag() < 0.0) {
    raise(ErrorCode::kConfigError, "exit medium needs Re(n) > 0 and Im(n) >= 0");
  }
}

Coefficients solve_wavelength(const MaterialDb& db, const Structure& s, double wavelength_nm,
                              const AmbientConfig& amb) {
  const cplx n_in = amb.incident_index;
  const cplx n_out = amb.exit_index;
  // (B, C) = M_1 ... M_N (1, n_out). The product is accumulated from the exit
  // side so only a 2-vector is carried.
  cplx b = 1.0;
  cplx c = n_out;
  for (auto it = s.layers.rbegin(); it != s.layers.rend(); ++it) {
    const cplx n = refractive_index(db, it->material_id, wavelength_nm);
    const cplx delta = 2.0 * std::numbers::pi * n * it->thickness_nm / wavelength_nm;
    const cplx cs = std::cos(delta);
    const cplx sn = std::sin(delta);
    // Maps the fields at the back of the layer to its front for exp(-i w t).
    const cplx nb = cs * b - kI * sn * c / n;
    const cplx nc = -kI * n * sn * b + cs * c;
    b = nb;
    c = nc;
  }
  const cplx denom = n_in * b + c;
  Coefficients out;
  out.r = (n_in * b - c) / denom;
  out.t = 2.0 * n_in / denom;
  out.R = std::norm(out.r);
  out.T = n_out.real() / n_in.real() * std::norm(out.t);
  if (!std::isfinite(out.R) || !std::isfinite(out.T)) {
    raise(ErrorCode::kNonFiniteResult,
          "non-finite R/T at " + format_double(wavelength_nm) + " nm");
  }
  return out;
}

Spectrum simulate(const MaterialDb& db, const Structure& s, const WavelengthGrid& grid,
                  const AmbientConfig& amb) {
  validate_structure(s, kDefaultMaxLayers, /*allow_empty=*/true);
  validate_ambient(amb);
  for (const auto& l : s.layers) (void)db.at(l.material_id);
  Spectrum out{grid, std::vector<double>(grid.count()), std::vector<double>(grid.count())};
  for (std::size_t j = 0; j < grid.count(); ++j) {
    const auto coeff = solve_wavelength(db, s, grid.at(j), amb);
    out.R[j] = coeff.R;
    out.T[j] = coeff.T;
  }
  return out;
}

std::vector<Spectrum> simulate_batch(const MaterialDb& db, const std::vector<Structure>& batch,
                                     const WavelengthGrid& grid, const AmbientConfig& amb) {
  std::vector<Spectrum> out(batch.size());
  parallel_for(batch.size(), [&](std::size_t i) {
    try {
      out[i] = simulate(db, batch[i], grid, amb);
    } catch (const Error& e) {
      throw Error(e.code(), "structure " + std::to_string(i) + ": " + e.what());
    }
  });
  return out;
}

std::vector<cplx> field_profile(const MaterialDb& db, const Structure& s, double wavelength_nm,
                                const AmbientConfig& amb, const std::vector<double>& z_nm) {
  validate_structure(s, kDefaultMaxLayers, /*allow_empty=*/true);
  validate_ambient(amb);
  const auto coeff = solve_wavelength(db, s, wavelength_nm, amb);
  const double k0 = 2.0 * std::numbers::pi / wavelength_nm;

  // Tangential fields at every interface, filled from the exit backwards
  // (the direction in which evanescent terms stay bounded).
  const std::size_t nl = s.layers.size();
  std::vector<Admittance2> at(nl + 1);
  std::vector<cplx> index(nl);
  std::vector<double> z_front(nl + 1, 0.0);
  for (std::size_t j = 0; j < nl; ++j) {
    index[j] = refractive_index(db, s.layers[j].material_id, wavelength_nm);
    z_front[j + 1] = z_front[j] + s.layers[j].thickness_nm;
  }
  at[nl] = {coeff.t, amb.exit_index * coeff.t};
  for (std::size_t j = nl; j-- > 0;) {
    const cplx delta = k0 * index[j] * s.layers[j].thickness_nm;
    const cplx cs = std::cos(delta);
    const cplx sn = std::sin(delta);
    const auto& b = at[j + 1];
    at[j] = {cs * b.e - kI * sn * b.h / index[j], -kI * index[j] * sn * b.e + cs * b.h};
  }
  const double total = total_thickness(s);

  std::vector<cplx> out(z_nm.size());
  for (std::size_t i = 0; i < z_nm.size(); ++i) {
    const double z = z_nm[i];
    if (z < 0.0) {
      const cplx kz = k0 * amb.incident_index * z;
      out[i] = std::exp(kI * kz) + coeff.r * std::exp(-kI * kz);
    } else if (z > total || s.layers.empty()) {
      out[i] = coeff.t * std::exp(kI * k0 * amb.exit_index * (z - total));
    } else {
      std::size_t j = 0;
      while (j + 1 < s.layers.size() && z > z_front[j + 1]) ++j;
      const cplx n = index[j];
      // Forward wave referenced to the layer front, backward wave to its back.
      const cplx forward = 0.5 * (at[j].e + at[j].h / n);
      const cplx backward = 0.5 * (at[j + 1].e - at[j + 1].h / n);
      out[i] = forward * std::exp(kI * k0 * n * (z - z_front[j])) +
               backward * std::exp(-kI * k0 * n * (z - z_front[j + 1]));
    }
    if (!std::isfinite(out[i].real()) || !std::isfinite(out[i].imag())) {
      raise(ErrorCode::kNonFiniteResult, "non-finite field at z = " + format_double(z) + " nm");
    }
  }
  return out;
}

FieldMap field_distribution(const MaterialDb& db, const Structure& s, const WavelengthGrid& grid,
                            const AmbientConfig& amb, double z_step_nm) {
  if (!(z_step_nm > 0.0) || !std::isfinite(z_step_nm)) {
    raise(ErrorCode::kConfigError, "z_step_nm must be positive");
  }
  const double total = total_thickness(s);
  const auto n_z = static_cast<std::size_t>(std::ceil(total / z_step_nm)) + 1;
  FieldMap map;
  map.wavelengths_nm = grid.points();
  map.z_nm.resize(n_z);
  for (std::size_t i = 0; i < n_z; ++i) map.z_nm[i] = static_cast<double>(i) * z_step_nm;
  map.magnitude.resize(grid.count());
  for (std::size_t j = 0; j < grid.count(); ++j) {
    const auto e = field_profile(db, s, grid.at(j), amb, map.z_nm);
    map.magnitude[j].resize(n_z);
    for (std::size_t i = 0; i < n_z; ++i) map.magnitude[j][i] = std::abs(e[i]);
  }
  return map;
}

}  // namespace olt
