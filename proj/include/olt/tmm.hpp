#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "olt/materials.hpp"

namespace olt {

inline constexpr std::size_t kDefaultMaxLayers = 20;
inline constexpr double kMinThicknessNm = 10.0;
inline constexpr double kMaxThicknessNm = 500.0;

struct Layer {
  std::size_t material_id = 0;
  double thickness_nm = 0.0;

  friend bool operator==(const Layer&, const Layer&) = default;
};

// Layers ordered from the light-incident side to the exit side.
struct Structure {
  std::vector<Layer> layers;

  friend bool operator==(const Structure&, const Structure&) = default;
};

// Throws kInvalidStructure on layer count or thickness violations. The solver
// also accepts the empty stack (a bare interface) via allow_empty.
void validate_structure(const Structure& s, std::size_t max_layers = kDefaultMaxLayers,
                        bool allow_empty = false);

// Uniform grid start + j * step, j = 0 .. count-1.
class WavelengthGrid {
 public:
  WavelengthGrid() : WavelengthGrid(400.0, 1100.0, 10.0) {}
  // Throws kConfigError unless (stop - start) / step is a non-negative integer.
  WavelengthGrid(double start_nm, double stop_nm, double step_nm);

  double start_nm() const noexcept { return start_; }
  double stop_nm() const noexcept { return stop_; }
  double step_nm() const noexcept { return step_; }
  std::size_t count() const noexcept { return count_; }
  double at(std::size_t j) const noexcept { return start_ + static_cast<double>(j) * step_; }
  std::vector<double> points() const;

  friend bool operator==(const WavelengthGrid&, const WavelengthGrid&) = default;

 private:
  double start_;
  double stop_;
  double step_;
  std::size_t count_;
};

struct Spectrum {
  WavelengthGrid grid;
  std::vector<double> R;
  std::vector<double> T;

  // [R_0 .. R_{n-1}, T_0 .. T_{n-1}], length 2 * grid.count().
  std::vector<double> flattened() const;
};

// Semi-infinite media on either side of the stack.
struct AmbientConfig {
  std::complex<double> incident_index{1.0, 0.0};
  std::complex<double> exit_index{1.45, 0.0};
};

void validate_ambient(const AmbientConfig& amb);

// Normal-incidence reflection/transmission of a coherent stack
// (characteristic-matrix form, fields ~ exp(-i w t), k >= 0 absorbs).
// An empty layer list is the bare incident/exit interface.
Spectrum simulate(const MaterialDb& db, const Structure& s, const WavelengthGrid& grid = {},
                  const AmbientConfig& amb = {});

// Same per-structure results as simulate(), evaluated on the worker pool.
// Failures are rethrown with the offending structure index in the message.
std::vector<Spectrum> simulate_batch(const MaterialDb& db, const std::vector<Structure>& batch,
                                     const WavelengthGrid& grid = {}, const AmbientConfig& amb = {});

// Complex amplitude reflection/transmission coefficients at one wavelength.
struct Coefficients {
  std::complex<double> r;
  std::complex<double> t;
  double R;
  double T;
};

Coefficients solve_wavelength(const MaterialDb& db, const Structure& s, double wavelength_nm,
                              const AmbientConfig& amb);

// Complex electric field E(z) for unit incident amplitude. z = 0 is the front
// interface; z < 0 lies in the incident medium and z beyond the stack in the
// exit medium. Within a layer E = E+ exp(i k z') + E- exp(-i k z').
std::vector<std::complex<double>> field_profile(const MaterialDb& db, const Structure& s,
                                                double wavelength_nm, const AmbientConfig& amb,
                                                const std::vector<double>& z_nm);

struct FieldMap {
  std::vector<double> wavelengths_nm;
  std::vector<double> z_nm;
  // magnitude[j][i] = |E(z_i, lambda_j)|
  std::vector<std::vector<double>> magnitude;
};

// |E| on z_i = i * z_step, i = 0 .. ceil(total / z_step), for every grid
// wavelength.
FieldMap field_distribution(const MaterialDb& db, const Structure& s, const WavelengthGrid& grid,
                            const AmbientConfig& amb, double z_step_nm);

}  // namespace olt
