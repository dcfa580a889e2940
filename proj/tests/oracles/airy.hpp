#pragma once

// Independent reflection/transmission solver used only by tests: Fresnel
// coefficients per interface combined back-to-front with the Airy recursion.
// Shares nothing with the characteristic-matrix code path except the
// refractive index lookup.

#include <complex>
#include <numbers>
#include <vector>

#include "olt/materials.hpp"
#include "olt/tmm.hpp"

namespace olt::oracle {

struct AiryResult {
  double R;
  double T;
};

inline AiryResult airy_solve(const MaterialDb& db, const Structure& s, double wavelength_nm,
                             const AmbientConfig& amb) {
  using cplx = std::complex<double>;
  const cplx i{0.0, 1.0};
  std::vector<cplx> n;
  n.push_back(amb.incident_index);
  for (const auto& l : s.layers) n.push_back(db.at(l.material_id).index_at(wavelength_nm));
  n.push_back(amb.exit_index);

  const std::size_t last = n.size() - 1;
  // Gamma/tau: reflection and transmission looking into interface j -> j+1
  // and everything behind it.
  cplx gamma = (n[last - 1] - n[last]) / (n[last - 1] + n[last]);
  cplx tau = 2.0 * n[last - 1] / (n[last - 1] + n[last]);
  for (std::size_t j = last - 1; j-- > 0;) {
    const double d = s.layers[j].thickness_nm;  // layer j+1 in n[] numbering
    const cplx beta = 2.0 * std::numbers::pi * n[j + 1] * d / wavelength_nm;
    const cplx r = (n[j] - n[j + 1]) / (n[j] + n[j + 1]);
    const cplx t = 2.0 * n[j] / (n[j] + n[j + 1]);
    const cplx round_trip = std::exp(2.0 * i * beta);
    const cplx denom = 1.0 + r * gamma * round_trip;
    const cplx next_gamma = (r + gamma * round_trip) / denom;
    tau = t * tau * std::exp(i * beta) / denom;
    gamma = next_gamma;
  }
  return {std::norm(gamma), amb.exit_index.real() / amb.incident_index.real() * std::norm(tau)};
}

}  // namespace olt::oracle
