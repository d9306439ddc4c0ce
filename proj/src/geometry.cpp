#include "lattlight/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace lattlight {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

// ----------------------------------------------------------------------------
// ModeSpec / LatticeGeometry
// ----------------------------------------------------------------------------

double ModeSpec::kx() const { return kTwoPi / wavelength * std::sin(theta); }

void ModeSpec::validate() const {
  if (!(wavelength > 0.0) || !std::isfinite(wavelength)) {
    throw std::invalid_argument("mode wavelength must be positive and finite");
  }
  if (!std::isfinite(theta) || theta < -std::numbers::pi - 1e-12 ||
      theta > std::numbers::pi + 1e-12) {
    throw std::invalid_argument("mode angle must lie in [-pi, pi]");
  }
}

void LatticeGeometry::validate() const {
  if (sites < 1) {
    throw std::invalid_argument("lattice must contain at least one site");
  }
  if (!(period > 0.0) || !std::isfinite(period)) {
    throw std::invalid_argument("lattice period must be positive and finite");
  }
  if (illuminated < 1) {
    throw std::invalid_argument("illuminated window must contain at least one site");
  }
  if (first_site < 1) {
    throw std::invalid_argument("first illuminated site index is 1-based");
  }
  if (first_site + illuminated - 1 > sites) {
    throw std::invalid_argument(
        "illuminated window [" + std::to_string(first_site) + ", " +
        std::to_string(first_site + illuminated - 1) + "] exceeds the lattice of " +
        std::to_string(sites) + " sites");
  }
}

// ----------------------------------------------------------------------------
// CouplingSet
// ----------------------------------------------------------------------------

CouplingSet CouplingSet::from_coefficients(ComplexArray a) {
  CouplingSet c;
  c.coefficients = std::move(a);
  c.sumA = c.coefficients.sum();
  c.sumAbs2 = c.coefficients.abs2().sum();
  c.sumSq = (c.coefficients * c.coefficients).sum();
  c.sumAbs2Weighted =
      (c.coefficients * c.coefficients.abs2().cast<Complex>()).sum();
  c.sumAbs4 = c.coefficients.abs2().square().sum();
  return c;
}

// ----------------------------------------------------------------------------
// Operations
// ----------------------------------------------------------------------------

Complex mode_value(const ModeSpec& mode, int site, double period) {
  if (site < 1) {
    throw std::invalid_argument("site index is 1-based");
  }
  const double phase = mode.kx() * period * static_cast<double>(site);
  if (mode.kind == ModeKind::traveling) {
    return std::polar(1.0, phase);
  }
  return Complex(std::cos(phase), 0.0);
}

CouplingSet couplings(const LatticeGeometry& geom, const ModeSpec& probe,
                      const ModeSpec& detect) {
  geom.validate();
  probe.validate();
  detect.validate();

  ComplexArray a(geom.illuminated);
  for (int i = 0; i < geom.illuminated; ++i) {
    const int site = geom.first_site + i;
    a[i] = std::conj(mode_value(detect, site, geom.period)) *
           mode_value(probe, site, geom.period);
  }
  return CouplingSet::from_coefficients(std::move(a));
}

double structure_function(int count, double alpha) {
  if (count < 1) {
    throw std::invalid_argument("structure_function needs at least one site");
  }
  const double k = static_cast<double>(count);
  const double cap = k * k;
  const double half_sin = std::sin(0.5 * alpha);
  // Removable singularity at alpha = 2*pi*l: the ratio tends to K^2.
  if (std::abs(half_sin) < 1e-9) {
    return cap;
  }
  const double num = std::sin(0.5 * k * alpha);
  const double value = (num * num) / (half_sin * half_sin);
  // sin^2(Kx)/sin^2(x) <= K^2 holds exactly; clamp floating-point overshoot.
  return std::min(value, cap);
}

double alpha_minus(const ModeSpec& probe, const ModeSpec& detect, double period) {
  if (probe.kind != ModeKind::traveling || detect.kind != ModeKind::traveling) {
    throw std::invalid_argument(
        "alpha_minus is defined for two traveling waves only");
  }
  return (probe.kx() - detect.kx()) * period;
}

}  // namespace lattlight
