#pragma once

#include <complex>

#include <Eigen/Core>

namespace lattlight {

using Complex = std::complex<double>;
using ComplexArray = Eigen::ArrayXcd;
using RealArray = Eigen::ArrayXd;

// ----------------------------------------------------------------------------
// Optical modes and lattice geometry
// ----------------------------------------------------------------------------

enum class ModeKind { traveling, standing };

// A probe or detection mode: a plane (traveling) or standing wave whose angle
// theta is measured from the lattice normal.  Only the projection of the wave
// vector onto the lattice axis matters, k_x = (2*pi/lambda)*sin(theta).
struct ModeSpec {
  ModeKind kind = ModeKind::traveling;
  double wavelength = 2.0;  // same length unit as the lattice period
  double theta = 0.0;       // radians in [-pi, pi]

  double kx() const;
  void validate() const;  // throws std::invalid_argument on bad fields
};

// A 1D lattice of `sites` sites at positions x_m = m*period (m = 1-based),
// of which the window [first_site, first_site + illuminated - 1] is lit.
struct LatticeGeometry {
  int sites = 30;        // M
  double period = 1.0;   // d
  int illuminated = 30;  // K
  int first_site = 1;    // j0, 1-based

  void validate() const;
};

// Per-site coupling coefficients A_i = conj(u1(x_i)) * u0(x_i) for the
// illuminated window, together with the aggregate sums every observable
// consumes.  The power sums beyond sumA/sumAbs2 feed the fast fourth-moment
// path.
struct CouplingSet {
  ComplexArray coefficients;     // A_i, i = 1..K
  Complex sumA{};                // sum A_i
  double sumAbs2 = 0.0;          // sum |A_i|^2
  Complex sumSq{};               // sum A_i^2
  Complex sumAbs2Weighted{};     // sum A_i |A_i|^2
  double sumAbs4 = 0.0;          // sum |A_i|^4

  int size() const { return static_cast<int>(coefficients.size()); }
  Complex sumConjSq() const { return std::conj(sumSq); }  // sum conj(A_i)^2

  // Populates every aggregate from the coefficient sequence (fixed order).
  static CouplingSet from_coefficients(ComplexArray a);
};

// ----------------------------------------------------------------------------
// Operations
// ----------------------------------------------------------------------------

// Mode function at site m: exp(i*m*kx*d) for traveling, cos(m*kx*d) for
// standing waves.
Complex mode_value(const ModeSpec& mode, int site, double period);

// Coupling coefficients A_i = conj(u1(x_i)) * u0(x_i) over the illuminated
// window, with aggregates.
CouplingSet couplings(const LatticeGeometry& geom, const ModeSpec& probe,
                      const ModeSpec& detect);

// K-slit interference factor sin^2(K*alpha/2) / sin^2(alpha/2).  The removable
// singularity at alpha = 2*pi*l evaluates to K^2; the result is clamped to the
// mathematical bound [0, K^2] against floating-point overshoot near those
// points.
double structure_function(int count, double alpha);

// Phase difference per lattice period between two traveling waves:
// (2*pi/lambda0)*d*sin(theta0) - (2*pi/lambda1)*d*sin(theta1).
// Standing modes are rejected: the single-phase reduction does not apply.
double alpha_minus(const ModeSpec& probe, const ModeSpec& detect, double period);

}  // namespace lattlight
