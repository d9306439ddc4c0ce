#pragma once

#include "lattlight/geometry.hpp"
#include "lattlight/states.hpp"

namespace lattlight {

// ----------------------------------------------------------------------------
// Cavity parameters
// ----------------------------------------------------------------------------

// The detected field is a1 = C * D with D = sum_i A_i n_i and
// C = i g0^2 a0 / [delta_0a (i delta_01 - kappa)].
struct CavityParams {
  double g0 = 1.0;         // atom-light coupling (rad/s)
  double a0 = 1.0;         // classical probe amplitude
  double delta_0a = 100.0; // probe-atom detuning (rad/s), nonzero
  double delta_01 = 0.0;   // probe-cavity detuning (rad/s)
  double kappa = 1.0;      // cavity decay rate (rad/s); (kappa, delta_01) != (0, 0)

  Complex field_prefactor() const;  // C
  void validate() const;
};

// Every light observable at one geometry/state point.  The D-moment fields
// (classical_intensity, DstarD, R, absD4, varAbsD2, D2) are photon-count-free;
// photon_number, photon_variance and quad_variance fold in the prefactor C.
struct ObservablesReport {
  Complex amp_D{};                // <D>
  double classical_intensity = 0; // |<D>|^2
  double DstarD = 0;              // <D* D>
  double R = 0;                   // noise quantity <D* D> - |<D>|^2
  double absD4 = 0;               // <|D|^4>
  double varAbsD2 = 0;            // (Delta |D|^2)^2
  double photon_number = 0;       // |C|^2 <D* D>
  double photon_variance = 0;     // (Delta n_ph)^2
  Complex D2{};                   // <D^2> (unconjugated)
  double quad_variance = 0;       // (Delta X_phi)^2 at the given phase
};

// ----------------------------------------------------------------------------
// Closed-form observables
// ----------------------------------------------------------------------------

// <D> = n * sumA: the amplitude sees only the mean density.
Complex expected_D(const CouplingSet& c, const AtomicStateSpec& s);

// <D* D> = <n_a n_b> |sumA|^2 + (<n^2> - <n_a n_b>) sumAbs2.
double expected_DstarD(const CouplingSet& c, const AtomicStateSpec& s);

// R = cov * |sumA|^2 + (var - cov) * sumAbs2 = <D* D> - |<D>|^2.
double noise_R(const CouplingSet& c, const AtomicStateSpec& s);

// Traveling-wave reduction of noise_R: all |A_i| = 1, so
// R = cov * structure_function(K, alpha) + (var - cov) * K.
double noise_R_traveling(int illuminated, const AtomicStateSpec& s, double alpha);

// <|D|^4>: pattern-grouped fast path over the CouplingSet power sums.
double fourth_moment_absD4(const CouplingSet& c, const AtomicStateSpec& s);

// <|D|^4>: literal quadruple sum, the correctness anchor for the fast path.
double fourth_moment_absD4_reference(const CouplingSet& c,
                                     const AtomicStateSpec& s);

// <D^2> = <n_a n_b> (sumA^2 - sumSq) + <n^2> sumSq.
Complex expected_D2(const CouplingSet& c, const AtomicStateSpec& s);

struct PhotonStats {
  double number = 0.0;    // |C|^2 <D* D>
  double variance = 0.0;  // |C|^4 (<|D|^4> - <D* D>^2) + |C|^2 <D* D>
};

PhotonStats photon_stats(const CouplingSet& c, const AtomicStateSpec& s,
                         const CavityParams& p);

// Variance of the quadrature X_phi = (a1 e^{-i phi} + a1^dag e^{i phi}) / 2
// including the vacuum term:
// (Delta X_phi)^2 = 1/4 + |C|^2 R / 2 + Re[e^{-2 i phi} C^2 (<D^2> - <D>^2)] / 2.
double quadrature_variance(const CouplingSet& c, const AtomicStateSpec& s,
                           const CavityParams& p, double phase);

// Spatially incoherent part of the scattered intensity, K * <n^2> (the
// proportionality constant is fixed to the illuminated site count).
double incoherent_intensity(const AtomicStateSpec& s, int illuminated);

// All observables at one point.
ObservablesReport evaluate(const CouplingSet& c, const AtomicStateSpec& s,
                           const CavityParams& p, double quad_phase = 0.0);

// ----------------------------------------------------------------------------
// Scenario presets
// ----------------------------------------------------------------------------

// Probe along the lattice normal, detection at 90 degrees, lambda = 2d: the
// diffraction minimum with A_m = (-1)^m.  Builds the geometry via couplings()
// and evaluates all observables.
ObservablesReport preset_transverse(const AtomicStateSpec& s,
                                    const CavityParams& p, int illuminated);

// Lattice period equal to the wavelength: all atoms scatter in phase and the
// photon number grows as the atom number squared, |C|^2 N_K^2.
double preset_self_organized(const CavityParams& p, double window_atoms);

}  // namespace lattlight
