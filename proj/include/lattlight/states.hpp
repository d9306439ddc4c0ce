#pragma once

#include <initializer_list>
#include <variant>
#include <vector>

namespace lattlight {

// ----------------------------------------------------------------------------
// Atomic states
// ----------------------------------------------------------------------------
//
// Three site-exchangeable occupation laws over an M-site lattice:
//   MottInsulator  — exactly `filling` atoms pinned at every site,
//   Superfluid     — N delocalized atoms; occupations follow the multinomial
//                    law with p = 1/M per site,
//   CoherentAtoms  — independent per-site Poisson occupations with mean
//                    filling mean_atoms / sites (mean_atoms may be fractional).

struct MottInsulator {
  int filling = 1;  // atoms per site, >= 0
};

struct Superfluid {
  int atoms = 0;  // N >= 0
  int sites = 1;  // M >= 1
};

struct CoherentAtoms {
  double mean_atoms = 0.0;  // mean total atom number, >= 0
  int sites = 1;            // M >= 1
};

using AtomicStateSpec = std::variant<MottInsulator, Superfluid, CoherentAtoms>;

void validate(const AtomicStateSpec& state);

// Mean atoms per site, n = N/M (identical at every site by exchangeability).
double mean_filling(const AtomicStateSpec& state);

// Number of lattice sites the state is defined on; MottInsulator is
// translation invariant, so it carries no site count (returns 0 = "any").
int state_sites(const AtomicStateSpec& state);

// ----------------------------------------------------------------------------
// Moment patterns
// ----------------------------------------------------------------------------

// Largest total moment order the Stirling table supports; covers everything
// the fourth-moment machinery needs (orders up to 4 per site, 8 total).
inline constexpr int kMaxMomentOrder = 8;

// Exponent multiplicities (m_1, ..., m_r), one per *distinct* site, giving the
// correlator E[prod_s n_{i_s}^{m_s}].  By exchangeability only the multiset of
// multiplicities matters, never which sites carry them.
struct MomentPattern {
  std::vector<int> multiplicities;

  MomentPattern(std::initializer_list<int> m) : multiplicities(m) {}
  explicit MomentPattern(std::vector<int> m) : multiplicities(std::move(m)) {}

  int distinct_sites() const { return static_cast<int>(multiplicities.size()); }
  int order() const;       // p = sum of multiplicities
  void validate() const;   // r >= 1, each m_s >= 1, order <= kMaxMomentOrder
};

// Stirling number of the second kind S(n, k), exact for n <= kMaxMomentOrder.
double stirling2(int n, int k);

// Falling factorial x(x-1)...(x-m+1); m = 0 gives 1.
double falling_factorial(double x, int m);

// Joint falling-factorial moment E[prod_s n_{i_s}^(m_s)] over distinct sites:
//   MI: prod_s filling^(m_s);  SF: N^(p) / M^p;  coherent: n^p  (p = order).
// The formulas are exchangeable-law expressions and are evaluated as such even
// when the pattern names more sites than the lattice has; callers that need a
// physical pair of sites must ensure M >= 2 themselves.
double joint_factorial_moment(const AtomicStateSpec& state,
                              const MomentPattern& pattern);

// Ordinary joint moment E[prod_s n_{i_s}^{m_s}] via the Stirling expansion
// n^m = sum_k S(m, k) n^(k) applied per site.
double ordinary_joint_moment(const AtomicStateSpec& state,
                             const MomentPattern& pattern);

// ----------------------------------------------------------------------------
// Occupation statistics for a K-site window
// ----------------------------------------------------------------------------

struct OccupationStats {
  double n2 = 0.0;      // <n_i^2>
  double var_n = 0.0;   // (Delta n_i)^2
  double NK2 = 0.0;     // <N_K^2>, N_K = sum of the K window occupations
  double var_NK = 0.0;  // (Delta N_K)^2
  double nanb = 0.0;    // <n_a n_b>, a != b
  double cov = 0.0;     // <delta n_a delta n_b>
};

// All six second-order statistics of a K-site window.  Satisfies
// var_n = n2 - n^2, cov = nanb - n^2 and the exchangeability identity
// var_NK = K*var_n + K*(K-1)*cov.
OccupationStats occupation_stats(const AtomicStateSpec& state, int window_sites);

// Convenience projections of occupation_stats.
double variance(const AtomicStateSpec& state);         // (Delta n_i)^2
double pair_covariance(const AtomicStateSpec& state);  // <delta n_a delta n_b>

}  // namespace lattlight
