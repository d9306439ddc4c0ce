#pragma once

#include <cstdint>
#include <stdexcept>

#include <Eigen/Core>

#include "lattlight/geometry.hpp"
#include "lattlight/states.hpp"

namespace lattlight {

// ----------------------------------------------------------------------------
// Ground-truth engine
// ----------------------------------------------------------------------------
//
// D = sum_i A_i n_i is diagonal in the occupation basis, so every implemented
// observable is a classical average over occupation configurations.  This
// module computes those averages directly — by exhaustive enumeration or by
// Monte Carlo — sharing nothing with the closed-form paths beyond the coupling
// coefficients themselves.

// One occupation configuration (n_1, ..., n_M).
struct OccupationConfig {
  Eigen::ArrayXi occupations;
};

struct OracleReport {
  Complex E_D{};          // E[D]
  double E_DstarD = 0.0;  // E[|D|^2]
  double E_absD4 = 0.0;   // E[|D|^4]
  Complex E_D2{};         // E[D^2] (unconjugated)

  // Standard errors of the estimates; zero for exact evaluation.
  double stderr_E_D = 0.0;
  double stderr_E_DstarD = 0.0;
  double stderr_E_absD4 = 0.0;
  double stderr_E_D2 = 0.0;

  std::uint64_t count = 0;   // configurations enumerated / samples drawn
  bool monte_carlo = false;

  double noise() const { return E_DstarD - std::norm(E_D); }
};

// Thrown when an exact enumeration would visit more compositions than the cap
// allows; the caller should fall back to mc_expectations or raise the cap.
class CapExceeded : public std::runtime_error {
 public:
  CapExceeded(std::uint64_t required_configs, std::uint64_t cap_limit);

  std::uint64_t required = 0;
  std::uint64_t cap = 0;
};

inline constexpr std::uint64_t kDefaultConfigCap = 10'000'000;

// Probability of one configuration under the state's occupation law:
// MI point mass, SF multinomial N!/(prod n_i!) M^-N, coherent per-site Poisson
// product.  SF weights switch to log-space evaluation for N > 20 to avoid
// factorial overflow.
double config_weight(const AtomicStateSpec& state, const OccupationConfig& cfg);

// Number of compositions of `atoms` into `sites` nonnegative parts,
// C(N+M-1, M-1); returns UINT64_MAX on overflow.
std::uint64_t composition_count(int atoms, int sites);

// Exact E[D], E[|D|^2], E[|D|^4], E[D^2] under config_weight.  The couplings
// act on window sites first_site .. first_site + K - 1 (1-based).  MI and SF
// enumerate their full configuration support (SF in colexicographic order,
// streamed); the coherent law factorizes over sites and is evaluated from
// per-site Poisson moment series truncated once the cumulative tail mass drops
// below 1e-12.
OracleReport exact_expectations(const AtomicStateSpec& state,
                                const CouplingSet& couplings,
                                int first_site = 1,
                                std::uint64_t cap = kDefaultConfigCap);

// Monte Carlo estimates of the same moments with standard errors.
// Sampling: SF = N independent uniform site draws, coherent = per-site Poisson
// draws, MI = constant.  Samples are processed in fixed blocks whose RNG
// streams depend only on (seed, block index) and whose partial sums are
// reduced in block order, so results are bit-identical for any worker count.
// workers = 0 picks the hardware concurrency.
OracleReport mc_expectations(const AtomicStateSpec& state,
                             const CouplingSet& couplings,
                             std::uint64_t samples, std::uint64_t seed,
                             int first_site = 1, int workers = 0);

}  // namespace lattlight
