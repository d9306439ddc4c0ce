#include "lattlight/states.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lattlight {

namespace {

// Stirling numbers of the second kind S(n, k) for n, k <= kMaxMomentOrder,
// built once by the triangular recurrence S(n,k) = k*S(n-1,k) + S(n-1,k-1).
// All entries are small integers, so the table is exact in double precision.
constexpr int kTableSize = kMaxMomentOrder + 1;
using StirlingTable = std::array<std::array<double, kTableSize>, kTableSize>;

constexpr StirlingTable make_stirling_table() {
  StirlingTable s{};
  s[0][0] = 1.0;
  for (int n = 1; n < kTableSize; ++n) {
    for (int k = 1; k <= n; ++k) {
      s[n][k] = k * s[n - 1][k] + s[n - 1][k - 1];
    }
  }
  return s;
}

constexpr StirlingTable kStirling = make_stirling_table();

// Integer power by repeated multiplication; exact whenever base and all
// intermediate products are exactly representable.
double int_pow(double base, int exponent) {
  double result = 1.0;
  for (int i = 0; i < exponent; ++i) {
    result *= base;
  }
  return result;
}

}  // namespace

// ----------------------------------------------------------------------------
// AtomicStateSpec
// ----------------------------------------------------------------------------

void validate(const AtomicStateSpec& state) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, MottInsulator>) {
          if (s.filling < 0) {
            throw std::invalid_argument("Mott-insulator filling must be >= 0");
          }
        } else if constexpr (std::is_same_v<T, Superfluid>) {
          if (s.sites < 1) {
            throw std::invalid_argument("superfluid needs at least one site");
          }
          if (s.atoms < 0) {
            throw std::invalid_argument("superfluid atom number must be >= 0");
          }
        } else {
          if (s.sites < 1) {
            throw std::invalid_argument("coherent state needs at least one site");
          }
          if (!(s.mean_atoms >= 0.0) || !std::isfinite(s.mean_atoms)) {
            throw std::invalid_argument(
                "coherent mean atom number must be finite and >= 0");
          }
        }
      },
      state);
}

double mean_filling(const AtomicStateSpec& state) {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, MottInsulator>) {
          return static_cast<double>(s.filling);
        } else if constexpr (std::is_same_v<T, Superfluid>) {
          return static_cast<double>(s.atoms) / static_cast<double>(s.sites);
        } else {
          return s.mean_atoms / static_cast<double>(s.sites);
        }
      },
      state);
}

int state_sites(const AtomicStateSpec& state) {
  return std::visit(
      [](const auto& s) -> int {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, MottInsulator>) {
          return 0;  // defined on any lattice
        } else {
          return s.sites;
        }
      },
      state);
}

// ----------------------------------------------------------------------------
// Moment patterns and the factorial-moment engine
// ----------------------------------------------------------------------------

int MomentPattern::order() const {
  int p = 0;
  for (int m : multiplicities) {
    p += m;
  }
  return p;
}

void MomentPattern::validate() const {
  if (multiplicities.empty()) {
    throw std::invalid_argument("moment pattern must name at least one site");
  }
  for (int m : multiplicities) {
    if (m < 1) {
      throw std::invalid_argument("moment multiplicities must be >= 1");
    }
  }
  if (order() > kMaxMomentOrder) {
    throw std::invalid_argument("moment order " + std::to_string(order()) +
                                " exceeds the supported limit of " +
                                std::to_string(kMaxMomentOrder));
  }
}

double stirling2(int n, int k) {
  if (n < 0 || n > kMaxMomentOrder) {
    throw std::invalid_argument("stirling2 order out of the tabulated range");
  }
  if (k < 0 || k > n) {
    return 0.0;
  }
  return kStirling[n][k];
}

double falling_factorial(double x, int m) {
  if (m < 0) {
    throw std::invalid_argument("falling factorial order must be >= 0");
  }
  double result = 1.0;
  for (int i = 0; i < m; ++i) {
    result *= x - static_cast<double>(i);
  }
  return result;
}

double joint_factorial_moment(const AtomicStateSpec& state,
                              const MomentPattern& pattern) {
  pattern.validate();
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, MottInsulator>) {
          // Deterministic occupations: E[prod n^(m_s)] = prod filling^(m_s).
          double result = 1.0;
          for (int m : pattern.multiplicities) {
            result *= falling_factorial(static_cast<double>(s.filling), m);
          }
          return result;
        } else if constexpr (std::is_same_v<T, Superfluid>) {
          // Multinomial occupation law: E[prod n_i^(m_s)] = N^(p) / M^p.
          const int p = pattern.order();
          return falling_factorial(static_cast<double>(s.atoms), p) /
                 int_pow(static_cast<double>(s.sites), p);
        } else {
          // Independent Poisson sites: E[prod n_i^(m_s)] = n^p.
          const int p = pattern.order();
          const double n = s.mean_atoms / static_cast<double>(s.sites);
          return int_pow(n, p);
        }
      },
      state);
}

double ordinary_joint_moment(const AtomicStateSpec& state,
                             const MomentPattern& pattern) {
  pattern.validate();
  const auto& mult = pattern.multiplicities;
  const int r = pattern.distinct_sites();

  // Per-site Stirling expansion n^m = sum_k S(m,k) n^(k), combined over sites:
  // iterate every choice (k_1 <= m_1, ..., k_r <= m_r) with k_s >= 1 (the
  // S(m, 0) terms vanish for m >= 1).
  std::vector<int> k(static_cast<size_t>(r), 1);
  double total = 0.0;
  const auto recurse = [&](auto&& self, int site, double coeff) -> void {
    if (site == r) {
      total += coeff * joint_factorial_moment(state, MomentPattern(k));
      return;
    }
    for (int ks = 1; ks <= mult[static_cast<size_t>(site)]; ++ks) {
      k[static_cast<size_t>(site)] = ks;
      self(self, site + 1,
           coeff * stirling2(mult[static_cast<size_t>(site)], ks));
    }
  };
  recurse(recurse, 0, 1.0);
  return total;
}

// ----------------------------------------------------------------------------
// Window statistics
// ----------------------------------------------------------------------------

OccupationStats occupation_stats(const AtomicStateSpec& state, int window_sites) {
  validate(state);
  if (window_sites < 1) {
    throw std::invalid_argument("window must contain at least one site");
  }
  const int m = state_sites(state);
  if (m > 0 && window_sites > m) {
    throw std::invalid_argument("window of " + std::to_string(window_sites) +
                                " sites exceeds the lattice of " +
                                std::to_string(m) + " sites");
  }

  const double n = mean_filling(state);
  const double k = static_cast<double>(window_sites);

  OccupationStats stats;
  stats.n2 = ordinary_joint_moment(state, {2});
  stats.var_n = stats.n2 - n * n;
  stats.nanb = ordinary_joint_moment(state, {1, 1});
  stats.cov = stats.nanb - n * n;
  // <N_K^2> = K<n^2> + K(K-1)<n_a n_b> by exchangeability.
  stats.NK2 = k * stats.n2 + k * (k - 1.0) * stats.nanb;
  stats.var_NK = stats.NK2 - (k * n) * (k * n);
  return stats;
}

double variance(const AtomicStateSpec& state) {
  const double n = mean_filling(state);
  return ordinary_joint_moment(state, {2}) - n * n;
}

double pair_covariance(const AtomicStateSpec& state) {
  const double n = mean_filling(state);
  return ordinary_joint_moment(state, {1, 1}) - n * n;
}

}  // namespace lattlight
