#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "lattlight/states.hpp"

using namespace lattlight;

namespace {

double reldev(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("stirling2 and falling_factorial basics") {
  CHECK(stirling2(1, 1) == 1.0);
  CHECK(stirling2(4, 2) == 7.0);
  CHECK(stirling2(8, 3) == 966.0);
  for (int n = 1; n <= kMaxMomentOrder; ++n) {
    CHECK(stirling2(n, 1) == 1.0);
    CHECK(stirling2(n, n) == 1.0);
  }
  // Row sums are the Bell numbers.
  double bell4 = 0.0;
  for (int k = 1; k <= 4; ++k) bell4 += stirling2(4, k);
  CHECK(bell4 == 15.0);
  CHECK_THROWS_AS(stirling2(kMaxMomentOrder + 1, 2), std::invalid_argument);
  // Outside 1..n the count is zero by convention, not an error.
  CHECK(stirling2(3, 0) == 0.0);
  CHECK(stirling2(3, 4) == 0.0);

  CHECK(falling_factorial(30.0, 2) == 870.0);
  CHECK(falling_factorial(2.0, 3) == 0.0);  // hits the zero factor
  CHECK(falling_factorial(0.5, 0) == 1.0);
  CHECK(falling_factorial(0.5, 2) == 0.5 * -0.5);
}

TEST_CASE("mean_filling for the three states") {
  CHECK(mean_filling(MottInsulator{1}) == 1.0);
  CHECK(mean_filling(Superfluid{30, 30}) == 1.0);
  CHECK(mean_filling(CoherentAtoms{15.0, 30}) == 0.5);
  CHECK(state_sites(MottInsulator{2}) == 0);  // any lattice size fits
  CHECK(state_sites(Superfluid{5, 8}) == 8);
}

TEST_CASE("joint factorial moments: pinned examples") {
  // Two sites sharing two delocalized atoms: <n1 n2> = N(N-1)/M^2 = 1/2.
  CHECK(joint_factorial_moment(Superfluid{2, 2}, MomentPattern{1, 1}) == 0.5);
  // Unit filling: <n(n-1)> vanishes for a number state.
  CHECK(joint_factorial_moment(MottInsulator{1}, MomentPattern{2}) == 0.0);
  // Coherent on-site statistics factorize into powers of the per-site mean
  // (2 atoms spread over 4 sites -> filling 0.5).
  CHECK(joint_factorial_moment(CoherentAtoms{2.0, 4}, MomentPattern{2, 1}) ==
        0.125);
  // Order above the atom number kills the factorial moment.
  CHECK(joint_factorial_moment(Superfluid{2, 3}, MomentPattern{3}) == 0.0);
}

TEST_CASE("ordinary joint moments: pinned examples") {
  CHECK(reldev(ordinary_joint_moment(Superfluid{30, 30}, MomentPattern{2}),
               59.0 / 30.0) < 1e-15);
  // Unit per-site filling (total 2 over 2 sites): <n^2> = n^2 + n = 2.
  CHECK(ordinary_joint_moment(CoherentAtoms{2.0, 2}, MomentPattern{2}) == 2.0);
  // Hand-checked enumeration: 3 atoms on 2 sites, <n1^2 n2^2> =
  // (3/8)*4 + (3/8)*4 = 3.
  CHECK(ordinary_joint_moment(Superfluid{3, 2}, MomentPattern{2, 2}) == 3.0);
  // Deterministic occupations: plain powers of the filling.
  CHECK(ordinary_joint_moment(MottInsulator{3}, MomentPattern{4}) == 81.0);
  CHECK(ordinary_joint_moment(MottInsulator{2}, MomentPattern{2, 1, 1}) ==
        16.0);
}

TEST_CASE("coherent moments factorize across sites") {
  for (double n : {0.3, 1.7}) {
    CoherentAtoms state{n, 6};
    for (int a = 1; a <= 3; ++a) {
      for (int b = 1; b <= 3; ++b) {
        const double joint =
            ordinary_joint_moment(state, MomentPattern{a, b});
        const double split =
            ordinary_joint_moment(state, MomentPattern{a}) *
            ordinary_joint_moment(state, MomentPattern{b});
        CHECK(reldev(joint, split) < 1e-13);
      }
    }
  }
}

TEST_CASE("occupation_stats reproduces the closed statistics table") {
  SUBCASE("superfluid") {
    for (auto [n_atoms, m_sites] : {std::pair{30, 30}, {8, 5}, {5, 8}}) {
      Superfluid sf{n_atoms, m_sites};
      const double n = static_cast<double>(n_atoms) / m_sites;
      for (int k = 1; k <= m_sites; ++k) {
        const OccupationStats s = occupation_stats(sf, k);
        CHECK(reldev(s.n2, n * n * (1.0 - 1.0 / n_atoms) + n) < 1e-13);
        CHECK(reldev(s.var_n, n * (1.0 - 1.0 / m_sites)) < 1e-13);
        CHECK(reldev(s.nanb, n * n * (1.0 - 1.0 / n_atoms)) < 1e-13);
        CHECK(reldev(s.cov, -static_cast<double>(n_atoms) /
                                (static_cast<double>(m_sites) * m_sites)) <
              1e-13);
        const double nk = n * k;
        CHECK(reldev(s.var_NK, nk * (1.0 - static_cast<double>(k) / m_sites)) <
              1e-12);
      }
    }
    // Full illumination of a closed system: atom number does not fluctuate.
    const OccupationStats full = occupation_stats(Superfluid{30, 30}, 30);
    CHECK(std::abs(full.var_NK) < 1e-12 * 30.0);
    CHECK(full.NK2 == doctest::Approx(900.0).epsilon(1e-14));
  }

  SUBCASE("coherent") {
    const OccupationStats s = occupation_stats(CoherentAtoms{15.0, 30}, 10);
    const double n = 0.5;
    CHECK(s.n2 == n * n + n);
    CHECK(s.var_n == n);
    CHECK(s.nanb == n * n);
    CHECK(s.cov == 0.0);
    CHECK(s.var_NK == 10 * n);  // Poissonian window number
  }

  SUBCASE("mott insulator is deterministic") {
    const OccupationStats s = occupation_stats(MottInsulator{2}, 7);
    CHECK(s.n2 == 4.0);
    CHECK(s.var_n == 0.0);
    CHECK(s.NK2 == 196.0);
    CHECK(s.var_NK == 0.0);
    CHECK(s.nanb == 4.0);
    CHECK(s.cov == 0.0);
  }
}

TEST_CASE("window variance matches the pair decomposition") {
  // var(N_K) = K var(n) + K(K-1) cov(na, nb) must hold for every state.
  const auto check_state = [](const AtomicStateSpec& state, int sites) {
    for (int k = 1; k <= sites; ++k) {
      const OccupationStats s = occupation_stats(state, k);
      const double expected = k * s.var_n + static_cast<double>(k) * (k - 1) * s.cov;
      CHECK(std::abs(s.var_NK - expected) <=
            1e-12 * std::max(1.0, std::abs(expected)));
      CHECK(variance(state) == s.var_n);
      CHECK(pair_covariance(state) == s.cov);
    }
  };
  for (int m = 1; m <= 30; m += 7) {
    for (int n = 0; n <= 30; n += 6) {
      check_state(Superfluid{n, m}, m);
      check_state(CoherentAtoms{static_cast<double>(n), m}, m);
    }
    check_state(MottInsulator{1}, m);
    check_state(MottInsulator{5}, m);
  }
}

TEST_CASE("ordinary moments agree with a direct Bell-sum evaluation") {
  // Independent re-expansion of the power moment through set partitions of
  // the single-site pattern {p}: E[n^p] = sum_k S(p,k) E[(n)_k].
  for (int p = 1; p <= 6; ++p) {
    double expected = 0.0;
    for (int k = 1; k <= p; ++k) {
      MomentPattern pat{std::vector<int>{k}};
      expected += stirling2(p, k) * joint_factorial_moment(Superfluid{7, 3}, pat);
    }
    const double got =
        ordinary_joint_moment(Superfluid{7, 3}, MomentPattern{std::vector<int>{p}});
    CHECK(reldev(got, expected) < 1e-13);
  }
}

TEST_CASE("moment pattern and state validation") {
  CHECK_THROWS_AS(MomentPattern{std::vector<int>{}}.validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(MomentPattern{0}.validate(), std::invalid_argument);
  CHECK_THROWS_AS((MomentPattern{5, 4}.validate()), std::invalid_argument);
  CHECK_NOTHROW((MomentPattern{4, 4}.validate()));
  CHECK((MomentPattern{2, 1, 1}.order()) == 4);
  CHECK((MomentPattern{2, 1, 1}.distinct_sites()) == 3);

  CHECK_THROWS_AS(validate(AtomicStateSpec{MottInsulator{-1}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate(AtomicStateSpec{Superfluid{-2, 3}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate(AtomicStateSpec{Superfluid{2, 0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate(AtomicStateSpec{CoherentAtoms{-0.5, 3}}),
                  std::invalid_argument);

  CHECK_THROWS_AS(occupation_stats(Superfluid{4, 4}, 5), std::invalid_argument);
  CHECK_THROWS_AS(occupation_stats(Superfluid{4, 4}, 0), std::invalid_argument);
}
