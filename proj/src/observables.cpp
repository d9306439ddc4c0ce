#include "lattlight/observables.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace lattlight {

namespace {

// ----------------------------------------------------------------------------
// Set partitions of up to four elements
// ----------------------------------------------------------------------------

// A partition of {0..n-1} as a restricted-growth assignment: block_of[i] is
// the block index of element i, blocks the total block count.
struct SetPartition {
  std::array<int, 4> block_of{};
  int blocks = 0;
};

std::vector<SetPartition> build_partitions(int n) {
  std::vector<SetPartition> out;
  SetPartition current;
  const auto recurse = [&](auto&& self, int pos, int used) -> void {
    if (pos == n) {
      current.blocks = used;
      out.push_back(current);
      return;
    }
    for (int b = 0; b <= used; ++b) {
      current.block_of[static_cast<size_t>(pos)] = b;
      self(self, pos + 1, std::max(used, b + 1));
    }
  };
  recurse(recurse, 0, 0);
  return out;
}

// Partition lists for 1..4 elements (1, 2, 5 and 15 partitions).
const std::array<std::vector<SetPartition>, 5>& partition_tables() {
  static const std::array<std::vector<SetPartition>, 5> tables = [] {
    std::array<std::vector<SetPartition>, 5> t;
    for (int n = 1; n <= 4; ++n) {
      t[static_cast<size_t>(n)] = build_partitions(n);
    }
    return t;
  }();
  return tables;
}

// ----------------------------------------------------------------------------
// Four-point correlator values by coincidence pattern
// ----------------------------------------------------------------------------

// The five joint moments a quadruple index sum can hit, keyed by the multiset
// of index multiplicities.
struct FourPointMoments {
  double m4;     // <n^4>
  double m31;    // <n_a^3 n_b>
  double m22;    // <n_a^2 n_b^2>
  double m211;   // <n_a^2 n_b n_c>
  double m1111;  // <n_a n_b n_c n_d>
};

FourPointMoments four_point_moments(const AtomicStateSpec& s) {
  return FourPointMoments{
      ordinary_joint_moment(s, {4}), ordinary_joint_moment(s, {3, 1}),
      ordinary_joint_moment(s, {2, 2}), ordinary_joint_moment(s, {2, 1, 1}),
      ordinary_joint_moment(s, {1, 1, 1, 1})};
}

double moment_for_blocks(const FourPointMoments& fm, int blocks, int largest) {
  switch (blocks) {
    case 1:
      return fm.m4;
    case 2:
      return largest == 3 ? fm.m31 : fm.m22;
    case 3:
      return fm.m211;
    default:
      return fm.m1111;
  }
}

// Guard shared by every closed-form observable: a window larger than the
// state's lattice is meaningless.
void check_window(const CouplingSet& c, const AtomicStateSpec& s) {
  validate(s);
  if (c.size() < 1) {
    throw std::invalid_argument("coupling set is empty");
  }
  const int m = state_sites(s);
  if (m > 0 && c.size() > m) {
    throw std::invalid_argument("coupling window exceeds the state's lattice");
  }
}

}  // namespace

// ----------------------------------------------------------------------------
// CavityParams
// ----------------------------------------------------------------------------

void CavityParams::validate() const {
  if (delta_0a == 0.0 || !std::isfinite(delta_0a)) {
    throw std::invalid_argument("probe-atom detuning must be nonzero and finite");
  }
  if (kappa < 0.0 || !std::isfinite(kappa) || !std::isfinite(delta_01)) {
    throw std::invalid_argument("cavity decay must be >= 0 and detunings finite");
  }
  if (kappa == 0.0 && delta_01 == 0.0) {
    throw std::invalid_argument(
        "cavity decay and probe-cavity detuning cannot both vanish");
  }
  if (!std::isfinite(g0) || !std::isfinite(a0)) {
    throw std::invalid_argument("coupling and probe amplitude must be finite");
  }
}

Complex CavityParams::field_prefactor() const {
  validate();
  // C = i g0^2 a0 / [delta_0a (i delta_01 - kappa)]
  const Complex numerator(0.0, g0 * g0 * a0);
  const Complex denominator = delta_0a * Complex(-kappa, delta_01);
  return numerator / denominator;
}

// ----------------------------------------------------------------------------
// First and second moments of D
// ----------------------------------------------------------------------------

Complex expected_D(const CouplingSet& c, const AtomicStateSpec& s) {
  check_window(c, s);
  return mean_filling(s) * c.sumA;
}

double expected_DstarD(const CouplingSet& c, const AtomicStateSpec& s) {
  check_window(c, s);
  const double n2 = ordinary_joint_moment(s, {2});
  if (c.size() == 1) {
    return n2 * c.sumAbs2;  // single site: no pair term exists
  }
  const double nanb = ordinary_joint_moment(s, {1, 1});
  return nanb * std::norm(c.sumA) + (n2 - nanb) * c.sumAbs2;
}

double noise_R(const CouplingSet& c, const AtomicStateSpec& s) {
  check_window(c, s);
  const double var = variance(s);
  if (c.size() == 1) {
    return var * c.sumAbs2;
  }
  const double cov = pair_covariance(s);
  return cov * std::norm(c.sumA) + (var - cov) * c.sumAbs2;
}

double noise_R_traveling(int illuminated, const AtomicStateSpec& s, double alpha) {
  validate(s);
  if (illuminated < 1) {
    throw std::invalid_argument("traveling-wave noise needs at least one site");
  }
  const int m = state_sites(s);
  if (m > 0 && illuminated > m) {
    throw std::invalid_argument("coupling window exceeds the state's lattice");
  }
  const double k = static_cast<double>(illuminated);
  const double var = variance(s);
  if (illuminated == 1) {
    return var;
  }
  const double cov = pair_covariance(s);
  return cov * structure_function(illuminated, alpha) + (var - cov) * k;
}

Complex expected_D2(const CouplingSet& c, const AtomicStateSpec& s) {
  check_window(c, s);
  const double n2 = ordinary_joint_moment(s, {2});
  if (c.size() == 1) {
    return n2 * c.sumSq;
  }
  const double nanb = ordinary_joint_moment(s, {1, 1});
  return nanb * (c.sumA * c.sumA - c.sumSq) + n2 * c.sumSq;
}

// ----------------------------------------------------------------------------
// Fourth moment <|D|^4>
// ----------------------------------------------------------------------------

double fourth_moment_absD4_reference(const CouplingSet& c,
                                     const AtomicStateSpec& s) {
  check_window(c, s);
  const auto& a = c.coefficients;
  const int k = c.size();
  const FourPointMoments fm = four_point_moments(s);

  // Literal quadruple sum over conj(A_i) A_j conj(A_p) A_q <n_i n_j n_p n_q>,
  // the correlator resolved purely by which indices coincide.
  Complex acc = 0.0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      for (int p = 0; p < k; ++p) {
        for (int q = 0; q < k; ++q) {
          const int idx[4] = {i, j, p, q};
          int reps[4];
          int counts[4];
          int distinct = 0;
          for (int t = 0; t < 4; ++t) {
            int found = -1;
            for (int r = 0; r < distinct; ++r) {
              if (reps[r] == idx[t]) {
                found = r;
                break;
              }
            }
            if (found < 0) {
              reps[distinct] = idx[t];
              counts[distinct] = 1;
              ++distinct;
            } else {
              ++counts[found];
            }
          }
          int largest = 0;
          for (int r = 0; r < distinct; ++r) {
            largest = std::max(largest, counts[r]);
          }
          const double moment = moment_for_blocks(fm, distinct, largest);
          acc += std::conj(a[i]) * a[j] * std::conj(a[p]) * a[q] * moment;
        }
      }
    }
  }
  return acc.real();
}

double fourth_moment_absD4(const CouplingSet& c, const AtomicStateSpec& s) {
  check_window(c, s);
  const FourPointMoments fm = four_point_moments(s);

  // Power sums p[a][b] = sum_s conj(A_s)^a A_s^b for a, b <= 2; any block of
  // the four positions (two conjugated, two plain) maps to one of these.
  Complex p[3][3];
  p[0][1] = c.sumA;
  p[1][0] = std::conj(c.sumA);
  p[1][1] = Complex(c.sumAbs2, 0.0);
  p[0][2] = c.sumSq;
  p[2][0] = std::conj(c.sumSq);
  p[1][2] = c.sumAbs2Weighted;
  p[2][1] = std::conj(c.sumAbs2Weighted);
  p[2][2] = Complex(c.sumAbs4, 0.0);

  // Conjugation pattern of <|D|^4> = <D* D D* D>: positions 0 and 2 carry the
  // conjugated coefficient.
  constexpr int conj_count[4] = {1, 0, 1, 0};

  // Moebius coefficients of the "all blocks distinct" inversion: a class of m
  // merged blocks contributes (-1)^(m-1) (m-1)! times the merged power sum.
  constexpr double mobius[5] = {0.0, 1.0, -1.0, 2.0, -6.0};

  const auto& partitions4 = partition_tables()[4];
  Complex total = 0.0;

  for (const auto& part : partitions4) {
    // Count block sizes and the conj/plain composition of every block.
    int size[4] = {0, 0, 0, 0};
    int conj_in[4] = {0, 0, 0, 0};
    for (int pos = 0; pos < 4; ++pos) {
      const int b = part.block_of[static_cast<size_t>(pos)];
      ++size[b];
      conj_in[b] += conj_count[pos];
    }
    int largest = 0;
    for (int b = 0; b < part.blocks; ++b) {
      largest = std::max(largest, size[b]);
    }
    const double moment = moment_for_blocks(fm, part.blocks, largest);

    // Distinct-site sum over this coincidence pattern: Moebius inversion over
    // every way of merging the pattern's blocks, each class contributing its
    // merged power sum.
    Complex distinct_sum = 0.0;
    for (const auto& merge : partition_tables()[static_cast<size_t>(part.blocks)]) {
      Complex term = 1.0;
      for (int cls = 0; cls < merge.blocks; ++cls) {
        int members = 0;
        int a_count = 0;
        int b_count = 0;
        for (int b = 0; b < part.blocks; ++b) {
          if (merge.block_of[static_cast<size_t>(b)] == cls) {
            ++members;
            a_count += conj_in[b];
            b_count += size[b] - conj_in[b];
          }
        }
        term *= mobius[members] * p[a_count][b_count];
      }
      distinct_sum += term;
    }
    total += moment * distinct_sum;
  }
  return total.real();
}

// ----------------------------------------------------------------------------
// Photon statistics and quadratures
// ----------------------------------------------------------------------------

PhotonStats photon_stats(const CouplingSet& c, const AtomicStateSpec& s,
                         const CavityParams& p) {
  const double c2 = std::norm(p.field_prefactor());
  const double dstar_d = expected_DstarD(c, s);
  const double abs_d4 = fourth_moment_absD4(c, s);
  PhotonStats stats;
  stats.number = c2 * dstar_d;
  stats.variance = c2 * c2 * (abs_d4 - dstar_d * dstar_d) + c2 * dstar_d;
  return stats;
}

double quadrature_variance(const CouplingSet& c, const AtomicStateSpec& s,
                           const CavityParams& p, double phase) {
  const Complex prefactor = p.field_prefactor();
  const double r = noise_R(c, s);
  const Complex amp = expected_D(c, s);
  const Complex anisotropy = expected_D2(c, s) - amp * amp;
  const Complex rotated =
      std::polar(1.0, -2.0 * phase) * prefactor * prefactor * anisotropy;
  return 0.25 + 0.5 * std::norm(prefactor) * r + 0.5 * rotated.real();
}

double incoherent_intensity(const AtomicStateSpec& s, int illuminated) {
  validate(s);
  if (illuminated < 1) {
    throw std::invalid_argument("incoherent intensity needs at least one site");
  }
  const int m = state_sites(s);
  if (m > 0 && illuminated > m) {
    throw std::invalid_argument("coupling window exceeds the state's lattice");
  }
  return static_cast<double>(illuminated) * ordinary_joint_moment(s, {2});
}

ObservablesReport evaluate(const CouplingSet& c, const AtomicStateSpec& s,
                           const CavityParams& p, double quad_phase) {
  ObservablesReport report;
  report.amp_D = expected_D(c, s);
  report.classical_intensity = std::norm(report.amp_D);
  report.DstarD = expected_DstarD(c, s);
  report.R = noise_R(c, s);
  report.absD4 = fourth_moment_absD4(c, s);
  report.varAbsD2 = report.absD4 - report.DstarD * report.DstarD;
  const double c2 = std::norm(p.field_prefactor());
  report.photon_number = c2 * report.DstarD;
  report.photon_variance = c2 * c2 * report.varAbsD2 + c2 * report.DstarD;
  report.D2 = expected_D2(c, s);
  report.quad_variance = quadrature_variance(c, s, p, quad_phase);
  return report;
}

// ----------------------------------------------------------------------------
// Presets
// ----------------------------------------------------------------------------

ObservablesReport preset_transverse(const AtomicStateSpec& s,
                                    const CavityParams& p, int illuminated) {
  LatticeGeometry geom;
  geom.sites = illuminated;
  geom.period = 1.0;
  geom.illuminated = illuminated;
  geom.first_site = 1;
  ModeSpec probe{ModeKind::traveling, 2.0, 0.0};
  ModeSpec detect{ModeKind::traveling, 2.0, std::numbers::pi / 2.0};
  return evaluate(couplings(geom, probe, detect), s, p);
}

double preset_self_organized(const CavityParams& p, double window_atoms) {
  if (!(window_atoms >= 0.0) || !std::isfinite(window_atoms)) {
    throw std::invalid_argument("window atom number must be finite and >= 0");
  }
  return std::norm(p.field_prefactor()) * window_atoms * window_atoms;
}

}  // namespace lattlight
