#include "lattlight/oracle.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace lattlight {

namespace {

// ----------------------------------------------------------------------------
// Weights
// ----------------------------------------------------------------------------

// Exact factorials up to 20! fit in a 64-bit integer.
double small_factorial(int n) {
  std::uint64_t f = 1;
  for (int i = 2; i <= n; ++i) {
    f *= static_cast<std::uint64_t>(i);
  }
  return static_cast<double>(f);
}

double superfluid_weight(const Superfluid& sf, const Eigen::ArrayXi& occ) {
  const int n = sf.atoms;
  const int m = sf.sites;
  if (n <= 20) {
    // Multinomial N! / (prod n_i!) * M^-N with exact small factorials.
    double coeff = small_factorial(n);
    for (int i = 0; i < m; ++i) {
      coeff /= small_factorial(occ[i]);
    }
    double mp = 1.0;
    for (int i = 0; i < n; ++i) {
      mp *= static_cast<double>(m);
    }
    return coeff / mp;
  }
  // Log-space evaluation avoids factorial overflow for large N.
  double logw = std::lgamma(static_cast<double>(n) + 1.0) -
                static_cast<double>(n) * std::log(static_cast<double>(m));
  for (int i = 0; i < m; ++i) {
    logw -= std::lgamma(static_cast<double>(occ[i]) + 1.0);
  }
  return std::exp(logw);
}

// Poisson pmf e^-n n^k / k! by iterated multiplication.
double poisson_pmf(double mean, int k) {
  double w = std::exp(-mean);
  for (int j = 1; j <= k; ++j) {
    w *= mean / static_cast<double>(j);
  }
  return w;
}

// ----------------------------------------------------------------------------
// Coherent per-site moment series
// ----------------------------------------------------------------------------

// Raw Poisson moments m_p = E[j^p], p = 0..4, summed until the remaining tail
// mass is below 1e-12 *and* the next fourth-moment term is negligible relative
// to the accumulated value (the second condition only tightens the stated
// truncation; it buys accuracy for moment orders beyond the mass itself).
struct PoissonMoments {
  double m[5] = {0.0, 0.0, 0.0, 0.0, 0.0};
  std::uint64_t terms = 0;
};

PoissonMoments poisson_moment_series(double mean) {
  PoissonMoments out;
  double w = std::exp(-mean);
  double cum = 0.0;
  int j = 0;
  while (true) {
    const double dj = static_cast<double>(j);
    const double j2 = dj * dj;
    out.m[0] += w;
    out.m[1] += w * dj;
    out.m[2] += w * j2;
    out.m[3] += w * j2 * dj;
    out.m[4] += w * j2 * j2;
    cum += w;
    ++out.terms;
    const double w_next = w * mean / static_cast<double>(j + 1);
    const double next_fourth = w_next * (dj + 1.0) * (dj + 1.0) * (dj + 1.0) * (dj + 1.0);
    if (cum >= 1.0 - 1e-12 && next_fourth < 1e-16 * (out.m[4] + 1.0)) {
      break;
    }
    w = w_next;
    ++j;
  }
  return out;
}

// Fourth moment of D for independent identically distributed sites: the
// quadruple sum with E[prod n^mult] = prod m[count over each distinct index].
double coherent_fourth_moment(const ComplexArray& a, const double m[5]) {
  const int k = static_cast<int>(a.size());
  std::complex<long double> acc = 0.0L;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      for (int p = 0; p < k; ++p) {
        for (int q = 0; q < k; ++q) {
          // Multiplicity of each distinct site index among (i, j, p, q).
          int idx[4] = {i, j, p, q};
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
          double moment = 1.0;
          for (int r = 0; r < distinct; ++r) {
            moment *= m[counts[r]];
          }
          const Complex w = std::conj(a[i]) * a[j] * std::conj(a[p]) * a[q];
          acc += std::complex<long double>(w.real(), w.imag()) *
                 static_cast<long double>(moment);
        }
      }
    }
  }
  return static_cast<double>(acc.real());
}

OracleReport coherent_exact(const CoherentAtoms& coh, const ComplexArray& a) {
  const double n = coh.mean_atoms / static_cast<double>(coh.sites);
  const PoissonMoments pm = poisson_moment_series(n);
  const int k = static_cast<int>(a.size());

  OracleReport report;
  report.count = pm.terms;

  std::complex<long double> e_d = 0.0L;
  for (int i = 0; i < k; ++i) {
    e_d += std::complex<long double>(a[i].real(), a[i].imag()) *
           static_cast<long double>(pm.m[1]);
  }
  report.E_D = Complex(static_cast<double>(e_d.real()),
                       static_cast<double>(e_d.imag()));

  std::complex<long double> e_d2 = 0.0L;
  std::complex<long double> e_dstar_d = 0.0L;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const long double pair_moment =
          (i == j) ? static_cast<long double>(pm.m[2])
                   : static_cast<long double>(pm.m[1]) * pm.m[1];
      const Complex plain = a[i] * a[j];
      const Complex mixed = std::conj(a[i]) * a[j];
      e_d2 += std::complex<long double>(plain.real(), plain.imag()) * pair_moment;
      e_dstar_d += std::complex<long double>(mixed.real(), mixed.imag()) * pair_moment;
    }
  }
  report.E_D2 = Complex(static_cast<double>(e_d2.real()),
                        static_cast<double>(e_d2.imag()));
  report.E_DstarD = static_cast<double>(e_dstar_d.real());
  report.E_absD4 = coherent_fourth_moment(a, pm.m);
  return report;
}

// ----------------------------------------------------------------------------
// Monte Carlo plumbing
// ----------------------------------------------------------------------------

constexpr std::uint64_t kBlockSize = 4096;

// splitmix64-style finalizer; maps (seed, block) to an independent RNG seed so
// every block owns a stream that does not depend on worker scheduling.
std::uint64_t block_seed(std::uint64_t seed, std::uint64_t block) {
  std::uint64_t x = seed + (block + 1) * 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Knuth's product-of-uniforms Poisson sampler; fine for the modest means used
// here.
int poisson_draw(std::mt19937_64& rng, double exp_neg_mean) {
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= uniform01(rng);
  } while (p > exp_neg_mean);
  return k - 1;
}

struct BlockSums {
  Complex sum_d{};
  Complex sum_d2{};
  double sum_abs2 = 0.0;
  double sum_abs4 = 0.0;
  double sum_abs8 = 0.0;
};

// Sample standard error of the mean from sum(x), sum(|x|^2), n; for complex x
// the component variances are combined.  Clamped at zero against rounding.
double stderr_of_mean(double sum_sq, double norm_mean_sq, std::uint64_t n) {
  if (n < 2) {
    return 0.0;
  }
  const double nn = static_cast<double>(n);
  const double var = std::max(0.0, sum_sq / nn - norm_mean_sq) * nn / (nn - 1.0);
  return std::sqrt(var / nn);
}

}  // namespace

// ----------------------------------------------------------------------------
// Public operations
// ----------------------------------------------------------------------------

CapExceeded::CapExceeded(std::uint64_t required_configs, std::uint64_t cap_limit)
    : std::runtime_error("exact enumeration needs " +
                         std::to_string(required_configs) +
                         " configurations, above the cap of " +
                         std::to_string(cap_limit) +
                         "; use Monte Carlo sampling or raise the cap"),
      required(required_configs),
      cap(cap_limit) {}

double config_weight(const AtomicStateSpec& state, const OccupationConfig& cfg) {
  validate(state);
  const auto& occ = cfg.occupations;
  if (occ.size() < 1) {
    throw std::invalid_argument("occupation configuration is empty");
  }
  if ((occ < 0).any()) {
    throw std::invalid_argument("occupations must be nonnegative");
  }

  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, MottInsulator>) {
          return (occ == s.filling).all() ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, Superfluid>) {
          if (static_cast<int>(occ.size()) != s.sites) {
            throw std::invalid_argument(
                "configuration length does not match the superfluid site count");
          }
          if (occ.sum() != s.atoms) {
            return 0.0;
          }
          return superfluid_weight(s, occ);
        } else {
          if (static_cast<int>(occ.size()) != s.sites) {
            throw std::invalid_argument(
                "configuration length does not match the coherent site count");
          }
          const double n = s.mean_atoms / static_cast<double>(s.sites);
          double w = 1.0;
          for (int i = 0; i < occ.size(); ++i) {
            w *= poisson_pmf(n, occ[i]);
          }
          return w;
        }
      },
      state);
}

std::uint64_t composition_count(int atoms, int sites) {
  if (atoms < 0 || sites < 1) {
    throw std::invalid_argument("composition_count needs atoms >= 0, sites >= 1");
  }
  // C(N+M-1, M-1) built multiplicatively; each intermediate is itself a
  // binomial coefficient, so the division is exact at every step.
  std::uint64_t c = 1;
  for (int i = 1; i <= sites - 1; ++i) {
    std::uint64_t mul;
    if (__builtin_mul_overflow(c, static_cast<std::uint64_t>(atoms + i), &mul)) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    c = mul / static_cast<std::uint64_t>(i);
  }
  return c;
}

OracleReport exact_expectations(const AtomicStateSpec& state,
                                const CouplingSet& couplings, int first_site,
                                std::uint64_t cap) {
  validate(state);
  const auto& a = couplings.coefficients;
  const int k = static_cast<int>(a.size());
  if (k < 1) {
    throw std::invalid_argument("coupling set is empty");
  }
  if (first_site < 1) {
    throw std::invalid_argument("first illuminated site index is 1-based");
  }
  const int m = state_sites(state);
  if (m > 0 && first_site + k - 1 > m) {
    throw std::invalid_argument("illuminated window exceeds the state's lattice");
  }

  if (const auto* mi = std::get_if<MottInsulator>(&state)) {
    // Point mass: D is deterministic.
    Complex d = 0.0;
    for (int i = 0; i < k; ++i) {
      d += a[i];
    }
    d *= static_cast<double>(mi->filling);
    OracleReport report;
    report.E_D = d;
    report.E_DstarD = std::norm(d);
    report.E_absD4 = std::norm(d) * std::norm(d);
    report.E_D2 = d * d;
    report.count = 1;
    return report;
  }

  if (const auto* coh = std::get_if<CoherentAtoms>(&state)) {
    return coherent_exact(*coh, a);
  }

  // Superfluid: stream every composition of N atoms over M sites in
  // colexicographic order.
  const auto& sf = std::get<Superfluid>(state);
  const std::uint64_t configs =
      composition_count(sf.atoms, sf.sites);
  if (configs > cap) {
    throw CapExceeded(configs, cap);
  }

  OccupationConfig cfg;
  cfg.occupations = Eigen::ArrayXi::Zero(sf.sites);
  cfg.occupations[0] = sf.atoms;

  long double wsum = 0.0L;
  std::complex<long double> acc_d = 0.0L;
  std::complex<long double> acc_d2 = 0.0L;
  long double acc_abs2 = 0.0L;
  long double acc_abs4 = 0.0L;
  std::uint64_t visited = 0;

  const int base = first_site - 1;
  while (true) {
    const long double w = config_weight(state, cfg);
    Complex d = 0.0;
    for (int i = 0; i < k; ++i) {
      d += a[i] * static_cast<double>(cfg.occupations[base + i]);
    }
    const long double abs2 = std::norm(d);
    wsum += w;
    acc_d += w * std::complex<long double>(d.real(), d.imag());
    const Complex d2 = d * d;
    acc_d2 += w * std::complex<long double>(d2.real(), d2.imag());
    acc_abs2 += w * abs2;
    acc_abs4 += w * abs2 * abs2;
    ++visited;

    // Colex successor: move the lowest nonzero count up one site, dumping its
    // remainder back to the first site; (0, ..., 0, N) is the last config.
    int lowest = 0;
    while (lowest < sf.sites && cfg.occupations[lowest] == 0) {
      ++lowest;
    }
    if (lowest >= sf.sites - 1) {
      break;  // covers both the final config and the N = 0 single config
    }
    const int t = cfg.occupations[lowest];
    cfg.occupations[lowest] = 0;
    cfg.occupations[0] = t - 1;
    cfg.occupations[lowest + 1] += 1;
  }

  OracleReport report;
  report.E_D = Complex(static_cast<double>(acc_d.real() / wsum),
                       static_cast<double>(acc_d.imag() / wsum));
  report.E_DstarD = static_cast<double>(acc_abs2 / wsum);
  report.E_absD4 = static_cast<double>(acc_abs4 / wsum);
  report.E_D2 = Complex(static_cast<double>(acc_d2.real() / wsum),
                        static_cast<double>(acc_d2.imag() / wsum));
  report.count = visited;
  return report;
}

OracleReport mc_expectations(const AtomicStateSpec& state,
                             const CouplingSet& couplings,
                             std::uint64_t samples, std::uint64_t seed,
                             int first_site, int workers) {
  validate(state);
  const auto& a = couplings.coefficients;
  const int k = static_cast<int>(a.size());
  if (k < 1) {
    throw std::invalid_argument("coupling set is empty");
  }
  if (samples < 1) {
    throw std::invalid_argument("Monte Carlo needs at least one sample");
  }
  if (first_site < 1) {
    throw std::invalid_argument("first illuminated site index is 1-based");
  }
  const int m = state_sites(state);
  if (m > 0 && first_site + k - 1 > m) {
    throw std::invalid_argument("illuminated window exceeds the state's lattice");
  }

  const std::uint64_t nblocks = (samples + kBlockSize - 1) / kBlockSize;
  std::vector<BlockSums> blocks(nblocks);

  const int base = first_site - 1;
  const auto run_block = [&](std::uint64_t b) {
    std::mt19937_64 rng(block_seed(seed, b));
    const std::uint64_t begin = b * kBlockSize;
    const std::uint64_t count = std::min(kBlockSize, samples - begin);
    BlockSums sums;

    for (std::uint64_t s = 0; s < count; ++s) {
      Complex d = 0.0;
      if (const auto* mi = std::get_if<MottInsulator>(&state)) {
        for (int i = 0; i < k; ++i) {
          d += a[i];
        }
        d *= static_cast<double>(mi->filling);
      } else if (const auto* sf = std::get_if<Superfluid>(&state)) {
        // N independent uniform site draws; only window hits contribute.
        const auto sites = static_cast<std::uint64_t>(sf->sites);
        for (int atom = 0; atom < sf->atoms; ++atom) {
          const int site = static_cast<int>(rng() % sites);
          if (site >= base && site < base + k) {
            d += a[site - base];
          }
        }
      } else {
        const auto& coh = std::get<CoherentAtoms>(state);
        const double n = coh.mean_atoms / static_cast<double>(coh.sites);
        const double exp_neg = std::exp(-n);
        for (int i = 0; i < k; ++i) {
          d += a[i] * static_cast<double>(poisson_draw(rng, exp_neg));
        }
      }

      const double abs2 = std::norm(d);
      sums.sum_d += d;
      sums.sum_d2 += d * d;
      sums.sum_abs2 += abs2;
      sums.sum_abs4 += abs2 * abs2;
      sums.sum_abs8 += abs2 * abs2 * abs2 * abs2;
    }
    blocks[b] = sums;
  };

  int nworkers = workers > 0
                     ? workers
                     : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  nworkers = static_cast<int>(
      std::min<std::uint64_t>(static_cast<std::uint64_t>(nworkers), nblocks));

  if (nworkers <= 1) {
    for (std::uint64_t b = 0; b < nblocks; ++b) {
      run_block(b);
    }
  } else {
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(nworkers));
    for (int w = 0; w < nworkers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          const std::uint64_t b = next.fetch_add(1);
          if (b >= nblocks) {
            return;
          }
          run_block(b);
        }
      });
    }
    for (auto& t : pool) {
      t.join();
    }
  }

  // Deterministic reduction: fixed block order, independent of which worker
  // produced each block.
  BlockSums total;
  for (const auto& b : blocks) {
    total.sum_d += b.sum_d;
    total.sum_d2 += b.sum_d2;
    total.sum_abs2 += b.sum_abs2;
    total.sum_abs4 += b.sum_abs4;
    total.sum_abs8 += b.sum_abs8;
  }

  const double nn = static_cast<double>(samples);
  OracleReport report;
  report.monte_carlo = true;
  report.count = samples;
  report.E_D = total.sum_d / nn;
  report.E_DstarD = total.sum_abs2 / nn;
  report.E_absD4 = total.sum_abs4 / nn;
  report.E_D2 = total.sum_d2 / nn;
  report.stderr_E_D = stderr_of_mean(total.sum_abs2, std::norm(report.E_D), samples);
  report.stderr_E_DstarD =
      stderr_of_mean(total.sum_abs4, report.E_DstarD * report.E_DstarD, samples);
  report.stderr_E_absD4 =
      stderr_of_mean(total.sum_abs8, report.E_absD4 * report.E_absD4, samples);
  report.stderr_E_D2 = stderr_of_mean(total.sum_abs4, std::norm(report.E_D2), samples);
  return report;
}

}  // namespace lattlight
