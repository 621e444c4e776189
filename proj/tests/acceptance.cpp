// Acceptance suite: one PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "affdim/error.hpp"
#include "affdim/fixtures.hpp"
#include "affdim/geometry.hpp"
#include "affdim/measures.hpp"
#include "affdim/pressure.hpp"
#include "oracles.hpp"

using namespace affdim;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "first failure: " << what << "; ";
      pass = false;
    }
  }
};

Matrix diag2(double a, double b) { return Matrix(2, {a, 0, 0, b}); }

PartitionOptions with(PartitionMethod m) {
  PartitionOptions o;
  o.method = m;
  return o;
}

Matrix random_contraction(std::mt19937_64& rng, double norm) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  while (true) {
    Matrix m(2, {u(rng), u(rng), u(rng), u(rng)});
    m *= norm / std::exp(singular_spectrum(m).log_alphas.front());
    if (std::exp(singular_spectrum(m).log_alphas.back()) > 0.05) return m;
  }
}

const SubshiftAutomaton kFull2 = SubshiftAutomaton::full_shift(2);

void diagonal_oracle(Outcome& o) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  const std::size_t n = 16;
  double worst_low = 1e300, worst_high = -1e300;
  for (int sys = 0; sys < 10; ++sys) {
    const std::vector<Matrix> maps{diag2(u(rng), u(rng)), diag2(u(rng), u(rng))};
    const PartitionFunction pf(kFull2, maps, n);
    for (int i = 1; i <= 9; ++i) {
      const double t = 0.1 * i;
      const double excess = pf.log_Z(t) / n - diagonal_pressure(t, maps);
      worst_low = std::min(worst_low, excess);
      worst_high = std::max(worst_high, excess);
      // when one coordinate dominates every word the lower bound is an equality
      o.require(excess >= -1e-12 && excess <= std::log(2.0) / n,
                "system " + std::to_string(sys) + " t=" + std::to_string(t));
    }
  }
  o.detail << "excess in [" << worst_low << ", " << worst_high << "], bound log2/16 = " << std::log(2.0) / n;
}

void equal_maps_identity(Outcome& o) {
  std::mt19937_64 rng(202);
  std::vector<Matrix> systems{no_semiconformal_fixture().ifs.matrices[0]};
  for (int i = 0; i < 5; ++i) systems.push_back(random_contraction(rng, 0.3 + 0.1 * i));
  const auto uniform = BernoulliMeasure::uniform(2);
  double worst = 0.0;
  for (const auto& a : systems) {
    const std::vector<Matrix> maps{a, a};
    for (std::size_t n : {4, 8, 12}) {
      const PartitionFunction pf(kFull2, maps, n);
      for (double t : {0.25, 0.5, 0.75}) {
        const double diff =
            std::abs(pf.pressure(t) - (entropy_finite(uniform, pf) + energy_finite(uniform, t, pf)));
        worst = std::max(worst, diff);
        o.require(diff <= 1e-12, "n=" + std::to_string(n));
      }
    }
  }
  o.detail << "max |P_n - (h_n + E_n)| = " << worst;
}

void not_unique_dimension(Outcome& o) {
  const double target = oracle::not_unique_dimension();
  const auto fx = not_unique_fixture();
  const auto b = singularity_dimension(PartitionFunction(kFull2, fx.ifs.matrices, 20), 1e-10);
  o.require(b.s_upper >= 0.69424 && b.s_upper <= 0.69424 + 0.05, "s_upper range");
  o.require(b.s_upper >= target, "s_upper below the oracle root");
  o.detail << "oracle root " << target << ", s_upper(n=20) = " << b.s_upper;
}

void shear_dimension(Outcome& o) {
  const auto fx = no_semiconformal_fixture();
  const auto& maps = fx.ifs.matrices;
  const auto b = singularity_dimension(PartitionFunction(kFull2, maps, 16), 1e-10);
  o.require(b.s_upper >= 0.5 && b.s_upper <= 0.60, "s_upper range");
  double worst = 0.0;
  for (std::size_t n : {8, 16}) {
    const PartitionFunction pf(kFull2, maps, n);
    for (double t : {0.3, 0.5, 0.7}) {
      const double excess = pf.pressure(t) - std::log(2.0 * std::pow(0.25, t));
      const double bound = (t * std::log(double(n)) + std::log(2.0)) / n;
      worst = std::max(worst, excess / bound);
      o.require(excess >= 0.0 && excess <= bound, "band n=" + std::to_string(n));
    }
  }
  o.detail << "s_upper(n=16) = " << b.s_upper << ", band usage max " << worst;
}

void kink(Outcome& o) {
  const auto target = oracle::nondifferentiable_kink();
  const auto fx = nondifferentiable_fixture();
  const PartitionFunction pf(kFull2, fx.ifs.matrices, 4096, with(PartitionMethod::TypeClass));
  const auto kinks = detect_kink(pf, 0.5, 1.0, 32, 0.2);
  o.require(kinks.size() == 1, "kink count " + std::to_string(kinks.size()));
  if (kinks.size() == 1) {
    o.require(std::abs(kinks[0].t - 0.879) <= 0.02, "location");
    o.require(kinks[0].jump >= 0.40 && kinks[0].jump <= 0.55, "jump");
    o.detail << "t* = " << kinks[0].t << " (oracle " << target.t << "), jump = " << kinks[0].jump << " (oracle "
             << target.jump << "), n = 4096";
  }
}

void jensen(Outcome& o) {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  const std::vector<Matrix> maps{random_contraction(rng, 0.7), random_contraction(rng, 0.5)};
  const auto no01 = SubshiftAutomaton::compile(SubshiftSpec{2, {parse_word("01")}});
  std::vector<PartitionFunction> pfs;
  for (const SubshiftAutomaton* a : {&kFull2, &no01})
    for (std::size_t n : {4, 8, 12}) pfs.emplace_back(*a, maps, n);
  double worst = 1e300;
  std::size_t checks = 0;
  for (int i = 0; i < 100; ++i) {
    const double p = u(rng);
    const BernoulliMeasure mu({p, 1.0 - p});
    for (const auto& pf : pfs) {
      for (double t : {0.0, 0.5, 1.0, 1.5}) {
        const double gap = equilibrium_gap(mu, t, pf);
        worst = std::min(worst, gap);
        ++checks;
        o.require(gap >= -1e-12, "gap " + std::to_string(gap));
      }
    }
  }
  o.detail << checks << " gaps, minimum " << worst;
}

void gibbs(Outcome& o) {
  const auto fx = not_unique_fixture();
  const double s = oracle::not_unique_dimension();
  const auto mu = std::make_shared<BernoulliMeasure>(*fx.bernoulli);
  const auto nu = std::make_shared<BernoulliMeasure>(std::vector<double>{fx.bernoulli->at(1), fx.bernoulli->at(0)});
  const MixtureMeasure eta({mu, nu}, {0.5, 0.5});
  const auto a = gibbs_ratios(eta, s, 0.0, 12, kFull2, fx.ifs.matrices);
  o.require(a.min_ratio >= 0.5 - 1e-9 && a.max_ratio <= 1.0 + 1e-9, "(a) mixture ratios");
  const auto b = gibbs_ratios(*mu, s, 0.0, 20, kFull2, fx.ifs.matrices);
  const double b20 = b.depths.back().min_ratio;
  o.require(b20 < 0.05, "(b) depth-20 min ratio");

  const auto shear = no_semiconformal_fixture();
  const auto c = gibbs_ratios(BernoulliMeasure::uniform(2), 0.5, 0.0, 24, kFull2, shear.ifs.matrices);
  o.detail << "(a) [" << a.min_ratio << ", " << a.max_ratio << "]; (b) " << b20 << "; (c)";
  for (std::size_t n : {8, 16, 24}) {
    const double scaled = c.depths[n - 1].min_ratio * std::pow(double(n), 0.5);
    o.require(scaled >= 0.5 && scaled <= 2.0, "(c) n=" + std::to_string(n));
    o.detail << " n=" << n << ":" << scaled;
  }
}

void variational(Outcome& o) {
  const auto fx = not_unique_fixture();
  const double s = oracle::not_unique_dimension();
  const BernoulliMeasure mu({std::pow(0.5, s), std::pow(0.25, s)});
  const PartitionFunction pf(kFull2, fx.ifs.matrices, 10000, with(PartitionMethod::TypeClass));
  const double h = entropy_closed(mu);
  const double l1 = lyapunov(mu, pf)[0];
  const double oracle_l1 = oracle::diagonal_top_lyapunov(mu.p()[0], 0.5, 0.25, 10000);
  o.require(std::abs(h + s * l1) <= 0.01, "|h + s lambda_1|");
  o.require(std::abs(l1 - oracle_l1) <= 1e-10, "binomial oracle");
  o.detail << "h = " << h << ", lambda_1 = " << l1 << " (oracle " << oracle_l1 << "), h + s lambda_1 = " << h + s * l1;
}

void properties(Outcome& o) {
  std::mt19937_64 rng(909);
  const std::vector<Matrix> maps{random_contraction(rng, 0.8), random_contraction(rng, 0.6),
                                 random_contraction(rng, 0.7)};
  const auto scaled = to_scaled(maps);
  const auto bounds = contraction_bounds(maps);
  std::uniform_real_distribution<double> ut(0.0, 2.5), ud(0.0, 1.0);
  auto random_word = [&] {
    Word w(1 + rng() % 12);
    for (auto& a : w) a = static_cast<Letter>(rng() % 3);
    return w;
  };
  std::size_t sub_fail = 0, sandwich_fail = 0;
  for (int i = 0; i < 10000; ++i) {
    const Word u = random_word(), v = random_word();
    Word uv = u;
    uv.insert(uv.end(), v.begin(), v.end());
    const double t = ut(rng), delta = ud(rng);
    const auto su = singular_spectrum(word_product(u, scaled));
    const auto sv = singular_spectrum(word_product(v, scaled));
    const auto suv = singular_spectrum(word_product(uv, scaled));
    // relative tolerance on phi is an additive tolerance on log phi
    if (log_phi(t, suv) > log_phi(t, su) + log_phi(t, sv) + 1e-9) ++sub_fail;
    const double n = static_cast<double>(u.size());
    const double mid = log_phi(t + delta, su), base = log_phi(t, su);
    if (mid > base + delta * n * std::log(bounds.alpha_max) + 1e-9 ||
        mid < base + delta * n * std::log(bounds.alpha_min) - 1e-9)
      ++sandwich_fail;
  }
  o.require(sub_fail == 0, "submultiplicativity");
  o.require(sandwich_fail == 0, "sandwich");

  std::size_t factor_checks = 0, count_checks = 0;
  int built = 0;
  while (built < 5) {
    const std::size_t k = 2 + rng() % 2;
    SubshiftSpec spec{k, {}};
    std::vector<oracle::Word> forbidden;
    for (std::size_t i = 0, m = 1 + rng() % 3; i < m; ++i) {
      Word w(2 + rng() % 2);
      for (auto& a : w) a = static_cast<Letter>(rng() % k);
      spec.forbidden_words.push_back(w);
      forbidden.emplace_back(w.begin(), w.end());
    }
    std::optional<SubshiftAutomaton> a;
    try {
      a.emplace(SubshiftAutomaton::compile(spec));
    } catch (const Error&) {
      continue;
    }
    ++built;
    const std::size_t max_len = k == 2 ? 12 : 9;
    for (std::size_t total = 2; total <= max_len; ++total) {
      for (const auto& w : a->words(total)) {
        for (std::size_t n = 1; n < total; ++n) {
          ++factor_checks;
          const std::span<const Letter> ws(w);
          if (!a->is_allowed(ws.first(n)) || !a->is_allowed(ws.subspan(n))) o.require(false, "factor property");
        }
      }
    }
    for (std::size_t n = 1; n <= max_len; ++n) {
      ++count_checks;
      if (a->count(n) != oracle::sft_words(k, forbidden, n).size()) o.require(false, "count n=" + std::to_string(n));
    }
  }
  o.detail << "10^4 pairs: submultiplicativity failures " << sub_fail << ", sandwich failures " << sandwich_fail
           << "; factor checks " << factor_checks << "; counts checked " << count_checks;
}

AffineIFS cantor() { return AffineIFS{{Matrix(1, {1.0 / 3}), Matrix(1, {1.0 / 3})}, {{0.0}, {2.0 / 3}}}; }

AffineIFS unit_square() {
  AffineIFS ifs;
  for (double x : {0.0, 0.5})
    for (double y : {0.0, 0.5}) {
      ifs.matrices.push_back(Matrix(2, {0.5, 0, 0, 0.5}));
      ifs.translations.push_back({x, y});
    }
  return ifs;
}

void geometry(Outcome& o) {
  const double c = box_count(attractor_sample(14, cantor(), kFull2)).slope;
  o.require(std::abs(c - oracle::cantor_dimension()) <= 0.05, "Cantor slope");
  const double sq = box_count(attractor_sample(8, unit_square(), SubshiftAutomaton::full_shift(4))).slope;
  o.require(std::abs(sq - 2.0) <= 0.1, "square slope");
  const auto tr = tractable_fixture();
  const auto cloud = attractor_sample(12, tr.ifs, kFull2);
  const auto plane = hyperplane_check(cloud);
  const double slope = box_count(cloud).slope;
  const double s = singularity_dimension(PartitionFunction(kFull2, tr.ifs.matrices, 14), 1e-10).s_upper;
  o.require(plane.rank == 1, "rank");
  o.require(slope < 0.4, "tractable slope");
  o.require(s >= 0.6, "tractable s_upper");
  o.require(s - slope >= 0.2, "gap");
  o.detail << "Cantor " << c << " (target " << oracle::cantor_dimension() << "), square " << sq << ", tractable rank "
           << plane.rank << " slope " << slope << " s_upper " << s << " gap " << s - slope;
}

void random_translations(Outcome& o) {
  const auto fx = not_unique_fixture();
  const double s = singularity_dimension(PartitionFunction(kFull2, fx.ifs.matrices, 20), 1e-10).s_upper;
  std::mt19937_64 rng(1111);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> slopes;
  for (int draw = 0; draw < 5; ++draw) {
    AffineIFS ifs{fx.ifs.matrices, {{u(rng), u(rng)}, {u(rng), u(rng)}}};
    slopes.push_back(box_count(attractor_sample(18, ifs, kFull2)).slope);
  }
  const auto [lo, hi] = std::minmax_element(slopes.begin(), slopes.end());
  o.require(*hi - *lo < 0.1, "spread");
  o.detail << "slopes";
  for (double x : slopes) {
    o.require(std::abs(x - s) <= 0.1, "distance to s_upper");
    o.detail << ' ' << x;
  }
  o.detail << "; spread " << *hi - *lo << "; s_upper(n=20) " << s;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
      {"diagonal oracle", diagonal_oracle},
      {"equal-maps identity", equal_maps_identity},
      {"not-unique dimension", not_unique_dimension},
      {"shear dimension and band", shear_dimension},
      {"kink detection", kink},
      {"Jensen positivity", jensen},
      {"Gibbs diagnostics", gibbs},
      {"variational identity", variational},
      {"property suites", properties},
      {"geometry", geometry},
      {"random-translation stability", random_translations},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "threw: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2zu %s (%.2fs): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, secs,
                o.detail.str().c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures;
}
