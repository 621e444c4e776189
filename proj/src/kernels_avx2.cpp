// AVX2 + FMA variants. Compiled with -mavx2 -mfma; only reached through the
// dispatcher after a CPUID check.

#include <immintrin.h>

#include <cmath>
#include <limits>

#include "affdim/kernels.hpp"

namespace affdim::kernels {
namespace {

double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

// exp(x) with relative error around 1e-16 on [-708, 709]; below that the
// result is flushed to zero. Reduction x = k ln2 + r, |r| <= ln2/2, then a
// degree-13 Taylor polynomial (truncation error < 5e-18).
__m256d exp_pd(__m256d x) {
  const __m256d lo_limit = _mm256_set1_pd(-708.0);
  const __m256d hi_limit = _mm256_set1_pd(709.0);
  const __m256d underflow = _mm256_cmp_pd(x, lo_limit, _CMP_LT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(x, lo_limit), hi_limit);

  const __m256d k = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, _mm256_set1_pd(6.93147180369123816490e-01), x);
  r = _mm256_fnmadd_pd(k, _mm256_set1_pd(1.90821492927058770002e-10), r);

  static constexpr double kInvFact[] = {
      1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
      1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,      1.0 / 720.0,
      1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,         0.5,
      1.0,                1.0};
  __m256d p = _mm256_set1_pd(kInvFact[0]);
  for (int i = 1; i < 14; ++i) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(kInvFact[i]));

  // 2^k assembled in the exponent field; the magic constant moves k into the
  // low mantissa bits so it can be read back as an integer.
  const __m256d magic = _mm256_set1_pd(6755399441055744.0);
  __m256i ki = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(k, magic)),
                                _mm256_castpd_si256(magic));
  ki = _mm256_slli_epi64(_mm256_add_epi64(ki, _mm256_set1_epi64x(1023)), 52);
  const __m256d result = _mm256_mul_pd(p, _mm256_castsi256_pd(ki));
  return _mm256_andnot_pd(underflow, result);
}

double avx2_axpy_log_sum_exp(const double* base, const double* slope, double f, std::size_t n) {
  const __m256d vf = _mm256_set1_pd(f);
  std::size_t i = 0;
  __m256d vmax = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_fmadd_pd(vf, _mm256_loadu_pd(slope + i), _mm256_loadu_pd(base + i));
    vmax = _mm256_max_pd(vmax, v);
  }
  double peak = hmax(vmax);
  for (std::size_t j = i; j < n; ++j) peak = std::max(peak, std::fma(f, slope[j], base[j]));
  if (!std::isfinite(peak)) return peak;

  const __m256d vpeak = _mm256_set1_pd(peak);
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d v0 = _mm256_fmadd_pd(vf, _mm256_loadu_pd(slope + i), _mm256_loadu_pd(base + i));
    const __m256d v1 =
        _mm256_fmadd_pd(vf, _mm256_loadu_pd(slope + i + 4), _mm256_loadu_pd(base + i + 4));
    acc0 = _mm256_add_pd(acc0, exp_pd(_mm256_sub_pd(v0, vpeak)));
    acc1 = _mm256_add_pd(acc1, exp_pd(_mm256_sub_pd(v1, vpeak)));
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_fmadd_pd(vf, _mm256_loadu_pd(slope + i), _mm256_loadu_pd(base + i));
    acc0 = _mm256_add_pd(acc0, exp_pd(_mm256_sub_pd(v, vpeak)));
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += std::exp(std::fma(f, slope[i], base[i]) - peak);
  return peak + std::log(sum);
}

double avx2_weighted_axpy_sum(const double* w, const double* base, const double* slope, double f,
                              std::size_t n) {
  const __m256d vf = _mm256_set1_pd(f);
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vw = _mm256_loadu_pd(w + i);
    const __m256d v = _mm256_fmadd_pd(vf, _mm256_loadu_pd(slope + i), _mm256_loadu_pd(base + i));
    // zero weights must not pick up infinities from the value column
    const __m256d live = _mm256_cmp_pd(vw, zero, _CMP_NEQ_UQ);
    acc = _mm256_add_pd(acc, _mm256_and_pd(live, _mm256_mul_pd(vw, v)));
  }
  double sum = hsum(acc);
  for (; i < n; ++i) {
    if (w[i] != 0.0) sum += w[i] * std::fma(f, slope[i], base[i]);
  }
  return sum;
}

void avx2_cell_floor(const double* x, double origin, double inv_width, double* out, std::size_t n) {
  const __m256d vo = _mm256_set1_pd(origin);
  const __m256d vs = _mm256_set1_pd(inv_width);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), vo), vs);
    _mm256_storeu_pd(out + i, _mm256_floor_pd(v));
  }
  for (; i < n; ++i) out[i] = std::floor((x[i] - origin) * inv_width);
}

}  // namespace

namespace detail {
const KernelTable kAvx2Table{avx2_axpy_log_sum_exp, avx2_weighted_axpy_sum, avx2_cell_floor};
}  // namespace detail

}  // namespace affdim::kernels
