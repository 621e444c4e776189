// Reference kernels. These define the expected results for every SIMD variant.

#include <cmath>
#include <limits>

#include "affdim/kernels.hpp"

namespace affdim::kernels {
namespace {

double scalar_axpy_log_sum_exp(const double* base, const double* slope, double f, std::size_t n) {
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) peak = std::max(peak, base[i] + f * slope[i]);
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += std::exp(base[i] + f * slope[i] - peak);
  return peak + std::log(sum);
}

double scalar_weighted_axpy_sum(const double* w, const double* base, const double* slope, double f,
                                std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] != 0.0) sum += w[i] * (base[i] + f * slope[i]);
  }
  return sum;
}

void scalar_cell_floor(const double* x, double origin, double inv_width, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::floor((x[i] - origin) * inv_width);
}

}  // namespace

namespace detail {
const KernelTable kScalarTable{scalar_axpy_log_sum_exp, scalar_weighted_axpy_sum, scalar_cell_floor};
}  // namespace detail

}  // namespace affdim::kernels
