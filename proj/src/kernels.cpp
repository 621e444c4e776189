#include "affdim/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "affdim/error.hpp"

namespace affdim::kernels {

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

bool available(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(AFFDIM_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!available(isa)) {
    throw Error(ErrorCode::InvalidArgument,
                "kernel ISA " + std::string(to_string(isa)) + " is not available");
  }
#if defined(AFFDIM_HAVE_AVX2)
  if (isa == Isa::Avx2) return detail::kAvx2Table;
#endif
  return detail::kScalarTable;
}

namespace {

Isa detect() noexcept {
  if (const char* forced = std::getenv("AFFDIM_ISA")) {
    if (std::string_view(forced) == "scalar") return Isa::Scalar;
  }
  return available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

}  // namespace

Isa active_isa() noexcept {
  static const Isa isa = detect();
  return isa;
}

const KernelTable& active() {
  static const KernelTable& t = table(active_isa());
  return t;
}

double axpy_log_sum_exp(std::span<const double> base, std::span<const double> slope, double f) {
  return active().axpy_log_sum_exp(base.data(), slope.data(), f, base.size());
}

double weighted_axpy_sum(std::span<const double> w, std::span<const double> base,
                         std::span<const double> slope, double f) {
  return active().weighted_axpy_sum(w.data(), base.data(), slope.data(), f, w.size());
}

void cell_floor(std::span<const double> x, double origin, double inv_width, std::span<double> out) {
  active().cell_floor(x.data(), origin, inv_width, out.data(), x.size());
}

double log_add(double a, double b) noexcept {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace affdim::kernels
