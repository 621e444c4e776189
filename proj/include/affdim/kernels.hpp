#pragma once

// Data-parallel inner loops shared by the pressure, measure and geometry
// code. Each kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant chosen at runtime. Set AFFDIM_ISA=scalar in the
// environment to force the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace affdim::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa) noexcept;

struct KernelTable {
  // log sum_i exp(base[i] + f * slope[i])
  double (*axpy_log_sum_exp)(const double* base, const double* slope, double f, std::size_t n);
  // sum_i w[i] * (base[i] + f * slope[i])
  double (*weighted_axpy_sum)(const double* w, const double* base, const double* slope, double f,
                              std::size_t n);
  // out[i] = floor((x[i] - origin) * inv_width)
  void (*cell_floor)(const double* x, double origin, double inv_width, double* out, std::size_t n);
};

bool available(Isa isa) noexcept;
const KernelTable& table(Isa isa);

/// Best ISA supported by this CPU, unless overridden by AFFDIM_ISA.
Isa active_isa() noexcept;
const KernelTable& active();

// Convenience wrappers over the active table. Spans must have equal length.
double axpy_log_sum_exp(std::span<const double> base, std::span<const double> slope, double f);
double weighted_axpy_sum(std::span<const double> w, std::span<const double> base,
                         std::span<const double> slope, double f);
void cell_floor(std::span<const double> x, double origin, double inv_width, std::span<double> out);

/// Merges two partial results of axpy_log_sum_exp.
double log_add(double a, double b) noexcept;

namespace detail {
extern const KernelTable kScalarTable;
#if defined(AFFDIM_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
}  // namespace detail

}  // namespace affdim::kernels
