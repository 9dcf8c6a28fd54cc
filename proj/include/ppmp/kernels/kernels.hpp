#pragma once

// Hot inner loops of the control tick, with a scalar reference implementation
// and an AVX2/FMA variant selected once at runtime. The scalar path is always
// available and is the equivalence oracle for the vector path.

#include <cstddef>
#include <span>
#include <string_view>

namespace ppmp::kernels {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa);

// How distances between phases are measured by nearest_phase().
enum class PhaseMetric { circular, linear };

// Index of the entry of `phases` nearest to `phi`; ties resolve to the lowest
// index. Circular distances assume every input lies in (-pi, pi].
using NearestPhaseFn = std::size_t (*)(std::span<const double> phases, double phi,
                                       PhaseMetric metric);

// out = base + gain * delta, with `gain` stored column-major (rows = base.size()).
using AffineGainFn = void (*)(std::span<const double> base, std::span<const double> gain,
                              std::span<const double> delta, std::span<double> out);

// acc += scale * x
using AxpyFn = void (*)(std::span<double> acc, std::span<const double> x, double scale);

struct KernelTable {
  Isa isa;
  NearestPhaseFn nearest_phase;
  AffineGainFn affine_gain;
  AxpyFn axpy;
};

// Implementations, exposed for equivalence testing.
const KernelTable& scalar_table();
// Returns nullptr when the CPU or the compiler lacks AVX2/FMA.
const KernelTable* avx2_table();

bool cpu_supports_avx2();

// The table used by the library. Chosen on first use: AVX2 when supported,
// unless PPMP_SIMD=scalar is set in the environment.
const KernelTable& active();

// Overrides the selection (tests, benchmarking). Falls back to scalar when
// the requested ISA is unavailable; returns the ISA actually selected.
Isa select(Isa isa);

inline std::size_t nearest_phase(std::span<const double> phases, double phi, PhaseMetric metric) {
  return active().nearest_phase(phases, phi, metric);
}
inline void affine_gain(std::span<const double> base, std::span<const double> gain,
                        std::span<const double> delta, std::span<double> out) {
  active().affine_gain(base, gain, delta, out);
}
inline void axpy(std::span<double> acc, std::span<const double> x, double scale) {
  active().axpy(acc, x, scale);
}

}  // namespace ppmp::kernels
