#pragma once

// Data-parallel inner loops shared by the k-means engine and the smoothing code.
//
// Each kernel has a scalar reference implementation and SIMD variants (AVX2 on
// x86-64, NEON on AArch64). The variant is picked once at runtime from the CPU
// features; FFKM_ISA=scalar|avx2|neon in the environment overrides the choice.
//
// The distance kernel vectorizes across points and accumulates each point's
// sum in the same order as the scalar loop, so its results are bitwise equal
// to the reference. Reductions reassociate and only agree to rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace ffkm::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);

/// ISA currently used by the dispatching entry points.
Isa active_isa();

/// Overrides the dispatch choice; throws ConfigError when the CPU lacks the ISA.
void select_isa(Isa isa);

/**
 * out[i] = sum_j (points[j * ld + i] - center[j])^2 for i < n.
 *
 * `points` is a column-major n x d block with leading dimension ld >= n.
 */
void squared_distances(const double* points, std::size_t n, std::size_t d, std::size_t ld,
                       const double* center, double* out);

/// sum_i (a[i] - b[i])^2
double sum_squared_difference(std::span<const double> a, std::span<const double> b);

/// sum_i a[i]^2
double sum_squares(std::span<const double> a);

// Per-ISA entry points, exposed for equivalence tests and benchmarks.
namespace scalar {
void squared_distances(const double* points, std::size_t n, std::size_t d, std::size_t ld,
                       const double* center, double* out);
double sum_squared_difference(const double* a, const double* b, std::size_t n);
double sum_squares(const double* a, std::size_t n);
}  // namespace scalar

namespace avx2 {
void squared_distances(const double* points, std::size_t n, std::size_t d, std::size_t ld,
                       const double* center, double* out);
double sum_squared_difference(const double* a, const double* b, std::size_t n);
double sum_squares(const double* a, std::size_t n);
}  // namespace avx2

namespace neon {
void squared_distances(const double* points, std::size_t n, std::size_t d, std::size_t ld,
                       const double* center, double* out);
double sum_squared_difference(const double* a, const double* b, std::size_t n);
double sum_squares(const double* a, std::size_t n);
}  // namespace neon

}  // namespace ffkm::kernels
