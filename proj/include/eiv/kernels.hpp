#pragma once

#include <cstddef>
#include <cstdint>

// Hot-loop primitives for the simulation engine: counter-based random streams
// and the two reductions every estimator input needs. Each kernel has a scalar
// reference implementation and an AVX2 variant selected at runtime. Both
// variants follow the same association order (four accumulator lanes, scalar
// tail, fixed combine), so results are bit-identical across backends and the
// equivalence tests assert exact equality.

namespace eiv::kernels {

enum class Backend { scalar, avx2 };

// Backend in use. Resolved once: AVX2 when the CPU supports it, unless the
// EIVREG_KERNEL environment variable ("scalar" or "avx2") overrides.
Backend active() noexcept;
bool avx2_supported() noexcept;

// Force a backend; tests use this to cross-check both paths. Throws
// InvalidInputError when the CPU lacks the requested backend.
void force(Backend b);

const char* backend_name(Backend b) noexcept;

double dot(const double* a, const double* b, std::size_t n) noexcept;
double sumsq(const double* a, std::size_t n) noexcept;

// Philox4x32-10 (Salmon, Moraes, Dror, Shaw 2011). One 128-bit block yields
// two 64-bit words: block i of a (key, stream) pair fills out[2i], out[2i+1].
// The stream id occupies the high counter words, so streams never overlap.
void philox_fill_u64(std::uint64_t key, std::uint64_t stream,
                     std::uint64_t block0, std::uint64_t* out,
                     std::size_t n) noexcept;

// Single block, scalar reference path; exposed for known-answer tests.
void philox4x32_10(const std::uint32_t ctr[4], const std::uint32_t key[2],
                   std::uint32_t out[4]) noexcept;

// N(0,1) draws: Box-Muller over philox uniforms. Consumes one block per pair
// of draws starting at block0. The transform is one scalar code path shared by
// all backends, so the doubles are identical whichever backend fills the
// uniforms.
void fill_normals(std::uint64_t key, std::uint64_t stream,
                  std::uint64_t block0, double* out, std::size_t n);

// Blocks consumed by fill_normals for n draws; callers advance block0 by this.
constexpr std::uint64_t normal_blocks(std::uint64_t n) noexcept {
  return (n + 1) / 2;
}

}  // namespace eiv::kernels
