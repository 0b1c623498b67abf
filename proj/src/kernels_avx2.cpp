#include "kernels_detail.hpp"

#if defined(EIV_KERNELS_HAVE_AVX2_TU)

#include <immintrin.h>

namespace eiv::kernels::detail {

// Same four-lane association order as the scalar kernels. Explicit mul/add
// (no FMA) keeps the per-lane arithmetic identical, so the results match the
// scalar reference bit for bit.

double dot_avx2(const double* a, const double* b, std::size_t n) noexcept {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  const std::size_t n4 = n & ~std::size_t(3);
  for (; i < n4; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                           _mm256_loadu_pd(b + i)));
  }
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  double tail = 0.0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((lane[0] + lane[1]) + (lane[2] + lane[3])) + tail;
}

double sumsq_avx2(const double* a, std::size_t n) noexcept {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  const std::size_t n4 = n & ~std::size_t(3);
  for (; i < n4; i += 4) {
    const __m256d v = _mm256_loadu_pd(a + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
  }
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  double tail = 0.0;
  for (; i < n; ++i) tail += a[i] * a[i];
  return ((lane[0] + lane[1]) + (lane[2] + lane[3])) + tail;
}

namespace {

// Full 32x32 products of all eight u32 lanes: even lanes via mul_epu32
// directly, odd lanes via a 32-bit shift first.
inline void mulhilo8(__m256i x, __m256i mul, __m256i* hi, __m256i* lo) {
  const __m256i pe = _mm256_mul_epu32(x, mul);
  const __m256i po = _mm256_mul_epu32(_mm256_srli_epi64(x, 32), mul);
  *lo = _mm256_blend_epi32(pe, _mm256_slli_epi64(po, 32), 0xAA);
  *hi = _mm256_blend_epi32(_mm256_srli_epi64(pe, 32), po, 0xAA);
}

}  // namespace

void philox_fill_u64_avx2(std::uint64_t key, std::uint64_t stream,
                          std::uint64_t block0, std::uint64_t* out,
                          std::size_t n) noexcept {
  const __m256i m0 = _mm256_set1_epi32(int(kPhiloxM0));
  const __m256i m1 = _mm256_set1_epi32(int(kPhiloxM1));
  const __m256i w0 = _mm256_set1_epi32(int(kPhiloxW0));
  const __m256i w1 = _mm256_set1_epi32(int(kPhiloxW1));
  const __m256i c2_init = _mm256_set1_epi32(int(std::uint32_t(stream)));
  const __m256i c3_init = _mm256_set1_epi32(int(std::uint32_t(stream >> 32)));

  std::uint64_t block = block0;
  std::size_t i = 0;
  // Eight blocks (16 output words) per iteration, counters struct-of-arrays.
  while (n - i >= 16) {
    alignas(32) std::uint32_t blo[8], bhi[8];
    for (int j = 0; j < 8; ++j) {
      blo[j] = std::uint32_t(block + j);
      bhi[j] = std::uint32_t((block + j) >> 32);
    }
    __m256i c0 = _mm256_load_si256(reinterpret_cast<const __m256i*>(blo));
    __m256i c1 = _mm256_load_si256(reinterpret_cast<const __m256i*>(bhi));
    __m256i c2 = c2_init;
    __m256i c3 = c3_init;
    __m256i k0 = _mm256_set1_epi32(int(std::uint32_t(key)));
    __m256i k1 = _mm256_set1_epi32(int(std::uint32_t(key >> 32)));

    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        k0 = _mm256_add_epi32(k0, w0);
        k1 = _mm256_add_epi32(k1, w1);
      }
      __m256i hi0, lo0, hi1, lo1;
      mulhilo8(c0, m0, &hi0, &lo0);
      mulhilo8(c2, m1, &hi1, &lo1);
      c0 = _mm256_xor_si256(_mm256_xor_si256(hi1, c1), k0);
      c1 = lo1;
      c2 = _mm256_xor_si256(_mm256_xor_si256(hi0, c3), k1);
      c3 = lo0;
    }

    alignas(32) std::uint32_t x0[8], x1[8], x2[8], x3[8];
    _mm256_store_si256(reinterpret_cast<__m256i*>(x0), c0);
    _mm256_store_si256(reinterpret_cast<__m256i*>(x1), c1);
    _mm256_store_si256(reinterpret_cast<__m256i*>(x2), c2);
    _mm256_store_si256(reinterpret_cast<__m256i*>(x3), c3);
    for (int j = 0; j < 8; ++j) {
      out[i++] = std::uint64_t(x0[j]) | (std::uint64_t(x1[j]) << 32);
      out[i++] = std::uint64_t(x2[j]) | (std::uint64_t(x3[j]) << 32);
    }
    block += 8;
  }
  if (i < n) philox_fill_u64_scalar(key, stream, block, out + i, n - i);
}

}  // namespace eiv::kernels::detail

#endif  // EIV_KERNELS_HAVE_AVX2_TU
