#pragma once

#include <cstddef>
#include <cstdint>

namespace eiv::kernels::detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

double dot_scalar(const double* a, const double* b, std::size_t n) noexcept;
double sumsq_scalar(const double* a, std::size_t n) noexcept;
void philox_fill_u64_scalar(std::uint64_t key, std::uint64_t stream,
                            std::uint64_t block0, std::uint64_t* out,
                            std::size_t n) noexcept;

#if defined(__x86_64__) || defined(_M_X64)
#define EIV_KERNELS_HAVE_AVX2_TU 1
double dot_avx2(const double* a, const double* b, std::size_t n) noexcept;
double sumsq_avx2(const double* a, std::size_t n) noexcept;
void philox_fill_u64_avx2(std::uint64_t key, std::uint64_t stream,
                          std::uint64_t block0, std::uint64_t* out,
                          std::size_t n) noexcept;
#endif

}  // namespace eiv::kernels::detail
