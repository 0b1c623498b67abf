#include "kernels_detail.hpp"

#include "eiv/kernels.hpp"

namespace eiv::kernels {

void philox4x32_10(const std::uint32_t ctr[4], const std::uint32_t key[2],
                   std::uint32_t out[4]) noexcept {
  using namespace detail;
  std::uint32_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
  std::uint32_t k0 = key[0], k1 = key[1];
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k0 += kPhiloxW0;
      k1 += kPhiloxW1;
    }
    std::uint64_t p0 = std::uint64_t(kPhiloxM0) * c0;
    std::uint64_t p1 = std::uint64_t(kPhiloxM1) * c2;
    std::uint32_t n0 = std::uint32_t(p1 >> 32) ^ c1 ^ k0;
    std::uint32_t n1 = std::uint32_t(p1);
    std::uint32_t n2 = std::uint32_t(p0 >> 32) ^ c3 ^ k1;
    std::uint32_t n3 = std::uint32_t(p0);
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
  }
  out[0] = c0;
  out[1] = c1;
  out[2] = c2;
  out[3] = c3;
}

}  // namespace eiv::kernels

namespace eiv::kernels::detail {

double dot_scalar(const double* a, const double* b, std::size_t n) noexcept {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  std::size_t i = 0;
  const std::size_t n4 = n & ~std::size_t(3);
  for (; i < n4; i += 4) {
    acc0 += a[i] * b[i];
    acc1 += a[i + 1] * b[i + 1];
    acc2 += a[i + 2] * b[i + 2];
    acc3 += a[i + 3] * b[i + 3];
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((acc0 + acc1) + (acc2 + acc3)) + tail;
}

double sumsq_scalar(const double* a, std::size_t n) noexcept {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  std::size_t i = 0;
  const std::size_t n4 = n & ~std::size_t(3);
  for (; i < n4; i += 4) {
    acc0 += a[i] * a[i];
    acc1 += a[i + 1] * a[i + 1];
    acc2 += a[i + 2] * a[i + 2];
    acc3 += a[i + 3] * a[i + 3];
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += a[i] * a[i];
  return ((acc0 + acc1) + (acc2 + acc3)) + tail;
}

void philox_fill_u64_scalar(std::uint64_t key, std::uint64_t stream,
                            std::uint64_t block0, std::uint64_t* out,
                            std::size_t n) noexcept {
  const std::uint32_t k[2] = {std::uint32_t(key), std::uint32_t(key >> 32)};
  std::uint64_t block = block0;
  std::size_t i = 0;
  while (i < n) {
    const std::uint32_t c[4] = {std::uint32_t(block), std::uint32_t(block >> 32),
                                std::uint32_t(stream), std::uint32_t(stream >> 32)};
    std::uint32_t x[4];
    philox4x32_10(c, k, x);
    out[i++] = std::uint64_t(x[0]) | (std::uint64_t(x[1]) << 32);
    if (i < n) out[i++] = std::uint64_t(x[2]) | (std::uint64_t(x[3]) << 32);
    ++block;
  }
}

}  // namespace eiv::kernels::detail
