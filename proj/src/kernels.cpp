#include "eiv/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <numbers>
#include <string>

#include "eiv/errors.hpp"
#include "kernels_detail.hpp"

namespace eiv::kernels {

bool avx2_supported() noexcept {
#if defined(EIV_KERNELS_HAVE_AVX2_TU)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

namespace {

Backend resolve_initial() {
  if (const char* env = std::getenv("EIVREG_KERNEL")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0 && avx2_supported()) return Backend::avx2;
    // "auto" and anything unrecognized fall through to detection.
  }
  return avx2_supported() ? Backend::avx2 : Backend::scalar;
}

Backend g_backend = resolve_initial();

}  // namespace

Backend active() noexcept { return g_backend; }

const char* backend_name(Backend b) noexcept {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

void force(Backend b) {
  if (b == Backend::avx2 && !avx2_supported())
    throw InvalidInputError("kernels: avx2 backend not supported on this CPU");
  g_backend = b;
}

double dot(const double* a, const double* b, std::size_t n) noexcept {
#if defined(EIV_KERNELS_HAVE_AVX2_TU)
  if (g_backend == Backend::avx2) return detail::dot_avx2(a, b, n);
#endif
  return detail::dot_scalar(a, b, n);
}

double sumsq(const double* a, std::size_t n) noexcept {
#if defined(EIV_KERNELS_HAVE_AVX2_TU)
  if (g_backend == Backend::avx2) return detail::sumsq_avx2(a, n);
#endif
  return detail::sumsq_scalar(a, n);
}

void philox_fill_u64(std::uint64_t key, std::uint64_t stream,
                     std::uint64_t block0, std::uint64_t* out,
                     std::size_t n) noexcept {
#if defined(EIV_KERNELS_HAVE_AVX2_TU)
  if (g_backend == Backend::avx2) {
    detail::philox_fill_u64_avx2(key, stream, block0, out, n);
    return;
  }
#endif
  detail::philox_fill_u64_scalar(key, stream, block0, out, n);
}

void fill_normals(std::uint64_t key, std::uint64_t stream, std::uint64_t block0,
                  double* out, std::size_t n) {
  constexpr std::size_t kChunkPairs = 512;
  std::uint64_t buf[2 * kChunkPairs];
  std::size_t produced = 0;
  std::uint64_t block = block0;
  while (produced < n) {
    const std::size_t pairs =
        std::min(kChunkPairs, (n - produced + 1) / 2);
    philox_fill_u64(key, stream, block, buf, 2 * pairs);
    block += pairs;
    for (std::size_t i = 0; i < pairs; ++i) {
      // u1 in (0,1] so log never sees zero; u2 in [0,1).
      const double u1 = double((buf[2 * i] >> 11) + 1) * 0x1.0p-53;
      const double u2 = double(buf[2 * i + 1] >> 11) * 0x1.0p-53;
      const double rad = std::sqrt(-2.0 * std::log(u1));
      const double ang = 2.0 * std::numbers::pi * u2;
      out[produced++] = rad * std::cos(ang);
      if (produced < n) out[produced++] = rad * std::sin(ang);
    }
  }
}

}  // namespace eiv::kernels
