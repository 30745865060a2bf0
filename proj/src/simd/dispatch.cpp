#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "dsgan/simd/kernels.hpp"

namespace dsgan::simd {
namespace {

constexpr KernelTable kScalarTable{Isa::scalar, &scalar::gemm_nn, &scalar::dot, &scalar::axpy,
                                   &scalar::sum};
#if defined(__x86_64__) || defined(_M_X64)
constexpr KernelTable kAvx2Table{Isa::avx2, &avx2::gemm_nn, &avx2::dot, &avx2::axpy,
                                 &avx2::sum};
// Vector reductions gain little from 512-bit registers; only the GEMM differs.
constexpr KernelTable kAvx512Table{Isa::avx512, &avx512::gemm_nn, &avx2::dot, &avx2::axpy,
                                   &avx2::sum};
#endif
#if defined(__aarch64__)
constexpr KernelTable kNeonTable{Isa::neon, &neon::gemm_nn, &neon::dot, &neon::axpy,
                                 &neon::sum};
#endif

Isa parse_isa(const std::string& name) {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  if (name == "avx512") return Isa::avx512;
  if (name == "neon") return Isa::neon;
  throw std::invalid_argument("DSGAN_ISA: unknown instruction set '" + name +
                              "' (expected scalar, avx2, avx512 or neon)");
}

Isa initial_isa() {
  if (const char* env = std::getenv("DSGAN_ISA"); env != nullptr && *env != '\0') {
    const Isa requested = parse_isa(env);
    if (!isa_supported(requested))
      throw std::invalid_argument(std::string("DSGAN_ISA: '") + env +
                                  "' is not supported on this CPU");
    return requested;
  }
  return detected_isa();
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> table{&kernels_for(initial_isa())};
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::avx512: return "avx512";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::avx512:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx512f") && isa_supported(Isa::avx2);
#else
      return false;
#endif
    case Isa::neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa detected_isa() {
  if (isa_supported(Isa::avx512)) return Isa::avx512;
  if (isa_supported(Isa::avx2)) return Isa::avx2;
  if (isa_supported(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_supported(isa))
    throw std::invalid_argument("instruction set '" + std::string(isa_name(isa)) +
                                "' is not supported on this CPU");
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::avx2: return kAvx2Table;
    case Isa::avx512: return kAvx512Table;
#endif
#if defined(__aarch64__)
    case Isa::neon: return kNeonTable;
#endif
    default: return kScalarTable;
  }
}

Isa active_isa() { return active_table().load()->isa; }

void set_active_isa(Isa isa) { active_table().store(&kernels_for(isa)); }

const KernelTable& kernels() { return *active_table().load(); }

}  // namespace dsgan::simd
