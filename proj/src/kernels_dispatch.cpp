#include <atomic>
#include <cstdlib>
#include <cstring>

#include "fsnn/kernels.hpp"
#include "fsnn/util.hpp"

namespace fsnn::kern {

bool backend_available(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

static Backend detect() {
  if (const char* env = std::getenv("FSNN_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
    if (std::strcmp(env, "avx2") == 0 && backend_available(Backend::Avx2)) return Backend::Avx2;
  }
  return backend_available(Backend::Avx2) ? Backend::Avx2 : Backend::Scalar;
}

static std::atomic<Backend> g_backend{detect()};

const KernelTable& active() {
  switch (g_backend.load(std::memory_order_relaxed)) {
#if defined(__x86_64__) || defined(_M_X64)
    case Backend::Avx2:
      return avx2_table();
#endif
    default:
      return scalar_table();
  }
}

void select(Backend b) {
  check(backend_available(b), Err::BadArgument,
        "kernel backend not available on this CPU: " + backend_name(b));
  g_backend.store(b, std::memory_order_relaxed);
}

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

std::string backend_name(Backend b) {
  return b == Backend::Scalar ? "scalar" : "avx2";
}

}  // namespace fsnn::kern
