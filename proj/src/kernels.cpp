#include "augkd/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace augkd::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) && defined(AUGKD_HAVE_AVX2_TU)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() {
  // AUGKD_KERNELS=scalar|avx2 overrides auto-detection.
  if (const char* env = std::getenv("AUGKD_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) return Backend::avx2;
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

Backend g_backend = initial_backend();

}  // namespace

Backend active_backend() { return g_backend; }

void set_backend(Backend b) {
  if (b == Backend::avx2 && !cpu_has_avx2()) return;
  g_backend = b;
}

bool avx2_supported() { return cpu_has_avx2(); }

std::string backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

#if defined(__x86_64__) && defined(AUGKD_HAVE_AVX2_TU)
#define AUGKD_DISPATCH(fn, ...)                                   \
  if (g_backend == Backend::avx2) return avx2::fn(__VA_ARGS__);   \
  return scalar::fn(__VA_ARGS__)
#else
#define AUGKD_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

void gemm_nn(int M, int N, int K, const float* A, const float* B, float* C, float beta) {
  AUGKD_DISPATCH(gemm_nn, M, N, K, A, B, C, beta);
}
void gemm_nt(int M, int N, int K, const float* A, const float* B, float* C, float beta) {
  AUGKD_DISPATCH(gemm_nt, M, N, K, A, B, C, beta);
}
void gemm_tn(int M, int N, int K, const float* A, const float* B, float* C, float beta) {
  AUGKD_DISPATCH(gemm_tn, M, N, K, A, B, C, beta);
}
void relu_fwd(const float* x, float* y, int64_t n) { AUGKD_DISPATCH(relu_fwd, x, y, n); }
void relu_bwd(const float* x, const float* dy, float* dx, int64_t n) {
  AUGKD_DISPATCH(relu_bwd, x, dy, dx, n);
}
void axpy(float a, const float* x, float* y, int64_t n) { AUGKD_DISPATCH(axpy, a, x, y, n); }
void scale(float a, float* x, int64_t n) { AUGKD_DISPATCH(scale, a, x, n); }
void vadd(const float* a, const float* b, float* y, int64_t n) {
  AUGKD_DISPATCH(vadd, a, b, y, n);
}
float reduce_sum(const float* x, int64_t n) { AUGKD_DISPATCH(reduce_sum, x, n); }
float dot(const float* a, const float* b, int64_t n) { AUGKD_DISPATCH(dot, a, b, n); }
float reduce_sumsq_centered(const float* x, float mean, int64_t n) {
  AUGKD_DISPATCH(reduce_sumsq_centered, x, mean, n);
}
void sgd_momentum(float* w, float* v, const float* g, int64_t n, float lr, float momentum,
                  float wd) {
  AUGKD_DISPATCH(sgd_momentum, w, v, g, n, lr, momentum, wd);
}

#undef AUGKD_DISPATCH

}  // namespace augkd::kernels
