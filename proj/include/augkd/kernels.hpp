#pragma once

#include <cstdint>
#include <string>

namespace augkd::kernels {

// Arithmetic inner loops used by the layer implementations. Every kernel has
// a scalar reference version; hot float paths additionally have an AVX2
// variant selected at runtime. The two lanes are equivalence-tested against
// each other (see tests/test_kernels.cpp).
//
// GEMM conventions (all matrices row-major, C is M x N):
//   gemm_nn: C = A[M,K] * B[K,N]       + beta * C
//   gemm_nt: C = A[M,K] * B[N,K]^T     + beta * C
//   gemm_tn: C = A[K,M]^T * B[K,N]     + beta * C

enum class Backend { scalar, avx2 };

Backend active_backend();
void set_backend(Backend b);
bool avx2_supported();
std::string backend_name(Backend b);

namespace scalar {

template <typename T>
void gemm_nn(int M, int N, int K, const T* A, const T* B, T* C, T beta) {
  for (int i = 0; i < M; ++i) {
    T* c = C + static_cast<int64_t>(i) * N;
    for (int j = 0; j < N; ++j) c[j] *= beta;
    const T* a = A + static_cast<int64_t>(i) * K;
    for (int k = 0; k < K; ++k) {
      const T av = a[k];
      const T* b = B + static_cast<int64_t>(k) * N;
      for (int j = 0; j < N; ++j) c[j] += av * b[j];
    }
  }
}

template <typename T>
void gemm_nt(int M, int N, int K, const T* A, const T* B, T* C, T beta) {
  for (int i = 0; i < M; ++i) {
    const T* a = A + static_cast<int64_t>(i) * K;
    T* c = C + static_cast<int64_t>(i) * N;
    for (int j = 0; j < N; ++j) {
      const T* b = B + static_cast<int64_t>(j) * K;
      T acc = 0;
      for (int k = 0; k < K; ++k) acc += a[k] * b[k];
      c[j] = beta * c[j] + acc;
    }
  }
}

template <typename T>
void gemm_tn(int M, int N, int K, const T* A, const T* B, T* C, T beta) {
  for (int i = 0; i < M; ++i) {
    T* c = C + static_cast<int64_t>(i) * N;
    for (int j = 0; j < N; ++j) c[j] *= beta;
  }
  for (int k = 0; k < K; ++k) {
    const T* a = A + static_cast<int64_t>(k) * M;
    const T* b = B + static_cast<int64_t>(k) * N;
    for (int i = 0; i < M; ++i) {
      const T av = a[i];
      T* c = C + static_cast<int64_t>(i) * N;
      for (int j = 0; j < N; ++j) c[j] += av * b[j];
    }
  }
}

template <typename T>
void relu_fwd(const T* x, T* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_bwd(const T* x, const T* dy, T* dx, int64_t n) {
  for (int64_t i = 0; i < n; ++i) dx[i] = x[i] > T(0) ? dy[i] : T(0);
}

template <typename T>
void axpy(T a, const T* x, T* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
void scale(T a, T* x, int64_t n) {
  for (int64_t i = 0; i < n; ++i) x[i] *= a;
}

template <typename T>
void vadd(const T* a, const T* b, T* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}

template <typename T>
T reduce_sum(const T* x, int64_t n) {
  T acc = 0;
  for (int64_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

template <typename T>
T dot(const T* a, const T* b, int64_t n) {
  T acc = 0;
  for (int64_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
T reduce_sumsq_centered(const T* x, T mean, int64_t n) {
  T acc = 0;
  for (int64_t i = 0; i < n; ++i) {
    const T d = x[i] - mean;
    acc += d * d;
  }
  return acc;
}

// v = momentum*v + g + wd*w; w -= lr*v
template <typename T>
void sgd_momentum(T* w, T* v, const T* g, int64_t n, T lr, T momentum, T wd) {
  for (int64_t i = 0; i < n; ++i) {
    v[i] = momentum * v[i] + g[i] + wd * w[i];
    w[i] -= lr * v[i];
  }
}

}  // namespace scalar

#ifdef __x86_64__
namespace avx2 {
void gemm_nn(int M, int N, int K, const float* A, const float* B, float* C, float beta);
void gemm_nt(int M, int N, int K, const float* A, const float* B, float* C, float beta);
void gemm_tn(int M, int N, int K, const float* A, const float* B, float* C, float beta);
void relu_fwd(const float* x, float* y, int64_t n);
void relu_bwd(const float* x, const float* dy, float* dx, int64_t n);
void axpy(float a, const float* x, float* y, int64_t n);
void scale(float a, float* x, int64_t n);
void vadd(const float* a, const float* b, float* y, int64_t n);
float reduce_sum(const float* x, int64_t n);
float dot(const float* a, const float* b, int64_t n);
float reduce_sumsq_centered(const float* x, float mean, int64_t n);
void sgd_momentum(float* w, float* v, const float* g, int64_t n, float lr, float momentum,
                  float wd);
}  // namespace avx2
#endif

// Dispatched entry points. Non-float types always take the scalar lane;
// float routes through the runtime-selected backend (float overloads are
// defined in kernels.cpp).
void gemm_nn(int M, int N, int K, const float* A, const float* B, float* C, float beta);
void gemm_nt(int M, int N, int K, const float* A, const float* B, float* C, float beta);
void gemm_tn(int M, int N, int K, const float* A, const float* B, float* C, float beta);
void relu_fwd(const float* x, float* y, int64_t n);
void relu_bwd(const float* x, const float* dy, float* dx, int64_t n);
void axpy(float a, const float* x, float* y, int64_t n);
void scale(float a, float* x, int64_t n);
void vadd(const float* a, const float* b, float* y, int64_t n);
float reduce_sum(const float* x, int64_t n);
float dot(const float* a, const float* b, int64_t n);
float reduce_sumsq_centered(const float* x, float mean, int64_t n);
void sgd_momentum(float* w, float* v, const float* g, int64_t n, float lr, float momentum,
                  float wd);

template <typename T>
void gemm_nn(int M, int N, int K, const T* A, const T* B, T* C, T beta) {
  scalar::gemm_nn(M, N, K, A, B, C, beta);
}
template <typename T>
void gemm_nt(int M, int N, int K, const T* A, const T* B, T* C, T beta) {
  scalar::gemm_nt(M, N, K, A, B, C, beta);
}
template <typename T>
void gemm_tn(int M, int N, int K, const T* A, const T* B, T* C, T beta) {
  scalar::gemm_tn(M, N, K, A, B, C, beta);
}
template <typename T>
void relu_fwd(const T* x, T* y, int64_t n) {
  scalar::relu_fwd(x, y, n);
}
template <typename T>
void relu_bwd(const T* x, const T* dy, T* dx, int64_t n) {
  scalar::relu_bwd(x, dy, dx, n);
}
template <typename T>
void axpy(T a, const T* x, T* y, int64_t n) {
  scalar::axpy(a, x, y, n);
}
template <typename T>
void scale(T a, T* x, int64_t n) {
  scalar::scale(a, x, n);
}
template <typename T>
void vadd(const T* a, const T* b, T* y, int64_t n) {
  scalar::vadd(a, b, y, n);
}
template <typename T>
T reduce_sum(const T* x, int64_t n) {
  return scalar::reduce_sum(x, n);
}
template <typename T>
T dot(const T* a, const T* b, int64_t n) {
  return scalar::dot(a, b, n);
}
template <typename T>
T reduce_sumsq_centered(const T* x, T mean, int64_t n) {
  return scalar::reduce_sumsq_centered(x, mean, n);
}
template <typename T>
void sgd_momentum(T* w, T* v, const T* g, int64_t n, T lr, T momentum, T wd) {
  scalar::sgd_momentum(w, v, g, n, lr, momentum, wd);
}

}  // namespace augkd::kernels
