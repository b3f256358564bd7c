// AVX2/FMA variants of the float kernels. This translation unit is compiled
// with -mavx2 -mfma; callers must only reach it after checking CPU support.

#ifdef __x86_64__

#include <immintrin.h>

#include "augkd/kernels.hpp"

namespace augkd::kernels::avx2 {

namespace {

inline float hsum8(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_hadd_ps(lo, lo);
  lo = _mm_hadd_ps(lo, lo);
  return _mm_cvtss_f32(lo);
}

inline void row_scale(float* c, int n, float beta) {
  if (beta == 0.0f) {
    int j = 0;
    const __m256 z = _mm256_setzero_ps();
    for (; j + 8 <= n; j += 8) _mm256_storeu_ps(c + j, z);
    for (; j < n; ++j) c[j] = 0.0f;
  } else if (beta != 1.0f) {
    int j = 0;
    const __m256 b = _mm256_set1_ps(beta);
    for (; j + 8 <= n; j += 8)
      _mm256_storeu_ps(c + j, _mm256_mul_ps(b, _mm256_loadu_ps(c + j)));
    for (; j < n; ++j) c[j] *= beta;
  }
}

// c[0..n) += a * b[0..n)
inline void fma_row(float a, const float* b, float* c, int n) {
  const __m256 av = _mm256_set1_ps(a);
  int j = 0;
  for (; j + 16 <= n; j += 16) {
    __m256 c0 = _mm256_loadu_ps(c + j);
    __m256 c1 = _mm256_loadu_ps(c + j + 8);
    c0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b + j), c0);
    c1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b + j + 8), c1);
    _mm256_storeu_ps(c + j, c0);
    _mm256_storeu_ps(c + j + 8, c1);
  }
  for (; j + 8 <= n; j += 8) {
    __m256 c0 = _mm256_loadu_ps(c + j);
    c0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b + j), c0);
    _mm256_storeu_ps(c + j, c0);
  }
  for (; j < n; ++j) c[j] += a * b[j];
}

}  // namespace

void gemm_nn(int M, int N, int K, const float* A, const float* B, float* C, float beta) {
  for (int i = 0; i < M; ++i) {
    float* c = C + static_cast<int64_t>(i) * N;
    row_scale(c, N, beta);
    const float* a = A + static_cast<int64_t>(i) * K;
    int k = 0;
    // Two k at a time keeps both FMA ports busy on the shared C row.
    for (; k + 2 <= K; k += 2) {
      const __m256 a0 = _mm256_set1_ps(a[k]);
      const __m256 a1 = _mm256_set1_ps(a[k + 1]);
      const float* b0 = B + static_cast<int64_t>(k) * N;
      const float* b1 = b0 + N;
      int j = 0;
      for (; j + 8 <= N; j += 8) {
        __m256 cv = _mm256_loadu_ps(c + j);
        cv = _mm256_fmadd_ps(a0, _mm256_loadu_ps(b0 + j), cv);
        cv = _mm256_fmadd_ps(a1, _mm256_loadu_ps(b1 + j), cv);
        _mm256_storeu_ps(c + j, cv);
      }
      for (; j < N; ++j) c[j] += a[k] * b0[j] + a[k + 1] * b1[j];
    }
    for (; k < K; ++k) fma_row(a[k], B + static_cast<int64_t>(k) * N, c, N);
  }
}

void gemm_nt(int M, int N, int K, const float* A, const float* B, float* C, float beta) {
  for (int i = 0; i < M; ++i) {
    const float* a = A + static_cast<int64_t>(i) * K;
    float* c = C + static_cast<int64_t>(i) * N;
    for (int j = 0; j < N; ++j) {
      const float* b = B + static_cast<int64_t>(j) * K;
      __m256 acc = _mm256_setzero_ps();
      int k = 0;
      for (; k + 8 <= K; k += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + k), _mm256_loadu_ps(b + k), acc);
      float s = hsum8(acc);
      for (; k < K; ++k) s += a[k] * b[k];
      c[j] = beta * c[j] + s;
    }
  }
}

void gemm_tn(int M, int N, int K, const float* A, const float* B, float* C, float beta) {
  for (int i = 0; i < M; ++i) row_scale(C + static_cast<int64_t>(i) * N, N, beta);
  for (int k = 0; k < K; ++k) {
    const float* a = A + static_cast<int64_t>(k) * M;
    const float* b = B + static_cast<int64_t>(k) * N;
    for (int i = 0; i < M; ++i) fma_row(a[i], b, C + static_cast<int64_t>(i) * N, N);
  }
}

void relu_fwd(const float* x, float* y, int64_t n) {
  const __m256 z = _mm256_setzero_ps();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_max_ps(_mm256_loadu_ps(x + i), z));
  for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_bwd(const float* x, const float* dy, float* dx, int64_t n) {
  const __m256 z = _mm256_setzero_ps();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), z, _CMP_GT_OQ);
    _mm256_storeu_ps(dx + i, _mm256_and_ps(mask, _mm256_loadu_ps(dy + i)));
  }
  for (; i < n; ++i) dx[i] = x[i] > 0.0f ? dy[i] : 0.0f;
}

void axpy(float a, const float* x, float* y, int64_t n) {
  const __m256 av = _mm256_set1_ps(a);
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 yv = _mm256_loadu_ps(y + i);
    yv = _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), yv);
    _mm256_storeu_ps(y + i, yv);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale(float a, float* x, int64_t n) {
  const __m256 av = _mm256_set1_ps(a);
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(x + i, _mm256_mul_ps(av, _mm256_loadu_ps(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void vadd(const float* a, const float* b, float* y, int64_t n) {
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) y[i] = a[i] + b[i];
}

float reduce_sum(const float* x, int64_t n) {
  __m256 acc = _mm256_setzero_ps();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
  float s = hsum8(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

float dot(const float* a, const float* b, int64_t n) {
  __m256 acc = _mm256_setzero_ps();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc);
  float s = hsum8(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

float reduce_sumsq_centered(const float* x, float mean, int64_t n) {
  const __m256 m = _mm256_set1_ps(mean);
  __m256 acc = _mm256_setzero_ps();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(x + i), m);
    acc = _mm256_fmadd_ps(d, d, acc);
  }
  float s = hsum8(acc);
  for (; i < n; ++i) {
    const float d = x[i] - mean;
    s += d * d;
  }
  return s;
}

void sgd_momentum(float* w, float* v, const float* g, int64_t n, float lr, float momentum,
                  float wd) {
  const __m256 mo = _mm256_set1_ps(momentum);
  const __m256 wdv = _mm256_set1_ps(wd);
  const __m256 lrv = _mm256_set1_ps(lr);
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 wv = _mm256_loadu_ps(w + i);
    __m256 vv = _mm256_loadu_ps(v + i);
    vv = _mm256_fmadd_ps(mo, vv, _mm256_fmadd_ps(wdv, wv, _mm256_loadu_ps(g + i)));
    _mm256_storeu_ps(v + i, vv);
    _mm256_storeu_ps(w + i, _mm256_fnmadd_ps(lrv, vv, wv));
  }
  for (; i < n; ++i) {
    v[i] = momentum * v[i] + g[i] + wd * w[i];
    w[i] -= lr * v[i];
  }
}

}  // namespace augkd::kernels::avx2

#endif  // __x86_64__
