// AVX2/FMA variants of the complex vector primitives. This translation unit is
// compiled with -mavx2 -mfma and only ever entered after a runtime CPU check.

#include <immintrin.h>

#include "stagen/kernels.hpp"

namespace stagen::kernels {
namespace {

// Two interleaved complex doubles per register: [re0, im0, re1, im1].
inline __m256d load2(const cplx* p) { return _mm256_loadu_pd(reinterpret_cast<const double*>(p)); }
inline void store2(cplx* p, __m256d v) { _mm256_storeu_pd(reinterpret_cast<double*>(p), v); }

struct Broadcast {
  __m256d re, im;
  explicit Broadcast(cplx a) : re(_mm256_set1_pd(a.real())), im(_mm256_set1_pd(a.imag())) {}
};

// a * x for a broadcast scalar a.
inline __m256d cmul(const Broadcast& a, __m256d x) {
  const __m256d xs = _mm256_permute_pd(x, 0x5);  // [im0, re0, im1, re1]
  return _mm256_fmaddsub_pd(a.re, x, _mm256_mul_pd(a.im, xs));
}

// a * x, both vectors.
inline __m256d cmulv(__m256d a, __m256d x) {
  const __m256d are = _mm256_movedup_pd(a);
  const __m256d aim = _mm256_permute_pd(a, 0xF);
  const __m256d xs = _mm256_permute_pd(x, 0x5);
  return _mm256_fmaddsub_pd(are, x, _mm256_mul_pd(aim, xs));
}

void axpy(cplx* y, cplx a, const cplx* x, std::size_t n) {
  const Broadcast ab(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) store2(y + i, _mm256_add_pd(load2(y + i), cmul(ab, load2(x + i))));
  for (; i < n; ++i) y[i] += a * x[i];
}

void axpy_into(cplx* out, const cplx* x, cplx a, const cplx* y, std::size_t n) {
  const Broadcast ab(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) store2(out + i, _mm256_add_pd(load2(x + i), cmul(ab, load2(y + i))));
  for (; i < n; ++i) out[i] = x[i] + a * y[i];
}

void rk_stage(cplx* acc, cplx* next, const cplx* base, const cplx* k, cplx b, cplx a,
              std::size_t n) {
  const Broadcast bb(b), ab(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d kv = load2(k + i);
    store2(acc + i, _mm256_add_pd(load2(acc + i), cmul(bb, kv)));
    store2(next + i, _mm256_add_pd(load2(base + i), cmul(ab, kv)));
  }
  for (; i < n; ++i) {
    acc[i] += b * k[i];
    next[i] = base[i] + a * k[i];
  }
}

void rk_start(cplx* acc, cplx* next, const cplx* base, const cplx* k, cplx b, cplx a, std::size_t n) {
  const Broadcast bb(b), ab(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d kv = load2(k + i);
    const __m256d bv = load2(base + i);
    store2(acc + i, _mm256_add_pd(bv, cmul(bb, kv)));
    if (next) store2(next + i, _mm256_add_pd(bv, cmul(ab, kv)));
  }
  for (; i < n; ++i) {
    acc[i] = base[i] + b * k[i];
    if (next) next[i] = base[i] + a * k[i];
  }
}

void scale(cplx* x, cplx a, std::size_t n) {
  const Broadcast ab(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) store2(x + i, cmul(ab, load2(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void tridiag_acc(cplx* out, const cplx* in, const cplx* sub, const cplx* sup, std::size_t n) {
  if (n < 2) return;
  out[0] += sup[0] * in[1];
  std::size_t i = 1;
  for (; i + 2 < n; i += 2) {
    __m256d acc = load2(out + i);
    acc = _mm256_add_pd(acc, cmulv(load2(sub + i), load2(in + i - 1)));
    acc = _mm256_add_pd(acc, cmulv(load2(sup + i), load2(in + i + 1)));
    store2(out + i, acc);
  }
  for (; i + 1 < n; ++i) out[i] += sub[i] * in[i - 1] + sup[i] * in[i + 1];
  out[n - 1] += sub[n - 1] * in[n - 2];
}

void mul_acc(cplx* out, const cplx* coef, const cplx* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    store2(out + i, _mm256_add_pd(load2(out + i), cmulv(load2(coef + i), load2(x + i))));
  for (; i < n; ++i) out[i] += coef[i] * x[i];
}

void shifted_mul_acc(cplx* out, cplx u, const cplx* v, const cplx* x, std::size_t n) {
  const __m256d uv = _mm256_setr_pd(u.real(), u.imag(), u.real(), u.imag());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d c = _mm256_add_pd(uv, load2(v + i));
    store2(out + i, _mm256_add_pd(load2(out + i), cmulv(c, load2(x + i))));
  }
  for (; i < n; ++i) out[i] += (u + v[i]) * x[i];
}

double norm2(const cplx* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d v = load2(x + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s += std::norm(x[i]);
  return s;
}

cplx dot(const cplx* x, const cplx* y, std::size_t n) {
  // conj(x) * y = (xr*yr + xi*yi) + i (xr*yi - xi*yr)
  __m256d re = _mm256_setzero_pd();
  __m256d im = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d xv = load2(x + i);
    const __m256d yv = load2(y + i);
    re = _mm256_fmadd_pd(xv, yv, re);                              // [xr*yr, xi*yi, ...]
    im = _mm256_fmadd_pd(xv, _mm256_permute_pd(yv, 0x5), im);      // [xr*yi, xi*yr, ...]
  }
  alignas(32) double r[4], m[4];
  _mm256_store_pd(r, re);
  _mm256_store_pd(m, im);
  cplx s{(r[0] + r[1]) + (r[2] + r[3]), (m[0] - m[1]) + (m[2] - m[3])};
  for (; i < n; ++i) s += std::conj(x[i]) * y[i];
  return s;
}

// a * y = re(a) y + i im(a) y, so the real and imaginary parts of every
// term's scalar are accumulated separately and the factor i is applied once
// per block. The inner loop is then shuffle free.
void gather_acc(cplx* out, const GatherTerm* terms, std::size_t count, std::size_t n) {
  const double* o = reinterpret_cast<const double*>(out);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d re0 = _mm256_setzero_pd(), re1 = _mm256_setzero_pd();
    __m256d im0 = _mm256_setzero_pd(), im1 = _mm256_setzero_pd();
    for (std::size_t t = 0; t < count; ++t) {
      const GatherTerm& g = terms[t];
      const double* x = reinterpret_cast<const double*>(g.x + i);
      __m256d y0 = _mm256_loadu_pd(x), y1 = _mm256_loadu_pd(x + 4);
      if (g.r) {
        y0 = _mm256_mul_pd(y0, _mm256_loadu_pd(g.r + 2 * i));
        y1 = _mm256_mul_pd(y1, _mm256_loadu_pd(g.r + 2 * i + 4));
      }
      const __m256d ar = _mm256_set1_pd(g.a.real());
      re0 = _mm256_fmadd_pd(ar, y0, re0);
      re1 = _mm256_fmadd_pd(ar, y1, re1);
      if (g.a.imag() != 0.0) {
        const __m256d ai = _mm256_set1_pd(g.a.imag());
        im0 = _mm256_fmadd_pd(ai, y0, im0);
        im1 = _mm256_fmadd_pd(ai, y1, im1);
      }
    }
    // [r_re - i_im, r_im + i_re]
    re0 = _mm256_addsub_pd(re0, _mm256_permute_pd(im0, 0x5));
    re1 = _mm256_addsub_pd(re1, _mm256_permute_pd(im1, 0x5));
    store2(out + i, _mm256_add_pd(_mm256_loadu_pd(o + 2 * i), re0));
    store2(out + i + 2, _mm256_add_pd(_mm256_loadu_pd(o + 2 * i + 4), re1));
  }
  for (; i < n; ++i) {
    cplx s(0.0);
    for (std::size_t t = 0; t < count; ++t) {
      const GatherTerm& g = terms[t];
      s += g.a * ((g.r ? g.r[2 * i] : 1.0) * g.x[i]);
    }
    out[i] += s;
  }
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{"avx2", axpy,    axpy_into,       rk_stage, rk_start, scale,
                                 tridiag_acc, mul_acc, shifted_mul_acc, norm2,    dot, gather_acc};
  return &table;
}

}  // namespace stagen::kernels
