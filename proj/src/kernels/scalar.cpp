#include "stagen/kernels.hpp"

namespace stagen::kernels {
namespace {

void axpy(cplx* y, cplx a, const cplx* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void axpy_into(cplx* out, const cplx* x, cplx a, const cplx* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + a * y[i];
}

void rk_stage(cplx* acc, cplx* next, const cplx* base, const cplx* k, cplx b, cplx a,
              std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    acc[i] += b * k[i];
    next[i] = base[i] + a * k[i];
  }
}

void rk_start(cplx* acc, cplx* next, const cplx* base, const cplx* k, cplx b, cplx a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    acc[i] = base[i] + b * k[i];
    if (next) next[i] = base[i] + a * k[i];
  }
}

void scale(cplx* x, cplx a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void tridiag_acc(cplx* out, const cplx* in, const cplx* sub, const cplx* sup, std::size_t n) {
  if (n == 0) return;
  if (n == 1) return;
  out[0] += sup[0] * in[1];
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] += sub[i] * in[i - 1] + sup[i] * in[i + 1];
  out[n - 1] += sub[n - 1] * in[n - 2];
}

void mul_acc(cplx* out, const cplx* coef, const cplx* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] += coef[i] * x[i];
}

void shifted_mul_acc(cplx* out, cplx u, const cplx* v, const cplx* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] += (u + v[i]) * x[i];
}

double norm2(const cplx* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::norm(x[i]);
  return s;
}

cplx dot(const cplx* x, const cplx* y, std::size_t n) {
  cplx s{};
  for (std::size_t i = 0; i < n; ++i) s += std::conj(x[i]) * y[i];
  return s;
}

void gather_acc(cplx* out, const GatherTerm* terms, std::size_t count, std::size_t n) {
  for (std::size_t t = 0; t < count; ++t) {
    const GatherTerm& g = terms[t];
    if (g.r) {
      for (std::size_t i = 0; i < n; ++i) out[i] += g.a * (g.r[2 * i] * g.x[i]);
    } else {
      for (std::size_t i = 0; i < n; ++i) out[i] += g.a * g.x[i];
    }
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", axpy,    axpy_into,       rk_stage, rk_start, scale,
                                 tridiag_acc, mul_acc, shifted_mul_acc, norm2,    dot, gather_acc};
  return table;
}

}  // namespace stagen::kernels
