#pragma once

// Data-parallel complex vector primitives used by the propagators.
//
// Every primitive exists as a portable scalar reference and, when the build
// and the CPU allow it, as an AVX2/FMA variant. The active table is chosen once
// at first use; setting STAGEN_KERNELS=scalar in the environment forces the
// reference path. Both variants must agree to rounding (see kernels tests).

#include <cstddef>
#include <span>

#include "stagen/types.hpp"

namespace stagen::kernels {

// One term of a gathered row update: out[i] += a * (r ? r[2i] : 1) * x[i].
// r holds each real weight twice (r[2i] == r[2i+1]) so that it lines up with
// interleaved complex storage.
struct GatherTerm {
  const cplx* x;
  const double* r;
  cplx a;
};

struct KernelTable {
  const char* name;
  // y += a * x
  void (*axpy)(cplx* y, cplx a, const cplx* x, std::size_t n);
  // out = x + a * y
  void (*axpy_into)(cplx* out, const cplx* x, cplx a, const cplx* y, std::size_t n);
  // acc += b * k;  next = base + a * k   (one fused Runge-Kutta stage update)
  void (*rk_stage)(cplx* acc, cplx* next, const cplx* base, const cplx* k, cplx b, cplx a,
                   std::size_t n);
  // acc = base + b * k;  next = base + a * k   (first stage; next may be null)
  void (*rk_start)(cplx* acc, cplx* next, const cplx* base, const cplx* k, cplx b, cplx a,
                   std::size_t n);
  // x *= a
  void (*scale)(cplx* x, cplx a, std::size_t n);
  // out[i] += sub[i] * in[i-1] + sup[i] * in[i+1]   (missing neighbours are skipped)
  void (*tridiag_acc)(cplx* out, const cplx* in, const cplx* sub, const cplx* sup,
                      std::size_t n);
  // out[i] += coef[i] * x[i]
  void (*mul_acc)(cplx* out, const cplx* coef, const cplx* x, std::size_t n);
  // out[i] += (u + v[i]) * x[i]
  void (*shifted_mul_acc)(cplx* out, cplx u, const cplx* v, const cplx* x, std::size_t n);
  // sum |x_i|^2
  double (*norm2)(const cplx* x, std::size_t n);
  // sum conj(x_i) * y_i
  cplx (*dot)(const cplx* x, const cplx* y, std::size_t n);
  // out[i] += sum over terms, in one pass over out
  void (*gather_acc)(cplx* out, const GatherTerm* terms, std::size_t count, std::size_t n);
};

const KernelTable& scalar_table();
/// nullptr when the AVX2 variants were not compiled in.
const KernelTable* avx2_table();
bool cpu_has_avx2();

/// The table selected for this process.
const KernelTable& active();

inline void axpy(std::span<cplx> y, cplx a, std::span<const cplx> x) {
  active().axpy(y.data(), a, x.data(), y.size());
}
inline void axpy_into(std::span<cplx> out, std::span<const cplx> x, cplx a,
                      std::span<const cplx> y) {
  active().axpy_into(out.data(), x.data(), a, y.data(), out.size());
}
inline void scale(std::span<cplx> x, cplx a) { active().scale(x.data(), a, x.size()); }
inline double norm2(std::span<const cplx> x) { return active().norm2(x.data(), x.size()); }
inline cplx dot(std::span<const cplx> x, std::span<const cplx> y) {
  return active().dot(x.data(), y.data(), x.size());
}

}  // namespace stagen::kernels
