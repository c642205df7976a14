#include <doctest.h>

#include <random>

#include "stagen/analysis.hpp"
#include "stagen/designer.hpp"
#include "stagen/dynamics.hpp"
#include "stagen/kernels.hpp"
#include "support.hpp"

using namespace stagen;
namespace k = stagen::kernels;

namespace {

const k::KernelTable* simd() {
  const k::KernelTable* t = k::avx2_table();
  return t && k::cpu_has_avx2() ? t : nullptr;
}

double max_diff(const cvec& a, const cvec& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// Odd lengths exercise the vector tails.
const std::size_t kLengths[] = {0, 1, 3, 4, 7, 16, 33, 1001};

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("scalar and avx2 primitives agree") {
    const k::KernelTable* v = simd();
    if (!v) {
      MESSAGE("AVX2 variant unavailable; equivalence not exercised");
      return;
    }
    const k::KernelTable& s = k::scalar_table();
    std::mt19937_64 rng(7);
    const cplx a(0.3, -1.7), b(-0.25, 0.5);
    for (std::size_t n : kLengths) {
      CAPTURE(n);
      const cvec x = test::random_vector(n, rng), y = test::random_vector(n, rng);
      const cvec c1 = test::random_vector(n, rng), c2 = test::random_vector(n, rng);

      cvec ys = y, yv = y;
      s.axpy(ys.data(), a, x.data(), n);
      v->axpy(yv.data(), a, x.data(), n);
      CHECK(max_diff(ys, yv) < 1e-14);

      cvec os(n), ov(n);
      s.axpy_into(os.data(), x.data(), a, y.data(), n);
      v->axpy_into(ov.data(), x.data(), a, y.data(), n);
      CHECK(max_diff(os, ov) < 1e-14);

      cvec accs = y, accv = y, nexts(n), nextv(n);
      s.rk_stage(accs.data(), nexts.data(), x.data(), c1.data(), b, a, n);
      v->rk_stage(accv.data(), nextv.data(), x.data(), c1.data(), b, a, n);
      CHECK(max_diff(accs, accv) < 1e-14);
      CHECK(max_diff(nexts, nextv) < 1e-14);

      s.rk_start(accs.data(), nexts.data(), x.data(), c1.data(), b, a, n);
      v->rk_start(accv.data(), nextv.data(), x.data(), c1.data(), b, a, n);
      CHECK(max_diff(accs, accv) < 1e-14);
      CHECK(max_diff(nexts, nextv) < 1e-14);
      s.rk_start(accs.data(), nullptr, x.data(), c2.data(), b, a, n);
      v->rk_start(accv.data(), nullptr, x.data(), c2.data(), b, a, n);
      CHECK(max_diff(accs, accv) < 1e-14);

      cvec xs = x, xv = x;
      s.scale(xs.data(), a, n);
      v->scale(xv.data(), a, n);
      CHECK(max_diff(xs, xv) < 1e-14);

      cvec ts = y, tv = y;
      s.tridiag_acc(ts.data(), x.data(), c1.data(), c2.data(), n);
      v->tridiag_acc(tv.data(), x.data(), c1.data(), c2.data(), n);
      CHECK(max_diff(ts, tv) < 1e-13);

      cvec ms = y, mv = y;
      s.mul_acc(ms.data(), c1.data(), x.data(), n);
      v->mul_acc(mv.data(), c1.data(), x.data(), n);
      CHECK(max_diff(ms, mv) < 1e-14);

      cvec ss = y, sv = y;
      s.shifted_mul_acc(ss.data(), a, c1.data(), x.data(), n);
      v->shifted_mul_acc(sv.data(), a, c1.data(), x.data(), n);
      CHECK(max_diff(ss, sv) < 1e-13);

      CHECK(std::abs(s.norm2(x.data(), n) - v->norm2(x.data(), n)) < 1e-12 * (1.0 + n));
      CHECK(std::abs(s.dot(x.data(), y.data(), n) - v->dot(x.data(), y.data(), n)) < 1e-12 * (1.0 + n));
    }
  }

  TEST_CASE("gather_acc agrees across variants and with the definition") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t n : kLengths) {
      CAPTURE(n);
      std::vector<cvec> xs;
      std::vector<std::vector<double>> rs;
      for (int t = 0; t < 5; ++t) {
        xs.push_back(test::random_vector(n, rng));
        std::vector<double> r(2 * n);
        for (std::size_t i = 0; i < n; ++i) r[2 * i] = r[2 * i + 1] = u(rng);
        rs.push_back(std::move(r));
      }
      // Real, imaginary and general scalars, with and without weights.
      const std::vector<k::GatherTerm> terms{{xs[0].data(), nullptr, cplx(0.7, 0.0)},
                                            {xs[1].data(), rs[1].data(), cplx(0.0, -1.3)},
                                            {xs[2].data(), rs[2].data(), cplx(0.4, 0.9)},
                                            {xs[3].data(), nullptr, cplx(-0.2, 0.6)},
                                            {xs[4].data(), rs[4].data(), cplx(1.1, 0.0)}};
      const cvec y = test::random_vector(n, rng);
      cvec ref = y;
      for (std::size_t i = 0; i < n; ++i) {
        for (const auto& t : terms) ref[i] += t.a * (t.r ? t.r[2 * i] : 1.0) * t.x[i];
      }
      cvec out = y;
      k::scalar_table().gather_acc(out.data(), terms.data(), terms.size(), n);
      CHECK(max_diff(out, ref) < 1e-14);
      if (const k::KernelTable* v = simd()) {
        cvec ov = y;
        v->gather_acc(ov.data(), terms.data(), terms.size(), n);
        CHECK(max_diff(ov, ref) < 1e-14);
      }
    }
  }

  TEST_CASE("STAGEN_KERNELS selection names a known table") {
    const std::string name = k::active().name;
    CHECK((name == "scalar" || name == "avx2"));
  }

  TEST_CASE("closed propagation is kernel independent") {
    const k::KernelTable* v = simd();
    if (!v) return;
    DesignProblem p;
    p.kind = DesignKind::Qubit;
    p.omega = angular_from_hz(1e9);
    p.t_f = 1.89e-9;
    p.theta_target = kPi / 8.0;
    const DesignResult d = design(p);
    const LayoutPtr L = make_layout(std::vector<QubitSpec>(3, QubitSpec{angular_from_hz(10e9)}), {ModeSpec{p.omega, 12}});
    const StateVector psi0 = StateVector::basis(L, 0);
    EvolutionConfig cs, cv;
    cs.kernels = &k::scalar_table();
    cv.kernels = v;
    const TrajectoryRecord a = schrodinger_evolve(L, d.pulse, psi0, cs);
    const TrajectoryRecord b = schrodinger_evolve(L, d.pulse, psi0, cv);
    CHECK(a.kernel_name == std::string("scalar"));
    CHECK(b.kernel_name == std::string("avx2"));
    double diff = 0.0;
    for (std::size_t i = 0; i < L->dimension(); ++i) diff = std::max(diff, std::abs((*a.final_state)[i] - (*b.final_state)[i]));
    CHECK(diff < 1e-11);
  }

  TEST_CASE("open propagation is kernel independent") {
    const k::KernelTable* v = simd();
    if (!v) return;
    const double w = angular_from_hz(6.6e9);
    const LayoutPtr L = make_layout({QubitSpec{angular_from_hz(10e9)}}, {ModeSpec{w, 6}, ModeSpec{w, 5}});
    const ConstantPulse pulse{0.05 * w, 4.0 * kTwoPi / w};
    for (auto basis : {DissipatorBasis::EnergyEigenbasis, DissipatorBasis::ZBasisLiteral}) {
      CAPTURE(to_string(basis));
      LindbladConfig lc = uniform_rates(*L, 0.02 * w, 30.0 / w, 50.0 / w, basis);
      EvolutionConfig cs, cv;
      cs.kernels = &k::scalar_table();
      cv.kernels = v;
      const DensityMatrix rho0 = DensityMatrix::from_pure(StateVector::basis(L, 0));
      const TrajectoryRecord a = lindblad_evolve(L, pulse, rho0, cs, lc);
      const TrajectoryRecord b = lindblad_evolve(L, pulse, rho0, cv, lc);
      CHECK((a.final_density->entries() - b.final_density->entries()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}
