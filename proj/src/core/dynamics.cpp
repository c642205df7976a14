#include "stagen/dynamics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stagen {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

struct ModeInfo {
  std::size_t stride;
  std::size_t dim;
  double omega;
};

// Everything the right-hand sides need, in the sx eigenbasis.
struct Model {
  LayoutPtr layout;
  CouplingProfile pulse;
  Frame frame;
  std::size_t N = 0, D = 0, block = 0, configs = 0;
  std::vector<double> S;  // sum of sx eigenvalues per qubit configuration
  std::vector<ModeInfo> modes;
  std::vector<double> h0;  // free energies per basis index
  std::vector<double> sqrt_k;
};

Model build_model(const LayoutPtr& layout, const CouplingProfile& pulse, Frame frame) {
  Model md{layout, pulse, frame};
  const TensorLayout& L = *layout;
  md.N = L.num_qubits();
  md.D = L.dimension();
  md.block = L.mode_block();
  md.configs = md.D / md.block;
  md.S.resize(md.configs);
  for (std::size_t q = 0; q < md.configs; ++q) {
    int s = 0;
    for (std::size_t n = 0; n < md.N; ++n) s += ((q >> (md.N - 1 - n)) & 1U) ? -1 : 1;
    md.S[q] = s;
  }
  std::size_t dmax = 2;
  for (std::size_t m = 0; m < L.num_modes(); ++m) {
    const std::size_t f = L.mode_factor(m);
    md.modes.push_back({L.stride(f), L.factor_dim(f), L.mode(m).frequency});
    dmax = std::max(dmax, L.factor_dim(f));
  }
  md.sqrt_k.resize(dmax + 1);
  for (std::size_t k = 0; k <= dmax; ++k) md.sqrt_k[k] = std::sqrt(static_cast<double>(k));
  md.h0.assign(md.D, 0.0);
  for (std::size_t i = 0; i < md.D; ++i) {
    double e = 0.0;
    for (std::size_t n = 0; n < md.N; ++n) e += 0.5 * L.qubit(n).frequency * (L.level(i, n) ? -1.0 : 1.0);
    for (std::size_t m = 0; m < md.modes.size(); ++m) {
      e += md.modes[m].omega * static_cast<double>(L.level(i, L.mode_factor(m)));
    }
    md.h0[i] = e;
  }
  return md;
}

double hamiltonian_bound(const Model& md) {
  double ladder = 0.0;
  for (const auto& m : md.modes) ladder += 2.0 * std::sqrt(static_cast<double>(m.dim - 1));
  double h = md.pulse.bound() * static_cast<double>(md.N) * ladder;
  if (md.frame == Frame::Lab) {
    double e = 0.0;
    for (double v : md.h0) e = std::max(e, std::abs(v));
    h += e;
  }
  return h;
}

// Rotate a lab-frame vector into the interaction picture at time t.
void to_interaction(const Model& md, cvec& v, double t) {
  for (std::size_t i = 0; i < md.D; ++i) v[i] *= std::polar(1.0, md.h0[i] * t);
}

void hadamard_wide(const TensorLayout& L, cplx* x, std::size_t width) {
  const std::size_t D = L.dimension() * width;
  for (std::size_t n = 0; n < L.num_qubits(); ++n) {
    const std::size_t s = L.stride(n) * width;
    for (std::size_t base = 0; base < D; base += 2 * s) {
      for (std::size_t j = 0; j < s; ++j) {
        const cplx a = x[base + j], b = x[base + s + j];
        x[base + j] = (a + b) * kInvSqrt2;
        x[base + s + j] = (a - b) * kInvSqrt2;
      }
    }
  }
}

cplx mode_phase(const Model& md, std::size_t m, double t) {
  return md.frame == Frame::Interaction ? std::polar(1.0, md.modes[m].omega * t) : cplx(1.0);
}

// ---------------------------------------------------------------------------
// Closed system. One RK4 stage evaluates k = -i H psi fiber by fiber (a fiber
// is a contiguous run of the last mode) and folds the stage update in
// immediately, so every vector is streamed once per stage.

enum class Stage { First, Middle, Last };

struct ClosedStepper {
  const Model& md;
  const kernels::KernelTable& kt;
  std::vector<cplx> minus_i_h0;  // lab frame only
  std::size_t fiber = 0;
  std::vector<cplx> k, sub, sup;
  std::vector<std::size_t> lv;

  ClosedStepper(const Model& m, const kernels::KernelTable& t) : md(m), kt(t) {
    if (md.frame == Frame::Lab) {
      minus_i_h0.resize(md.D);
      for (std::size_t i = 0; i < md.D; ++i) minus_i_h0[i] = cplx(0.0, -md.h0[i]);
    }
    fiber = md.modes.empty() ? md.D : md.modes.back().dim;
    k.resize(fiber);
    sub.resize(fiber);
    sup.resize(fiber);
  }

  // First:  acc = base + b k, next = base + a k
  // Middle: acc += b k,       next = base + a k
  // Last:   acc += b k
  void stage(double t, const cplx* in, const cplx* base, cplx* acc, cplx* next, cplx b, cplx a, Stage st) {
    const double g = md.pulse(t);
    const std::size_t M = md.modes.size();
    std::vector<cplx> eu(M), cu(M), cd(M);
    for (std::size_t m = 0; m < M; ++m) eu[m] = mode_phase(md, m, t);
    const std::size_t fibers_per_block = md.block / fiber;
    for (std::size_t q = 0; q < md.configs; ++q) {
      const cplx cq(0.0, -g * md.S[q]);
      const bool coupled = cq != cplx(0.0) && M > 0;
      if (coupled) {
        for (std::size_t m = 0; m < M; ++m) {
          cu[m] = cq * eu[m];
          cd[m] = cq * std::conj(eu[m]);
        }
        std::fill(sub.begin(), sub.end(), cplx(0.0));
        std::fill(sup.begin(), sup.end(), cplx(0.0));
        for (std::size_t n = 1; n < fiber; ++n) sub[n] = cu[M - 1] * md.sqrt_k[n];
        for (std::size_t n = 0; n + 1 < fiber; ++n) sup[n] = cd[M - 1] * md.sqrt_k[n + 1];
      }
      lv.assign(M > 0 ? M - 1 : 0, 0);
      for (std::size_t f = 0; f < fibers_per_block; ++f) {
        const std::size_t o = q * md.block + f * fiber;
        std::fill(k.begin(), k.end(), cplx(0.0));
        if (coupled) {
          kt.tridiag_acc(k.data(), in + o, sub.data(), sup.data(), fiber);
          for (std::size_t m = 0; m + 1 < M; ++m) {
            const std::size_t n = lv[m], s = md.modes[m].stride;
            if (n > 0) kt.axpy(k.data(), cu[m] * md.sqrt_k[n], in + o - s, fiber);
            if (n + 1 < md.modes[m].dim) kt.axpy(k.data(), cd[m] * md.sqrt_k[n + 1], in + o + s, fiber);
          }
        }
        if (!minus_i_h0.empty()) kt.mul_acc(k.data(), minus_i_h0.data() + o, in + o, fiber);
        switch (st) {
          case Stage::First:
            kt.axpy_into(acc + o, base + o, b, k.data(), fiber);
            kt.axpy_into(next + o, base + o, a, k.data(), fiber);
            break;
          case Stage::Middle:
            kt.rk_stage(acc + o, next + o, base + o, k.data(), b, a, fiber);
            break;
          case Stage::Last:
            kt.axpy(acc + o, b, k.data(), fiber);
            break;
        }
        // advance the mode-level counter, last non-fiber mode fastest
        for (std::size_t m = lv.size(); m-- > 0;) {
          if (++lv[m] < md.modes[m].dim) break;
          lv[m] = 0;
        }
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Observables on an interaction-frame, sx-basis vector.

std::vector<cplx> vector_mode_mean(const Model& md, const cvec& v, std::size_t lo, std::size_t hi) {
  std::vector<cplx> out(md.modes.size(), cplx(0.0));
  const TensorLayout& L = *md.layout;
  for (std::size_t m = 0; m < md.modes.size(); ++m) {
    const std::size_t f = L.mode_factor(m);
    const std::size_t s = md.modes[m].stride;
    cplx acc(0.0);
    for (std::size_t i = lo; i < hi; ++i) {
      const std::size_t n = L.level(i, f);
      if (n + 1 < md.modes[m].dim) acc += std::conj(v[i]) * md.sqrt_k[n + 1] * v[i + s];
    }
    out[m] = acc;
  }
  return out;
}

std::vector<double> vector_populations(const Model& md, cvec v) {
  hadamard_wide(*md.layout, v.data(), 1);
  std::vector<double> p(md.configs, 0.0);
  for (std::size_t q = 0; q < md.configs; ++q) {
    for (std::size_t r = 0; r < md.block; ++r) p[q] += std::norm(v[q * md.block + r]);
  }
  return p;
}

void record_vector(const Model& md, const EvolutionConfig& cfg, TrajectoryRecord& rec, const cvec& y, double t) {
  cvec v = y;
  if (md.frame == Frame::Lab) to_interaction(md, v, t);
  const double n2 = kernels::norm2(v);
  rec.times.push_back(t);
  rec.norms.push_back(std::sqrt(n2));
  rec.mode_mean.push_back(vector_mode_mean(md, v, 0, md.D));
  {
    double w = 0.0;
    for (std::size_t i = 0; i < md.block; ++i) w += std::norm(v[i]);
    auto b = vector_mode_mean(md, v, 0, md.block);
    for (auto& x : b) x = w > 0.0 ? x / w : cplx(0.0);
    rec.branch_mean.push_back(std::move(b));
  }
  if (cfg.record_populations && md.N > 0) rec.qubit_populations.push_back(vector_populations(md, v));
  if (cfg.record_states) {
    hadamard_wide(*md.layout, v.data(), 1);
    rec.states.emplace_back(md.layout, std::move(v));
  }
}

double resolve_t_f(const CouplingProfile& pulse, const EvolutionConfig& cfg) {
  const double t_f = cfg.t_f > 0.0 ? cfg.t_f : pulse.t_f();
  if (t_f > pulse.t_f() * (1.0 + 1e-12)) throw std::invalid_argument("evolution time exceeds the pulse window");
  return t_f;
}

std::size_t steps_for(const Model& md, const EvolutionConfig& cfg, double t_f, double extra_rate) {
  double wmax = 0.0;
  for (const auto& m : md.modes) wmax = std::max(wmax, m.omega);
  if (md.frame == Frame::Lab) {
    for (const auto& q : md.layout->qubits()) wmax = std::max(wmax, q.frequency);
  }
  double dt_max = std::numeric_limits<double>::infinity();
  if (wmax > 0.0) dt_max = kTwoPi / wmax / cfg.steps_per_period;
  if (cfg.dt > 0.0) {
    if (cfg.dt > dt_max * (1.0 + 1e-12)) {
      throw std::invalid_argument("dt exceeds 1/" + std::to_string(cfg.steps_per_period) + " of the fastest period");
    }
    const double r = t_f / cfg.dt;
    const double n = std::round(r);
    if (n < 1.0 || std::abs(n - r) > 1e-9 * r) throw std::invalid_argument("t_f is not an integer multiple of dt");
    return static_cast<std::size_t>(n);
  }
  const double hb = hamiltonian_bound(md) + extra_rate;
  if (hb > 0.0) dt_max = std::min(dt_max, cfg.stability_factor / hb);
  if (!std::isfinite(dt_max)) return 1;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t_f / dt_max * (1.0 - 1e-12))));
}

const kernels::KernelTable& table_for(const EvolutionConfig& cfg) {
  return cfg.kernels ? *cfg.kernels : kernels::active();
}

bool should_record(const EvolutionConfig& cfg, std::size_t done, std::size_t steps) {
  return done == steps || (cfg.record_stride && done % cfg.record_stride == 0);
}

}  // namespace

std::string to_string(Frame f) { return f == Frame::Interaction ? "interaction" : "lab"; }
std::string to_string(DissipatorBasis b) {
  return b == DissipatorBasis::EnergyEigenbasis ? "energy-eigenbasis" : "z-basis-literal";
}

void hadamard_qubits(const TensorLayout& layout, std::span<cplx> amplitudes) {
  if (amplitudes.size() != layout.dimension()) throw std::invalid_argument("vector size does not match layout");
  hadamard_wide(layout, amplitudes.data(), 1);
}

std::size_t step_count(const TensorLayout& layout, const CouplingProfile& pulse, const EvolutionConfig& config) {
  auto lp = std::make_shared<const TensorLayout>(layout);
  const Model md = build_model(lp, pulse, config.frame);
  return steps_for(md, config, resolve_t_f(pulse, config), 0.0);
}

TrajectoryRecord schrodinger_evolve(const LayoutPtr& layout, const CouplingProfile& pulse,
                                    const StateVector& initial, const EvolutionConfig& cfg) {
  if (!(initial.layout() == *layout)) throw std::invalid_argument("initial state layout does not match");
  const Model md = build_model(layout, pulse, cfg.frame);
  const kernels::KernelTable& kt = table_for(cfg);
  const double t_f = resolve_t_f(pulse, cfg);
  const std::size_t steps = steps_for(md, cfg, t_f, 0.0);
  const double dt = t_f / static_cast<double>(steps);
  const std::size_t D = md.D;

  cvec y(initial.amplitudes().begin(), initial.amplitudes().end());
  hadamard_wide(*layout, y.data(), 1);
  cvec acc(D), ta(D), tb(D);
  ClosedStepper f(md, kt);

  TrajectoryRecord rec;
  rec.steps = steps;
  rec.dt = dt;
  rec.kernel_name = kt.name;
  record_vector(md, cfg, rec, y, 0.0);

  const cplx h2(dt / 2.0), h3(dt / 3.0), h6(dt / 6.0), h1(dt);
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * dt;
    // Stage inputs alternate between two buffers so a stage never overwrites
    // the neighbours it is still reading.
    f.stage(t, y.data(), y.data(), acc.data(), ta.data(), h6, h2, Stage::First);
    f.stage(t + 0.5 * dt, ta.data(), y.data(), acc.data(), tb.data(), h3, h2, Stage::Middle);
    f.stage(t + 0.5 * dt, tb.data(), y.data(), acc.data(), ta.data(), h3, h1, Stage::Middle);
    f.stage(t + dt, ta.data(), y.data(), acc.data(), nullptr, h6, cplx(0.0), Stage::Last);
    y.swap(acc);

    const std::size_t done = s + 1;
    if (done % 16 == 0 || done == steps || cfg.renormalize) {
      const double n = std::sqrt(kt.norm2(y.data(), D));
      rec.max_drift = std::max(rec.max_drift, std::abs(n - 1.0));
      if (cfg.renormalize) {
        kt.scale(y.data(), cplx(1.0 / n), D);
      } else if (std::abs(n - 1.0) > cfg.drift_tolerance) {
        throw NumericalError("state norm drifted by " + std::to_string(n - 1.0) + " at t = " +
                             std::to_string(t + dt) + " s; use a smaller dt");
      }
    }
    if (should_record(cfg, done, steps)) record_vector(md, cfg, rec, y, static_cast<double>(done) * dt);
  }

  cvec out = y;
  if (md.frame == Frame::Lab) to_interaction(md, out, t_f);
  hadamard_wide(*layout, out.data(), 1);
  rec.final_state.emplace(layout, std::move(out));
  return rec;
}

// ---------------------------------------------------------------------------
// Open system. The density matrix is stored row-major in the sx basis and the
// generator is evaluated as  drho = X + X^dagger  with
//   X = -i H_eff rho + (1/2) sum_k J_k rho J_k^dagger,   H_eff = H - (i/2) sum_k J_k^dagger J_k.

namespace {

using Mat2 = Eigen::Matrix2cd;

struct QubitJump {
  std::size_t qubit;
  Mat2 J;   // sx basis, lab frame, rate folded in
  Mat2 JJ;  // J^dagger J
};

Mat2 to_x_basis(const Mat2& z) {
  Mat2 h;
  h << kInvSqrt2, kInvSqrt2, kInvSqrt2, -kInvSqrt2;
  return h * z * h;
}

struct OpenRhs {
  const Model& md;
  const kernels::KernelTable& kt;
  std::vector<double> kappa;
  std::vector<QubitJump> jumps;                // non-diagonal qubit jumps
  std::vector<cplx> u;                         // diagonal of -i H_eff
  // Real weight vectors below are stored doubled, as GatherTerm expects.
  std::vector<std::vector<double>> vre, vim;   // [q][j]: conj(u_j) + sum_diag d(q) conj(d(q_j))
  bool has_vim = false;
  std::vector<std::vector<double>> sq_up;      // [m][j]: sqrt(n_j + 1), 0 on the top level
  std::vector<std::vector<double>> right_lo;   // [m][j]: S_j sqrt(n_j), weight of rho_i[j - s] in rho H
  std::vector<std::vector<double>> right_hi;   // [m][j]: S_j sqrt(n_j + 1), weight of rho_i[j + s]
  std::vector<std::vector<std::size_t>> level; // [factor][i]
  std::vector<cplx> row;
  std::vector<kernels::GatherTerm> terms, jterms;
  using Weights = std::array<std::array<std::array<std::array<cplx, 2>, 2>, 2>, 2>;  // [b][c][b'][c2]
  std::vector<std::size_t> jump_qubits;
  std::size_t reach = 0;  // largest mode stride: how far apart coupled row groups are

  OpenRhs(const Model& m, const kernels::KernelTable& k, const LindbladConfig& lc) : md(m), kt(k) {
    const TensorLayout& L = *md.layout;
    const std::size_t D = md.D;
    level.resize(L.num_factors());
    for (std::size_t f = 0; f < L.num_factors(); ++f) {
      level[f].resize(D);
      for (std::size_t i = 0; i < D; ++i) level[f][i] = L.level(i, f);
    }
    kappa = lc.kappa;
    std::vector<QubitJump> all;
    for (std::size_t n = 0; n < md.N; ++n) {
      const double g1 = lc.gamma[n], gp = lc.gamma_phi[n];
      Mat2 lower, deph;
      if (lc.basis == DissipatorBasis::EnergyEigenbasis) {
        lower << 0, 0, 1, 0;  // |-x><+x|: +x is the upper level of (W/2) sx
        deph << 1, 0, 0, -1;  // sx in its own basis
      } else {
        lower = to_x_basis(qubit_matrix(QubitOp::Lower));
        deph = to_x_basis(qubit_matrix(QubitOp::Z));
      }
      if (g1 > 0.0) all.push_back({n, std::sqrt(g1) * lower, g1 * lower.adjoint() * lower});
      if (gp > 0.0) all.push_back({n, std::sqrt(gp) * deph, gp * deph.adjoint() * deph});
    }
    // Diagonal jumps: J rho J^dagger only rescales entries, by a factor that
    // depends on the two qubit configurations alone.
    std::vector<std::vector<cplx>> W(md.configs, std::vector<cplx>(md.configs, cplx(0.0)));
    for (const auto& j : all) {
      if (j.J(0, 1) != cplx(0.0) || j.J(1, 0) != cplx(0.0)) {
        jumps.push_back(j);
        continue;
      }
      const std::size_t qs = L.stride(j.qubit) / md.block;
      for (std::size_t q = 0; q < md.configs; ++q) {
        const auto bq = static_cast<Eigen::Index>((q / qs) & 1U);
        for (std::size_t p = 0; p < md.configs; ++p) {
          const auto bp = static_cast<Eigen::Index>((p / qs) & 1U);
          W[q][p] += j.J(bq, bq) * std::conj(j.J(bp, bp));
        }
      }
    }
    for (const auto& j : jumps) {
      if (std::find(jump_qubits.begin(), jump_qubits.end(), j.qubit) == jump_qubits.end()) jump_qubits.push_back(j.qubit);
    }
    for (const auto& mi : md.modes) reach = std::max(reach, mi.stride);
    u.assign(D, cplx(0.0));
    for (std::size_t i = 0; i < D; ++i) {
      double damp = 0.0;
      for (std::size_t mm = 0; mm < md.modes.size(); ++mm) {
        damp += kappa[mm] * static_cast<double>(level[L.mode_factor(mm)][i]);
      }
      for (const auto& j : all) {
        const std::size_t b = level[j.qubit][i];
        damp += j.JJ(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(b)).real();
      }
      u[i] = cplx(-0.5 * damp, md.frame == Frame::Lab ? -md.h0[i] : 0.0);
    }
    vre.assign(md.configs, std::vector<double>(2 * D, 0.0));
    vim.assign(md.configs, std::vector<double>(2 * D, 0.0));
    for (std::size_t q = 0; q < md.configs; ++q) {
      for (std::size_t j = 0; j < D; ++j) {
        const cplx v = std::conj(u[j]) + W[q][j / md.block];
        vre[q][2 * j] = vre[q][2 * j + 1] = v.real();
        vim[q][2 * j] = vim[q][2 * j + 1] = v.imag();
        has_vim = has_vim || v.imag() != 0.0;
      }
    }
    const std::size_t M = md.modes.size();
    sq_up.assign(M, std::vector<double>(2 * D, 0.0));
    right_lo.assign(M, std::vector<double>(2 * D, 0.0));
    right_hi.assign(M, std::vector<double>(2 * D, 0.0));
    for (std::size_t mm = 0; mm < M; ++mm) {
      const std::size_t dim = md.modes[mm].dim;
      const auto& lv = level[L.mode_factor(mm)];
      for (std::size_t j = 0; j < D; ++j) {
        const std::size_t n = lv[j];
        const double S = md.S[j / md.block];
        const double up = n + 1 < dim ? md.sqrt_k[n + 1] : 0.0;
        sq_up[mm][2 * j] = sq_up[mm][2 * j + 1] = up;
        right_lo[mm][2 * j] = right_lo[mm][2 * j + 1] = S * md.sqrt_k[n];
        right_hi[mm][2 * j] = right_hi[mm][2 * j + 1] = S * up;
      }
    }
    row.assign(D, cplx(0.0));
  }

  // Interaction-picture rotation of a 2x2 qubit operator: (a,b) picks up e^{i(l_a - l_b)t}.
  Mat2 rotated(const Mat2& M, std::size_t qubit, double t) const {
    if (md.frame == Frame::Lab) return M;
    const double w = md.layout->qubit(qubit).frequency;  // l_+ - l_- = W
    Mat2 r = M;
    r(0, 1) *= std::polar(1.0, w * t);
    r(1, 0) *= std::polar(1.0, -w * t);
    return r;
  }

  enum class Step { First, Middle, Last };

  // Time-dependent coefficients of one right-hand-side evaluation.
  struct Ctx {
    double g = 0.0;
    std::vector<cplx> eu;
    std::vector<Weights> jw;  // merged qubit-jump weights, [qubit][b][c][b'][c2]
  };

  Ctx context(double t) const {
    Ctx cx;
    cx.g = md.pulse(t);
    cx.eu.resize(md.modes.size());
    for (std::size_t m = 0; m < md.modes.size(); ++m) cx.eu[m] = mode_phase(md, m, t);
    cx.jw.assign(jump_qubits.size(), Weights{});
    for (const auto& jp : jumps) {
      const Mat2 J = rotated(jp.J, jp.qubit, t);
      const Mat2 JJ = rotated(jp.JJ, jp.qubit, t);
      const std::size_t h = static_cast<std::size_t>(
          std::find(jump_qubits.begin(), jump_qubits.end(), jp.qubit) - jump_qubits.begin());
      for (Eigen::Index b = 0; b < 2; ++b) {
        for (Eigen::Index c = 0; c < 2; ++c) {
          for (Eigen::Index bp = 0; bp < 2; ++bp) {
            for (Eigen::Index c2 = 0; c2 < 2; ++c2) {
              // J rho J^dagger, then the off-diagonal parts of -(1/2){J^dagger J, rho}
              cplx w = J(b, bp) * std::conj(J(c, c2));
              if (bp != b && c2 == c) w -= 0.5 * JJ(b, bp);
              if (bp == b && c2 != c) w -= 0.5 * JJ(c2, c);
              cx.jw[h][b][c][bp][c2] += w;
            }
          }
        }
      }
    }
    return cx;
  }

  // One RK4 stage on the rows q * block + r, for every qubit configuration q:
  // k_i = (d rho / dt)_i, then acc_i += b k_i (acc_i = base_i + b k_i on the
  // first stage) and, unless last, next_i = base_i + a k_i.
  // These rows read rho only on the rows q * block + r' with |r - r'| <= reach.
  void group(const Ctx& cx, std::size_t r, const cplx* rho, cplx* acc, cplx* next, const cplx* base, cplx b,
             cplx a, Step st) {
    const std::size_t D = md.D;
    const TensorLayout& L = *md.layout;
    const double g = cx.g;
    cplx* xi = row.data();
    for (std::size_t q = 0; q < md.configs; ++q) {
      const std::size_t i = q * md.block + r;
      const cplx* ri = rho + i * D;
      std::fill(xi, xi + D, cplx(0.0));
      terms.clear();
      terms.push_back({ri, nullptr, u[i]});
      terms.push_back({ri, vre[q].data(), 1.0});
      if (has_vim) terms.push_back({ri, vim[q].data(), cplx(0.0, 1.0)});
      const double Sq = md.S[q];
      for (std::size_t m = 0; m < md.modes.size(); ++m) {
        const std::size_t n = level[L.mode_factor(m)][i];
        const std::size_t s = md.modes[m].stride;
        const cplx eu = cx.eu[m];
        // -i H rho
        if (g != 0.0 && Sq != 0.0) {
          const cplx c = cplx(0.0, -g * Sq);
          if (n > 0) terms.push_back({rho + (i - s) * D, nullptr, c * eu * md.sqrt_k[n]});
          if (n + 1 < md.modes[m].dim) terms.push_back({rho + (i + s) * D, nullptr, c * std::conj(eu) * md.sqrt_k[n + 1]});
        }
        // +i rho H, with H_{j-s,j} = g S_j conj(eu) sqrt(n_j) and H_{j+s,j} = g S_j eu sqrt(n_j + 1).
        // The weights vanish wherever the shifted read leaves the row.
        if (g != 0.0) {
          terms.push_back({ri - s, right_lo[m].data(), cplx(0.0, g) * std::conj(eu)});
          terms.push_back({ri + s, right_hi[m].data(), cplx(0.0, g) * eu});
        }
        // kappa a rho a^dagger
        if (kappa[m] != 0.0 && n + 1 < md.modes[m].dim) {
          terms.push_back({rho + (i + s) * D + s, sq_up[m].data(), kappa[m] * md.sqrt_k[n + 1]});
        }
      }
      kt.gather_acc(xi, terms.data(), terms.size(), D);
      // Qubit jumps, all of one qubit merged: output chunk c of row i gathers
      // chunk c2 of rows i(b'), weighted by jw[b][c][b'][c2].
      for (std::size_t h = 0; h < jump_qubits.size(); ++h) {
        const std::size_t qn = jump_qubits[h];
        const std::size_t bi = level[qn][i];
        const std::size_t s = L.stride(qn);
        const cplx* src[2];
        src[bi] = ri;
        src[1 - bi] = bi ? ri - s * D : ri + s * D;
        for (std::size_t c = 0; c < 2; ++c) {
          const auto& w = cx.jw[h][bi][c];
          for (std::size_t blk = 0; blk < D; blk += 2 * s) {
            jterms.clear();
            for (std::size_t bp = 0; bp < 2; ++bp) {
              for (std::size_t c2 = 0; c2 < 2; ++c2) {
                if (w[bp][c2] != cplx(0.0)) jterms.push_back({src[bp] + blk + c2 * s, nullptr, w[bp][c2]});
              }
            }
            if (!jterms.empty()) kt.gather_acc(xi + blk + c * s, jterms.data(), jterms.size(), s);
          }
        }
      }
      const std::size_t off = i * D;
      if (st == Step::First) kt.rk_start(acc + off, next + off, base + off, xi, b, a, D);
      else if (st == Step::Last) kt.axpy(acc + off, b, xi, D);
      else kt.rk_stage(acc + off, next + off, base + off, xi, b, a, D);
    }
  }

  // One RK4 step y -> out. The four stages are pipelined over the row groups,
  // each trailing the previous one by `reach` groups, so every buffer is
  // touched inside a narrow moving window. Stage inputs need D readable
  // entries on both sides.
  void step(double t, double dt, const cplx* y, cplx* out, cplx* y2, cplx* y3, cplx* y4) {
    const Ctx c1 = context(t), c2 = context(t + 0.5 * dt), c4 = context(t + dt);
    const cplx h2(dt / 2.0), h3(dt / 3.0), h6(dt / 6.0), h1(dt);
    const std::size_t B = md.block;
    for (std::size_t r = 0; r < B + 3 * reach; ++r) {
      if (r < B) group(c1, r, y, out, y2, y, h6, h2, Step::First);
      if (r >= reach && r - reach < B) group(c2, r - reach, y2, out, y3, y, h3, h2, Step::Middle);
      if (r >= 2 * reach && r - 2 * reach < B) group(c2, r - 2 * reach, y3, out, y4, y, h3, h1, Step::Middle);
      if (r >= 3 * reach && r - 3 * reach < B) group(c4, r - 3 * reach, y4, out, nullptr, nullptr, h6, 0.0, Step::Last);
    }
  }
};


void record_density(const Model& md, const EvolutionConfig& cfg, TrajectoryRecord& rec, const cvec& rho_in, double t) {
  const std::size_t D = md.D;
  const TensorLayout& L = *md.layout;
  cvec rho = rho_in;
  if (md.frame == Frame::Lab) {
    for (std::size_t i = 0; i < D; ++i) {
      for (std::size_t j = 0; j < D; ++j) rho[i * D + j] *= std::polar(1.0, (md.h0[i] - md.h0[j]) * t);
    }
  }
  double tr = 0.0;
  for (std::size_t i = 0; i < D; ++i) tr += rho[i * D + i].real();
  rec.times.push_back(t);
  rec.norms.push_back(tr);
  std::vector<cplx> mean(md.modes.size(), cplx(0.0)), branch(md.modes.size(), cplx(0.0));
  double w0 = 0.0;
  for (std::size_t i = 0; i < md.block; ++i) w0 += rho[i * D + i].real();
  for (std::size_t m = 0; m < md.modes.size(); ++m) {
    const std::size_t f = L.mode_factor(m), s = md.modes[m].stride;
    for (std::size_t i = 0; i < D; ++i) {
      const std::size_t n = L.level(i, f);
      if (n + 1 >= md.modes[m].dim) continue;
      const cplx v = md.sqrt_k[n + 1] * rho[(i + s) * D + i];
      mean[m] += v;
      if (i < md.block) branch[m] += v;
    }
    branch[m] = w0 > 0.0 ? branch[m] / w0 : cplx(0.0);
  }
  rec.mode_mean.push_back(std::move(mean));
  rec.branch_mean.push_back(std::move(branch));
  if (cfg.record_populations && md.N > 0) {
    // Reduced qubit matrix in the sx basis, then to (g, e).
    const std::size_t C = md.configs;
    cvec R(C * C, cplx(0.0));
    for (std::size_t q = 0; q < C; ++q) {
      for (std::size_t p = 0; p < C; ++p) {
        cplx a(0.0);
        for (std::size_t r = 0; r < md.block; ++r) a += rho[(q * md.block + r) * D + p * md.block + r];
        R[q * C + p] = a;
      }
    }
    std::vector<std::size_t> qf(L.num_qubits());
    for (std::size_t n = 0; n < qf.size(); ++n) qf[n] = n;
    const auto ql = L.subset(qf);
    for (std::size_t q = 0; q < C; ++q) hadamard_wide(*ql, R.data() + q * C, 1);
    hadamard_wide(*ql, R.data(), C);
    std::vector<double> pops(C);
    for (std::size_t q = 0; q < C; ++q) pops[q] = R[q * C + q].real();
    rec.qubit_populations.push_back(std::move(pops));
  }
}

DensityMatrix density_to_z(const Model& md, cvec rho, double t) {
  const std::size_t D = md.D;
  if (md.frame == Frame::Lab) {
    for (std::size_t i = 0; i < D; ++i) {
      for (std::size_t j = 0; j < D; ++j) rho[i * D + j] *= std::polar(1.0, (md.h0[i] - md.h0[j]) * t);
    }
  }
  for (std::size_t i = 0; i < D; ++i) hadamard_wide(*md.layout, rho.data() + i * D, 1);
  hadamard_wide(*md.layout, rho.data(), D);
  DenseMatrix m = Eigen::Map<const DenseMatrix>(rho.data(), static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(D));
  m = 0.5 * (m + m.adjoint()).eval();
  const double tr = m.trace().real();
  if (std::abs(tr - 1.0) > 1e-8 && std::abs(tr - 1.0) <= 1e-6) m /= tr;  // drift already within tolerance
  return DensityMatrix(md.layout, std::move(m));
}

}  // namespace

LindbladConfig uniform_rates(const TensorLayout& layout, double kappa, double t1, double t2, DissipatorBasis basis) {
  LindbladConfig lc;
  lc.kappa.assign(layout.num_modes(), kappa);
  lc.gamma.assign(layout.num_qubits(), t1 > 0.0 ? 1.0 / t1 : 0.0);
  lc.gamma_phi.assign(layout.num_qubits(), t2 > 0.0 ? 1.0 / t2 : 0.0);
  lc.basis = basis;
  return lc;
}

TrajectoryRecord lindblad_evolve(const LayoutPtr& layout, const CouplingProfile& pulse, const DensityMatrix& initial,
                                 const EvolutionConfig& cfg, const LindbladConfig& lc) {
  if (!(initial.layout() == *layout)) throw std::invalid_argument("initial density layout does not match");
  if (layout->dimension() > lc.dimension_cap) {
    throw ConfigError("density-matrix evolution limited to dimension " + std::to_string(lc.dimension_cap) +
                      " (dimension_cap); layout has " + std::to_string(layout->dimension()));
  }
  if (lc.kappa.size() != layout->num_modes() || lc.gamma.size() != layout->num_qubits() ||
      lc.gamma_phi.size() != layout->num_qubits()) {
    throw std::invalid_argument("rate lists do not match the layout");
  }
  double rate_sum = 0.0;
  for (const auto* v : {&lc.kappa, &lc.gamma, &lc.gamma_phi}) {
    for (double r : *v) {
      if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("dissipation rates must be non-negative");
    }
  }
  const Model md = build_model(layout, pulse, cfg.frame);
  for (std::size_t m = 0; m < md.modes.size(); ++m) rate_sum += lc.kappa[m] * static_cast<double>(md.modes[m].dim);
  for (std::size_t n = 0; n < md.N; ++n) rate_sum += 2.0 * (lc.gamma[n] + 2.0 * lc.gamma_phi[n]);
  const kernels::KernelTable& kt = table_for(cfg);
  const double t_f = resolve_t_f(pulse, cfg);
  const std::size_t steps = steps_for(md, cfg, t_f, rate_sum);
  const double dt = t_f / static_cast<double>(steps);
  const std::size_t D = md.D;
  const std::size_t DD = D * D;

  // Row-shifted reads run up to D entries past either end of the matrix,
  // always with a zero coefficient; the zero padding keeps them finite.
  struct Padded {
    cvec buf;
    cplx* p;
    explicit Padded(std::size_t D) : buf(D * D + 2 * D, cplx(0.0)), p(buf.data() + D) {}
    cvec copy(std::size_t n) const { return cvec(p, p + n); }
  };
  Padded y(D), y2(D), y3(D), y4(D), out(D);
  Eigen::Map<DenseMatrix>(y.p, static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(D)) = initial.entries();
  for (std::size_t i = 0; i < D; ++i) hadamard_wide(*layout, y.p + i * D, 1);
  hadamard_wide(*layout, y.p, D);

  OpenRhs f(md, kt, lc);

  TrajectoryRecord rec;
  rec.steps = steps;
  rec.dt = dt;
  rec.kernel_name = kt.name;
  record_density(md, cfg, rec, y.copy(DD), 0.0);

  for (std::size_t s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * dt;
    f.step(t, dt, y.p, out.p, y2.p, y3.p, y4.p);
    std::swap(y, out);

    const std::size_t done = s + 1;
    if (done % 16 == 0 || done == steps) {
      double tr = 0.0;
      for (std::size_t i = 0; i < D; ++i) tr += y.p[i * D + i].real();
      rec.max_drift = std::max(rec.max_drift, std::abs(tr - 1.0));
      if (std::abs(tr - 1.0) > cfg.drift_tolerance) {
        throw NumericalError("density trace drifted by " + std::to_string(tr - 1.0) + " at t = " +
                             std::to_string(t + dt) + " s; use a smaller dt");
      }
    }
    if (should_record(cfg, done, steps)) record_density(md, cfg, rec, y.copy(DD), static_cast<double>(done) * dt);
  }

  DensityMatrix final_rho = density_to_z(md, y.copy(DD), t_f);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(final_rho.entries(), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin < -1e-6) {
    throw NumericalError("density matrix developed eigenvalue " + std::to_string(lmin) + "; use a smaller dt");
  }
  rec.final_density.emplace(std::move(final_rho));
  return rec;
}

}  // namespace stagen
