#include "stagen/targets.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace stagen {

TargetKind parse_target_kind(const std::string& name) {
  if (name == "photonic_ghz") return TargetKind::PhotonicGhz;
  if (name == "rotated_photonic_ghz") return TargetKind::RotatedPhotonicGhz;
  if (name == "qubit_ghz") return TargetKind::QubitGhz;
  throw std::invalid_argument("unknown target kind '" + name + "'");
}

std::string to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::PhotonicGhz: return "photonic_ghz";
    case TargetKind::RotatedPhotonicGhz: return "rotated_photonic_ghz";
    case TargetKind::QubitGhz: return "qubit_ghz";
  }
  return "unknown";
}

namespace {

void require_photonic(const TensorLayout& L) {
  if (L.num_qubits() != 1 || L.num_modes() < 1) {
    throw std::invalid_argument("photonic targets need exactly one qubit and at least one mode");
  }
}

// sum_b q_b (x) coherent(s_b alpha)^M over the given branches
cvec branch_sum(const LayoutPtr& layout, const std::vector<std::pair<cvec, cvec>>& branches) {
  const TensorLayout& L = *layout;
  cvec out(L.dimension(), cplx(0.0));
  for (const auto& [qubit, mode_state] : branches) {
    std::vector<cvec> factors{qubit};
    for (std::size_t m = 0; m < L.num_modes(); ++m) factors.push_back(mode_state);
    cvec prod{cplx(1.0)};
    for (const auto& v : factors) {
      cvec next(prod.size() * v.size());
      for (std::size_t i = 0; i < prod.size(); ++i) {
        for (std::size_t j = 0; j < v.size(); ++j) next[i * v.size() + j] = prod[i] * v[j];
      }
      prod.swap(next);
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += prod[i];
  }
  return out;
}

std::size_t common_mode_dim(const TensorLayout& L) {
  const std::size_t d = L.mode(0).dim;
  for (std::size_t m = 1; m < L.num_modes(); ++m) {
    if (L.mode(m).dim != d) throw std::invalid_argument("photonic targets assume equal mode truncations");
  }
  return d;
}

const double kS = 1.0 / std::sqrt(2.0);

}  // namespace

StateVector photonic_ghz_target(const LayoutPtr& layout, cplx alpha, double max_deficit) {
  require_photonic(*layout);
  const std::size_t d = common_mode_dim(*layout);
  const cvec plus{kS, kS}, minus{kS, -kS};
  const cvec a = coherent_state(d, alpha, max_deficit).amplitudes;
  const cvec b = coherent_state(d, -alpha, max_deficit).amplitudes;
  return StateVector(layout, branch_sum(layout, {{plus, a}, {minus, b}}));
}

StateVector rotated_photonic_ghz(const LayoutPtr& layout, cplx alpha, double max_deficit) {
  return apply_qubit_gate(photonic_ghz_target(layout, alpha, max_deficit), 0, qubit_rotation(QubitOp::Y, kPi / 2.0));
}

StateVector rotated_photonic_ghz_from_cats(const LayoutPtr& layout, cplx alpha, double max_deficit) {
  require_photonic(*layout);
  const std::size_t d = common_mode_dim(*layout);
  const cvec plus{kS, kS}, minus{kS, -kS};
  const cvec a = coherent_state(d, alpha, max_deficit).amplitudes;
  const cvec b = coherent_state(d, -alpha, max_deficit).amplitudes;
  // |+x>(A - B) + |-x>(A + B) with A = |a>^M, B = |-a>^M
  const cvec neg_plus{-kS, -kS};
  return StateVector(layout, branch_sum(layout, {{plus, a}, {neg_plus, b}, {minus, a}, {minus, b}}));
}

double ghz_phase(std::size_t N) { return kPi * static_cast<double>(N + 1) / 2.0; }

LayoutPtr qubit_register(std::size_t N) {
  return make_layout(std::vector<QubitSpec>(N, QubitSpec{kTwoPi}), {});
}

StateVector qubit_ghz_target(const LayoutPtr& qubit_layout, bool relabeled) {
  const TensorLayout& L = *qubit_layout;
  if (L.num_modes() != 0) throw std::invalid_argument("GHZ target lives on a qubit-only layout");
  const std::size_t N = L.num_qubits();
  if (N < 2) throw std::invalid_argument("GHZ target needs N >= 2");
  cvec a(L.dimension(), cplx(0.0));
  const double phi = relabeled ? -ghz_phase(N) : ghz_phase(N);
  a.front() = kS;
  a.back() = kS * std::polar(1.0, phi);
  return StateVector(qubit_layout, std::move(a));
}

StateVector qubit_ghz_target(std::size_t N, bool relabeled) { return qubit_ghz_target(qubit_register(N), relabeled); }

StateVector make_target(const LayoutPtr& layout, const TargetSpec& spec) {
  switch (spec.kind) {
    case TargetKind::PhotonicGhz: return photonic_ghz_target(layout, spec.alpha);
    case TargetKind::RotatedPhotonicGhz: return rotated_photonic_ghz(layout, spec.alpha);
    case TargetKind::QubitGhz: return qubit_ghz_target(layout, spec.relabeled);
  }
  throw std::invalid_argument("unknown target kind");
}

Eigen::MatrixXcd sm_gate_unitary(std::size_t N, double theta) {
  if (N < 2) throw std::invalid_argument("the gate needs N >= 2");
  if (N > 14) throw std::invalid_argument("dense gate limited to N <= 14");
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << N);
  // Diagonal in the sx eigenbasis: factor cos + i sin s_n s_n' per pair.
  Eigen::VectorXcd diag(dim);
  for (Eigen::Index q = 0; q < dim; ++q) {
    cplx v(1.0);
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t k = n + 1; k < N; ++k) {
        const int sn = ((q >> (N - 1 - n)) & 1) ? -1 : 1;
        const int sk = ((q >> (N - 1 - k)) & 1) ? -1 : 1;
        v *= cplx(std::cos(theta), std::sin(theta) * sn * sk);
      }
    }
    diag(q) = v;
  }
  // Hadamard^(x)N has entries (+-1)/2^{N/2} with sign (-1)^{popcount(a & b)}.
  Eigen::MatrixXd H(dim, dim);
  const double norm = std::pow(2.0, -0.5 * static_cast<double>(N));
  for (Eigen::Index a = 0; a < dim; ++a) {
    for (Eigen::Index b = 0; b < dim; ++b) H(a, b) = (__builtin_popcountll(static_cast<unsigned long long>(a & b)) & 1) ? -norm : norm;
  }
  return H.cast<cplx>() * diag.asDiagonal() * H.cast<cplx>();
}

Eigen::Matrix2cd qubit_rotation(QubitOp axis, double angle) {
  if (axis != QubitOp::X && axis != QubitOp::Y && axis != QubitOp::Z) {
    throw std::invalid_argument("rotation axis must be X, Y or Z");
  }
  return std::cos(angle / 2.0) * Eigen::Matrix2cd::Identity() - kI * std::sin(angle / 2.0) * qubit_matrix(axis);
}

StateVector apply_qubit_gate(const StateVector& psi, std::size_t n, const Eigen::Matrix2cd& gate) {
  const LocalOperator op(psi.layout_ptr(), psi.layout().qubit_factor(n), gate);
  return StateVector(psi.layout_ptr(), op.apply(psi.amplitudes()));
}

}  // namespace stagen
