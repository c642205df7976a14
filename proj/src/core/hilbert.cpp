#include "stagen/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "stagen/kernels.hpp"

namespace stagen {

TensorLayout::TensorLayout(std::vector<QubitSpec> qubits, std::vector<ModeSpec> modes,
                           std::size_t dimension_cap)
    : qubits_(std::move(qubits)), modes_(std::move(modes)) {
  if (qubits_.empty() && modes_.empty()) {
    throw std::invalid_argument("layout needs at least one factor");
  }
  for (const auto& q : qubits_) {
    if (!(q.frequency > 0.0)) throw std::invalid_argument("qubit frequency must be positive");
  }
  for (const auto& m : modes_) {
    if (!(m.frequency > 0.0)) throw std::invalid_argument("mode frequency must be positive");
    if (m.dim < 2) throw std::invalid_argument("mode truncation must keep at least 2 levels");
  }
  dims_.reserve(qubits_.size() + modes_.size());
  for (std::size_t n = 0; n < qubits_.size(); ++n) dims_.push_back(2);
  for (const auto& m : modes_) dims_.push_back(m.dim);

  // Product with overflow and cap checks.
  std::size_t total = 1;
  for (std::size_t d : dims_) {
    if (total > dimension_cap / d) {
      throw std::length_error("layout dimension exceeds the cap of " + std::to_string(dimension_cap));
    }
    total *= d;
  }
  dimension_ = total;

  strides_.assign(dims_.size(), 1);
  for (std::size_t f = dims_.size(); f-- > 1;) strides_[f - 1] = strides_[f] * dims_[f];
}

const QubitSpec& TensorLayout::qubit(std::size_t n) const {
  if (n >= qubits_.size()) throw std::out_of_range("qubit index out of range");
  return qubits_[n];
}

const ModeSpec& TensorLayout::mode(std::size_t m) const {
  if (m >= modes_.size()) throw std::out_of_range("mode index out of range");
  return modes_[m];
}

std::size_t TensorLayout::qubit_factor(std::size_t n) const {
  if (n >= qubits_.size()) throw std::out_of_range("qubit index out of range");
  return n;
}

std::size_t TensorLayout::mode_factor(std::size_t m) const {
  if (m >= modes_.size()) throw std::out_of_range("mode index out of range");
  return qubits_.size() + m;
}

std::size_t TensorLayout::flatten(std::span<const std::size_t> levels) const {
  if (levels.size() != dims_.size()) throw std::invalid_argument("level count does not match factor count");
  std::size_t idx = 0;
  for (std::size_t f = 0; f < dims_.size(); ++f) {
    if (levels[f] >= dims_[f]) throw std::out_of_range("level out of range for factor");
    idx += levels[f] * strides_[f];
  }
  return idx;
}

std::vector<std::size_t> TensorLayout::unflatten(std::size_t index) const {
  if (index >= dimension_) throw std::out_of_range("flat index out of range");
  std::vector<std::size_t> out(dims_.size());
  for (std::size_t f = 0; f < dims_.size(); ++f) out[f] = level(index, f);
  return out;
}

std::shared_ptr<const TensorLayout> TensorLayout::subset(std::span<const std::size_t> factors) const {
  if (factors.empty()) throw std::invalid_argument("factor subset is empty");
  std::vector<std::size_t> sorted(factors.begin(), factors.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("factor subset has duplicates");
  }
  std::vector<QubitSpec> q;
  std::vector<ModeSpec> m;
  for (std::size_t f : sorted) {
    if (f >= dims_.size()) throw std::out_of_range("factor index out of range");
    if (f < qubits_.size()) q.push_back(qubits_[f]);
    else m.push_back(modes_[f - qubits_.size()]);
  }
  return std::make_shared<const TensorLayout>(std::move(q), std::move(m), dimension_);
}

bool TensorLayout::operator==(const TensorLayout& other) const {
  if (qubits_.size() != other.qubits_.size() || modes_.size() != other.modes_.size()) return false;
  for (std::size_t n = 0; n < qubits_.size(); ++n) {
    if (qubits_[n].frequency != other.qubits_[n].frequency) return false;
  }
  for (std::size_t m = 0; m < modes_.size(); ++m) {
    if (modes_[m].frequency != other.modes_[m].frequency || modes_[m].dim != other.modes_[m].dim) return false;
  }
  return true;
}

LayoutPtr make_layout(std::vector<QubitSpec> qubits, std::vector<ModeSpec> modes,
                      std::size_t dimension_cap) {
  return std::make_shared<const TensorLayout>(std::move(qubits), std::move(modes), dimension_cap);
}

// ---------------------------------------------------------------------------

StateVector::StateVector(LayoutPtr layout, cvec amplitudes)
    : layout_(std::move(layout)), amps_(std::move(amplitudes)) {
  if (!layout_) throw std::invalid_argument("state needs a layout");
  if (amps_.size() != layout_->dimension()) {
    throw std::invalid_argument("amplitude count does not match layout dimension");
  }
  const double n = std::sqrt(kernels::norm2(amps_));
  if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("state has zero or non-finite norm");
  if (n != 1.0) kernels::scale(amps_, cplx(1.0 / n, 0.0));
}

StateVector StateVector::basis(LayoutPtr layout, std::size_t index) {
  if (!layout) throw std::invalid_argument("state needs a layout");
  if (index >= layout->dimension()) throw std::out_of_range("basis index out of range");
  cvec a(layout->dimension(), cplx(0.0));
  a[index] = 1.0;
  return StateVector(std::move(layout), std::move(a));
}

double StateVector::norm() const { return std::sqrt(kernels::norm2(amps_)); }

DensityMatrix::DensityMatrix(LayoutPtr layout, DenseMatrix entries, Check check)
    : layout_(std::move(layout)), rho_(std::move(entries)) {
  if (!layout_) throw std::invalid_argument("density matrix needs a layout");
  const auto d = static_cast<Eigen::Index>(layout_->dimension());
  if (rho_.rows() != d || rho_.cols() != d) {
    throw std::invalid_argument("density matrix shape does not match layout dimension");
  }
  const double herm = (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-10) throw NumericalError("density matrix is not Hermitian (deviation " + std::to_string(herm) + ")");
  const cplx tr = rho_.trace();
  if (std::abs(tr - 1.0) > 1e-8) throw NumericalError("density matrix trace deviates from 1");
  if (check == Check::Spectrum) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-8) throw NumericalError("density matrix has a negative eigenvalue");
  }
}

DensityMatrix DensityMatrix::from_pure(const StateVector& psi) {
  const auto d = static_cast<Eigen::Index>(psi.size());
  Eigen::Map<const Eigen::VectorXcd> v(psi.amplitudes().data(), d);
  DenseMatrix rho = v * v.adjoint();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix(psi.layout_ptr(), std::move(rho));
}

// ---------------------------------------------------------------------------

Eigen::Matrix2cd qubit_matrix(QubitOp which) {
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
  switch (which) {
    case QubitOp::X: m(0, 1) = 1.0; m(1, 0) = 1.0; break;
    case QubitOp::Y: m(0, 1) = kI; m(1, 0) = -kI; break;   // (g, e) order
    case QubitOp::Z: m(0, 0) = -1.0; m(1, 1) = 1.0; break;
    case QubitOp::Raise: m(1, 0) = 1.0; break;             // |e><g|
    case QubitOp::Lower: m(0, 1) = 1.0; break;             // |g><e|
  }
  return m;
}

Eigen::MatrixXcd mode_matrix(ModeOp which, std::size_t dim) {
  if (dim < 2) throw std::invalid_argument("mode dimension must be at least 2");
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
  for (Eigen::Index k = 1; k < d; ++k) {
    const double s = std::sqrt(static_cast<double>(k));
    if (which == ModeOp::Annihilate) m(k - 1, k) = s;
    else if (which == ModeOp::Create) m(k, k - 1) = s;
  }
  if (which == ModeOp::Number) {
    for (Eigen::Index k = 0; k < d; ++k) m(k, k) = static_cast<double>(k);
  }
  return m;
}

LocalOperator::LocalOperator(LayoutPtr layout, std::size_t factor, Eigen::MatrixXcd local)
    : layout_(std::move(layout)), factor_(factor), local_(std::move(local)) {
  if (!layout_) throw std::invalid_argument("operator needs a layout");
  if (factor_ >= layout_->num_factors()) throw std::out_of_range("factor index out of range");
  const auto d = static_cast<Eigen::Index>(layout_->factor_dim(factor_));
  if (local_.rows() != d || local_.cols() != d) throw std::invalid_argument("local matrix has wrong size");
}

cvec LocalOperator::apply(std::span<const cplx> in) const {
  const std::size_t D = layout_->dimension();
  if (in.size() != D) throw std::invalid_argument("vector size does not match layout");
  const std::size_t d = layout_->factor_dim(factor_);
  const std::size_t inner = layout_->stride(factor_);
  const std::size_t block = d * inner;
  cvec out(D, cplx(0.0));
  for (std::size_t base = 0; base < D; base += block) {
    for (std::size_t a = 0; a < d; ++a) {
      std::span<cplx> dst(out.data() + base + a * inner, inner);
      for (std::size_t b = 0; b < d; ++b) {
        const cplx m = local_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        if (m == cplx(0.0)) continue;
        kernels::axpy(dst, m, std::span<const cplx>(in.data() + base + b * inner, inner));
      }
    }
  }
  return out;
}

Eigen::SparseMatrix<cplx> LocalOperator::sparse() const {
  const std::size_t D = layout_->dimension();
  const std::size_t d = layout_->factor_dim(factor_);
  const std::size_t inner = layout_->stride(factor_);
  const std::size_t block = d * inner;
  std::vector<Eigen::Triplet<cplx>> trips;
  for (std::size_t base = 0; base < D; base += block) {
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) {
        const cplx m = local_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        if (m == cplx(0.0)) continue;
        for (std::size_t r = 0; r < inner; ++r) {
          trips.emplace_back(static_cast<int>(base + a * inner + r), static_cast<int>(base + b * inner + r), m);
        }
      }
    }
  }
  Eigen::SparseMatrix<cplx> s(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(D));
  s.setFromTriplets(trips.begin(), trips.end());
  return s;
}

Eigen::MatrixXcd LocalOperator::dense() const {
  if (layout_->dimension() > kDenseLimit) {
    throw std::length_error("dense materialization limited to dimension " + std::to_string(kDenseLimit));
  }
  return Eigen::MatrixXcd(sparse());
}

LocalOperator embed_qubit_op(const LayoutPtr& layout, std::size_t n, QubitOp which) {
  return LocalOperator(layout, layout->qubit_factor(n), qubit_matrix(which));
}

LocalOperator embed_mode_op(const LayoutPtr& layout, std::size_t m, ModeOp which) {
  const std::size_t f = layout->mode_factor(m);
  return LocalOperator(layout, f, mode_matrix(which, layout->factor_dim(f)));
}

// ---------------------------------------------------------------------------

CoherentAmplitudes coherent_state(std::size_t dim, cplx alpha, double max_deficit) {
  if (dim < 2) throw std::invalid_argument("coherent state needs dim >= 2");
  cvec c(dim);
  const double a2 = std::norm(alpha);
  c[0] = std::exp(-0.5 * a2);
  for (std::size_t k = 1; k < dim; ++k) c[k] = c[k - 1] * alpha / std::sqrt(static_cast<double>(k));
  const double kept = kernels::norm2(c);
  const double deficit = std::max(0.0, 1.0 - kept);
  if (deficit > max_deficit) {
    throw NumericalError("coherent state |alpha|=" + std::to_string(std::abs(alpha)) +
                         " loses norm " + std::to_string(deficit) + " at dim " + std::to_string(dim) +
                         "; increase the truncation");
  }
  kernels::scale(c, cplx(1.0 / std::sqrt(kept), 0.0));
  return {std::move(c), deficit};
}

StateVector tensor_state(const LayoutPtr& layout, std::span<const cvec> factors) {
  if (factors.size() != layout->num_factors()) throw std::invalid_argument("factor count does not match layout");
  for (std::size_t f = 0; f < factors.size(); ++f) {
    if (factors[f].size() != layout->factor_dim(f)) throw std::invalid_argument("factor vector has wrong dimension");
  }
  cvec amps{cplx(1.0)};
  for (const auto& v : factors) {
    cvec next(amps.size() * v.size());
    for (std::size_t i = 0; i < amps.size(); ++i) {
      for (std::size_t j = 0; j < v.size(); ++j) next[i * v.size() + j] = amps[i] * v[j];
    }
    amps.swap(next);
  }
  return StateVector(layout, std::move(amps));
}

namespace {

struct TraceIndex {
  LayoutPtr reduced;
  std::vector<std::size_t> keep_of;  // flat -> reduced index
  std::vector<std::size_t> rest_of;  // flat -> traced-out index
  std::size_t keep_dim = 1;
  std::size_t rest_dim = 1;
};

TraceIndex build_trace_index(const TensorLayout& layout, std::span<const std::size_t> keep) {
  if (keep.empty()) throw std::invalid_argument("partial trace needs a non-empty keep set");
  TraceIndex ti;
  ti.reduced = layout.subset(keep);
  std::vector<bool> kept(layout.num_factors(), false);
  for (std::size_t f : keep) kept[f] = true;
  for (std::size_t f = 0; f < layout.num_factors(); ++f) {
    (kept[f] ? ti.keep_dim : ti.rest_dim) *= layout.factor_dim(f);
  }
  const std::size_t D = layout.dimension();
  ti.keep_of.resize(D);
  ti.rest_of.resize(D);
  for (std::size_t i = 0; i < D; ++i) {
    std::size_t k = 0, r = 0;
    for (std::size_t f = 0; f < layout.num_factors(); ++f) {
      const std::size_t lv = layout.level(i, f);
      if (kept[f]) k = k * layout.factor_dim(f) + lv;
      else r = r * layout.factor_dim(f) + lv;
    }
    ti.keep_of[i] = k;
    ti.rest_of[i] = r;
  }
  return ti;
}

}  // namespace

DensityMatrix partial_trace(const StateVector& psi, std::span<const std::size_t> keep) {
  const TraceIndex ti = build_trace_index(psi.layout(), keep);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(ti.keep_dim),
                                              static_cast<Eigen::Index>(ti.rest_dim));
  for (std::size_t i = 0; i < psi.size(); ++i) {
    m(static_cast<Eigen::Index>(ti.keep_of[i]), static_cast<Eigen::Index>(ti.rest_of[i])) = psi[i];
  }
  DenseMatrix rho = m * m.adjoint();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  // Remove the last rounding of the trace so validation sees exactly what the
  // input norm implies.
  rho /= rho.trace().real();
  return DensityMatrix(ti.reduced, std::move(rho));
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> keep) {
  const TraceIndex ti = build_trace_index(rho.layout(), keep);
  const std::size_t D = rho.dimension();
  // Group flat indices by traced-out index so each block is a keep_dim square.
  std::vector<std::vector<std::size_t>> by_rest(ti.rest_dim, std::vector<std::size_t>(ti.keep_dim));
  for (std::size_t i = 0; i < D; ++i) by_rest[ti.rest_of[i]][ti.keep_of[i]] = i;
  const auto kd = static_cast<Eigen::Index>(ti.keep_dim);
  DenseMatrix out = DenseMatrix::Zero(kd, kd);
  const auto& e = rho.entries();
  for (const auto& idx : by_rest) {
    for (Eigen::Index a = 0; a < kd; ++a) {
      for (Eigen::Index b = 0; b < kd; ++b) {
        out(a, b) += e(static_cast<Eigen::Index>(idx[a]), static_cast<Eigen::Index>(idx[b]));
      }
    }
  }
  out = 0.5 * (out + out.adjoint()).eval();
  return DensityMatrix(ti.reduced, std::move(out));
}

// ---------------------------------------------------------------------------

double coherent_tail(double amplitude, std::size_t dim) {
  const double lam = amplitude * amplitude;
  if (lam == 0.0) return dim == 0 ? 1.0 : 0.0;
  // Sum the tail directly from its first term; this keeps tiny tails accurate
  // where 1 - (head sum) would cancel.
  double log_term = -lam + static_cast<double>(dim) * std::log(lam) - std::lgamma(static_cast<double>(dim) + 1.0);
  double term = std::exp(log_term);
  double sum = 0.0;
  for (std::size_t n = dim; n < dim + 100000; ++n) {
    sum += term;
    term *= lam / static_cast<double>(n + 1);
    if (n + 1 > lam && term <= 1e-18 * sum) break;
  }
  return std::min(1.0, sum);
}

std::size_t truncation_for_amplitude(double peak_amplitude, const TruncationPolicy& policy) {
  if (!(peak_amplitude >= 0.0) || !std::isfinite(peak_amplitude)) {
    throw std::invalid_argument("peak amplitude must be finite and non-negative");
  }
  std::size_t d = std::max<std::size_t>(policy.min_dim, 2);
  while (coherent_tail(peak_amplitude, d) >= policy.leak_tolerance) ++d;
  return d;
}

}  // namespace stagen
