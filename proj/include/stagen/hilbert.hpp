#pragma once

// Tensor-product Hilbert space of N qubits followed by M truncated bosonic
// modes. Flat basis indices are row-major over the factor list
// (qubit 0, ..., qubit N-1, mode 0, ..., mode M-1): the last factor varies
// fastest. Qubit level 0 is |g>, level 1 is |e>, with sigma_z|e> = +|e>.

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "stagen/types.hpp"

namespace stagen {

struct ModeSpec {
  double frequency = 0.0;  // rad/s
  std::size_t dim = 2;     // retained Fock levels
};

struct QubitSpec {
  double frequency = 0.0;  // rad/s
};

class TensorLayout {
 public:
  static constexpr std::size_t kDefaultDimensionCap = 1'000'000;

  TensorLayout(std::vector<QubitSpec> qubits, std::vector<ModeSpec> modes,
               std::size_t dimension_cap = kDefaultDimensionCap);

  std::size_t num_qubits() const { return qubits_.size(); }
  std::size_t num_modes() const { return modes_.size(); }
  std::size_t num_factors() const { return dims_.size(); }
  std::size_t dimension() const { return dimension_; }

  const QubitSpec& qubit(std::size_t n) const;
  const ModeSpec& mode(std::size_t m) const;
  const std::vector<QubitSpec>& qubits() const { return qubits_; }
  const std::vector<ModeSpec>& modes() const { return modes_; }

  std::size_t qubit_factor(std::size_t n) const;
  std::size_t mode_factor(std::size_t m) const;
  std::size_t factor_dim(std::size_t f) const { return dims_.at(f); }
  /// Flat-index distance between consecutive levels of factor f.
  std::size_t stride(std::size_t f) const { return strides_.at(f); }
  /// Product of all mode dimensions (size of one qubit-configuration block).
  std::size_t mode_block() const { return num_qubits() ? strides_[num_qubits() - 1] : dimension_; }

  std::size_t flatten(std::span<const std::size_t> levels) const;
  std::vector<std::size_t> unflatten(std::size_t index) const;
  std::size_t level(std::size_t index, std::size_t f) const {
    return (index / strides_[f]) % dims_[f];
  }

  /// Layout restricted to the given factors (kept in layout order).
  std::shared_ptr<const TensorLayout> subset(std::span<const std::size_t> factors) const;

  bool operator==(const TensorLayout& other) const;

 private:
  std::vector<QubitSpec> qubits_;
  std::vector<ModeSpec> modes_;
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> strides_;
  std::size_t dimension_ = 0;
};

using LayoutPtr = std::shared_ptr<const TensorLayout>;

LayoutPtr make_layout(std::vector<QubitSpec> qubits, std::vector<ModeSpec> modes,
                      std::size_t dimension_cap = TensorLayout::kDefaultDimensionCap);

/// Normalized pure state over a layout.
class StateVector {
 public:
  StateVector(LayoutPtr layout, cvec amplitudes);

  static StateVector basis(LayoutPtr layout, std::size_t index);

  const TensorLayout& layout() const { return *layout_; }
  const LayoutPtr& layout_ptr() const { return layout_; }
  std::span<const cplx> amplitudes() const { return amps_; }
  std::size_t size() const { return amps_.size(); }
  cplx operator[](std::size_t i) const { return amps_[i]; }
  double norm() const;

 private:
  LayoutPtr layout_;
  cvec amps_;
};

using DenseMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class DensityMatrix {
 public:
  enum class Check { Structure, Spectrum };

  /// Validates Hermiticity (1e-10) and unit trace (1e-8); Check::Spectrum also
  /// requires eigenvalues >= -1e-8.
  DensityMatrix(LayoutPtr layout, DenseMatrix entries, Check check = Check::Structure);

  static DensityMatrix from_pure(const StateVector& psi);

  const TensorLayout& layout() const { return *layout_; }
  const LayoutPtr& layout_ptr() const { return layout_; }
  const DenseMatrix& entries() const { return rho_; }
  std::size_t dimension() const { return static_cast<std::size_t>(rho_.rows()); }
  cplx trace() const { return rho_.trace(); }

 private:
  LayoutPtr layout_;
  DenseMatrix rho_;
};

enum class QubitOp { X, Y, Z, Raise, Lower };
enum class ModeOp { Annihilate, Create, Number };

/// Operator acting on one factor and as identity elsewhere. Application is a
/// factor-wise contraction; dense/sparse materialization is available for
/// small layouts.
class LocalOperator {
 public:
  static constexpr std::size_t kDenseLimit = 4096;

  LocalOperator(LayoutPtr layout, std::size_t factor, Eigen::MatrixXcd local);

  std::size_t factor() const { return factor_; }
  const Eigen::MatrixXcd& local() const { return local_; }
  const TensorLayout& layout() const { return *layout_; }

  cvec apply(std::span<const cplx> in) const;
  Eigen::SparseMatrix<cplx> sparse() const;
  /// Throws std::length_error above kDenseLimit.
  Eigen::MatrixXcd dense() const;

 private:
  LayoutPtr layout_;
  std::size_t factor_;
  Eigen::MatrixXcd local_;
};

/// 2x2 matrix in the (|g>, |e>) basis.
Eigen::Matrix2cd qubit_matrix(QubitOp which);
/// Truncated ladder matrix; a^dagger|d-1> is dropped.
Eigen::MatrixXcd mode_matrix(ModeOp which, std::size_t dim);

LocalOperator embed_qubit_op(const LayoutPtr& layout, std::size_t n, QubitOp which);
LocalOperator embed_mode_op(const LayoutPtr& layout, std::size_t m, ModeOp which);

struct CoherentAmplitudes {
  cvec amplitudes;       // renormalized
  double norm_deficit;   // 1 - sum |c_k|^2 before renormalization
};

/// Fock amplitudes of |alpha>. Throws NumericalError when the truncation
/// deficit exceeds max_deficit.
CoherentAmplitudes coherent_state(std::size_t dim, cplx alpha, double max_deficit = 1e-6);

/// Kronecker product of one vector per factor (layout order), normalized.
StateVector tensor_state(const LayoutPtr& layout, std::span<const cvec> factors);

/// Reduced density matrix over `keep` (factor indices, any order; the result
/// uses layout order).
DensityMatrix partial_trace(const StateVector& psi, std::span<const std::size_t> keep);
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> keep);

/// Poisson tail sum_{n >= dim} e^{-|a|^2} |a|^{2n}/n!: the norm a coherent
/// state of amplitude |a| loses when truncated to `dim` levels.
double coherent_tail(double amplitude, std::size_t dim);

struct TruncationPolicy {
  double leak_tolerance = 1e-5;
  std::size_t min_dim = 8;
};

/// Smallest dimension whose coherent tail at `peak_amplitude` is below the
/// policy tolerance (never below min_dim).
std::size_t truncation_for_amplitude(double peak_amplitude, const TruncationPolicy& policy = {});

}  // namespace stagen
