#include <doctest.h>

#include "stagen/hilbert.hpp"
#include "stagen/targets.hpp"
#include "support.hpp"

using namespace stagen;

namespace {

const double kW = angular_from_hz(5e9);

LayoutPtr layout(std::size_t N, std::vector<std::size_t> mode_dims) {
  std::vector<ModeSpec> modes;
  for (std::size_t d : mode_dims) modes.push_back({kW, d});
  return make_layout(std::vector<QubitSpec>(N, QubitSpec{kW}), modes);
}

cvec apply(const LocalOperator& op, const StateVector& s) { return op.apply(s.amplitudes()); }

double dist(const cvec& a, const cvec& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST_SUITE("hilbert") {
  TEST_CASE("layout dimensions") {
    CHECK(layout(1, {})->dimension() == 2);
    CHECK(layout(1, {12, 12, 12})->dimension() == 2 * 12 * 12 * 12);
    CHECK(layout(12, {8})->dimension() == 32768);
    CHECK_THROWS_AS(make_layout({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(make_layout({QubitSpec{kW}}, {ModeSpec{kW, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(make_layout({QubitSpec{0.0}}, {}), std::invalid_argument);
    CHECK_THROWS_AS(layout(1, {100, 100, 100}), std::length_error);
    CHECK_NOTHROW(make_layout({QubitSpec{kW}}, {ModeSpec{kW, 100}}, 200));
    CHECK_THROWS_AS(make_layout({QubitSpec{kW}}, {ModeSpec{kW, 101}}, 200), std::length_error);
  }

  TEST_CASE("flat index ordering: qubits first, last factor fastest") {
    const LayoutPtr L = layout(1, {3});
    const std::size_t e1[] = {1, 1};
    CHECK(L->flatten(e1) == 4);
    CHECK(L->unflatten(4) == std::vector<std::size_t>{1, 1});
    const LayoutPtr L2 = layout(2, {3, 4});
    for (std::size_t i = 0; i < L2->dimension(); ++i) CHECK(L2->flatten(L2->unflatten(i)) == i);
    CHECK(L2->stride(0) == 24);
    CHECK(L2->stride(3) == 1);
    CHECK(L2->mode_block() == 12);
  }

  TEST_CASE("qubit operators") {
    const LayoutPtr L = layout(1, {});
    const StateVector g = StateVector::basis(L, 0), e = StateVector::basis(L, 1);
    CHECK(dist(apply(embed_qubit_op(L, 0, QubitOp::X), g), {0.0, 1.0}) < 1e-15);
    CHECK(dist(apply(embed_qubit_op(L, 0, QubitOp::Z), e), {0.0, 1.0}) < 1e-15);
    CHECK(dist(apply(embed_qubit_op(L, 0, QubitOp::Z), g), {-1.0, 0.0}) < 1e-15);
    CHECK(dist(apply(embed_qubit_op(L, 0, QubitOp::Lower), e), {1.0, 0.0}) < 1e-15);
    CHECK(dist(apply(embed_qubit_op(L, 0, QubitOp::Raise), g), {0.0, 1.0}) < 1e-15);
    CHECK_THROWS_AS(embed_qubit_op(L, 1, QubitOp::X), std::out_of_range);

    std::mt19937_64 rng(3);
    const LayoutPtr L3 = layout(3, {4});
    const StateVector psi = test::random_state(L3, rng);
    for (std::size_t n = 0; n < 3; ++n) {
      const LocalOperator x = embed_qubit_op(L3, n, QubitOp::X);
      const cvec twice = x.apply(x.apply(psi.amplitudes()));
      CHECK(dist(twice, cvec(psi.amplitudes().begin(), psi.amplitudes().end())) < 1e-14);
    }
  }

  TEST_CASE("mode operators") {
    const LayoutPtr L = layout(0, {5});
    const StateVector vac = StateVector::basis(L, 0);
    CHECK(dist(apply(embed_mode_op(L, 0, ModeOp::Annihilate), vac), cvec(5, 0.0)) < 1e-15);
    CHECK(dist(apply(embed_mode_op(L, 0, ModeOp::Create), vac), {0.0, 1.0, 0.0, 0.0, 0.0}) < 1e-15);
    // Hard truncation: a^dagger|4> = 0.
    CHECK(dist(apply(embed_mode_op(L, 0, ModeOp::Create), StateVector::basis(L, 4)), cvec(5, 0.0)) < 1e-15);
    CHECK_THROWS_AS(embed_mode_op(L, 1, ModeOp::Number), std::out_of_range);

    const LayoutPtr L40 = layout(0, {40});
    const StateVector a(L40, coherent_state(40, 2.0).amplitudes);
    const cvec na = apply(embed_mode_op(L40, 0, ModeOp::Number), a);
    CHECK(std::abs(test::inner(cvec(a.amplitudes().begin(), a.amplitudes().end()), na).real() - 4.0) < 1e-6);
  }

  TEST_CASE("dense, sparse and matrix-free application agree") {
    std::mt19937_64 rng(5);
    const LayoutPtr L = layout(2, {3, 4});
    const StateVector psi = test::random_state(L, rng);
    const Eigen::Map<const Eigen::VectorXcd> v(psi.amplitudes().data(), static_cast<Eigen::Index>(psi.size()));
    for (const LocalOperator& op : {embed_qubit_op(L, 1, QubitOp::Y), embed_mode_op(L, 0, ModeOp::Create),
                                    embed_mode_op(L, 1, ModeOp::Annihilate)}) {
      const cvec mf = op.apply(psi.amplitudes());
      const Eigen::VectorXcd dn = op.dense() * v;
      const Eigen::VectorXcd sp = op.sparse() * v;
      for (std::size_t i = 0; i < mf.size(); ++i) {
        CHECK(std::abs(mf[i] - dn(static_cast<Eigen::Index>(i))) < 1e-14);
        CHECK(std::abs(mf[i] - sp(static_cast<Eigen::Index>(i))) < 1e-14);
      }
    }
    const LayoutPtr big = layout(1, {2100});
    CHECK_THROWS_AS(embed_mode_op(big, 0, ModeOp::Number).dense(), std::length_error);
  }

  TEST_CASE("disjoint embedded operators commute") {
    const LayoutPtr L = layout(2, {4, 4});  // dim 64
    std::vector<LocalOperator> ops{embed_qubit_op(L, 0, QubitOp::X), embed_qubit_op(L, 1, QubitOp::Y),
                                   embed_mode_op(L, 0, ModeOp::Annihilate), embed_mode_op(L, 1, ModeOp::Create)};
    for (std::size_t i = 0; i < ops.size(); ++i) {
      for (std::size_t j = i + 1; j < ops.size(); ++j) {
        const Eigen::MatrixXcd A = ops[i].dense(), B = ops[j].dense();
        CHECK((A * B - B * A).operatorNorm() < 1e-12);
      }
    }
  }

  TEST_CASE("coherent states") {
    const CoherentAmplitudes zero = coherent_state(10, 0.0);
    CHECK(std::abs(zero.amplitudes[0] - 1.0) < 1e-15);
    CHECK(zero.norm_deficit < 1e-15);

    const cvec a = coherent_state(40, 1.0).amplitudes, b = coherent_state(40, -1.0).amplitudes;
    CHECK(std::abs(std::norm(test::inner(a, b)) - std::exp(-4.0)) < 1e-6);

    CHECK(coherent_state(40, 3.0).norm_deficit < 1e-8);
    CHECK_THROWS_AS(coherent_state(10, 3.0), NumericalError);
    CHECK_NOTHROW(coherent_state(10, 3.0, 0.5));

    // Matches the unnormalized recurrence up to the renormalization factor.
    const cplx alpha(1.2, -0.7);
    const CoherentAmplitudes c = coherent_state(30, alpha);
    const cvec ref = test::coherent_reference(30, alpha);
    const double scale = 1.0 / std::sqrt(1.0 - c.norm_deficit);
    for (std::size_t k = 0; k < 30; ++k) CHECK(std::abs(c.amplitudes[k] - scale * ref[k]) < 1e-14);
  }

  TEST_CASE("coherent eigen-relation inside the truncation margin") {
    for (double r : {0.5, 1.0, 2.0, 3.0}) {
      for (double phase : {0.0, 1.1, 2.5}) {
        const cplx alpha = std::polar(r, phase);
        const auto dim = static_cast<std::size_t>(std::ceil(r * r + 6.0 * r + 10.0 + 2.0 * r));
        const LayoutPtr L = layout(0, {dim});
        const cvec c = coherent_state(dim, alpha).amplitudes;
        const cvec ac = embed_mode_op(L, 0, ModeOp::Annihilate).apply(c);
        double res = 0.0;
        for (std::size_t k = 0; k < dim; ++k) res += std::norm(ac[k] - alpha * c[k]);
        CAPTURE(r);
        CHECK(std::sqrt(res) <= std::max(1e-6, 1.01 * r * std::abs(c[dim - 1])));
      }
    }
  }

  TEST_CASE("truncation rule from the Poisson tail") {
    // Independent tail: 1 - sum_{n<d} Poisson(n; |a|^2).
    auto tail = [](double a, std::size_t d) {
      double p = std::exp(-a * a), s = 0.0;
      for (std::size_t n = 0; n < d; ++n) {
        s += p;
        p *= a * a / static_cast<double>(n + 1);
      }
      return 1.0 - s;
    };
    for (double a : {0.5, 1.0, 3.0, 5.0}) {
      for (std::size_t d : {8, 16, 30}) CHECK(std::abs(coherent_tail(a, d) - tail(a, d)) < 1e-12);
      const std::size_t d = truncation_for_amplitude(a);
      CHECK(d >= 8);
      CHECK(coherent_tail(a, d) <= 1e-5);
      if (d > 8) CHECK(coherent_tail(a, d - 1) > 1e-5);
    }
    CHECK(truncation_for_amplitude(3.0) == 25);
    CHECK_THROWS_AS(truncation_for_amplitude(-1.0), std::invalid_argument);
  }

  TEST_CASE("tensor_state ordering and normalization") {
    const LayoutPtr L = layout(1, {4});
    const cvec g{1.0, 0.0}, e{0.0, 1.0};
    const cvec vac{1.0, 0.0, 0.0, 0.0}, one{0.0, 1.0, 0.0, 0.0};
    const std::vector<cvec> f0{g, vac}, f1{e, one};
    CHECK(std::abs(tensor_state(L, f0)[0] - 1.0) < 1e-15);
    const LayoutPtr L3 = layout(1, {3});
    const std::vector<cvec> f2{e, {0.0, 1.0, 0.0}};
    CHECK(std::abs(tensor_state(L3, f2)[4] - 1.0) < 1e-15);

    std::mt19937_64 rng(9);
    const std::vector<cvec> fr{test::random_vector(2, rng), test::random_vector(4, rng)};
    CHECK(std::abs(tensor_state(L, fr).norm() - 1.0) < 1e-12);
    const std::vector<cvec> bad{g};
    CHECK_THROWS_AS(tensor_state(L, bad), std::invalid_argument);
  }

  TEST_CASE("partial trace recovers factor projectors") {
    std::mt19937_64 rng(13);
    const LayoutPtr L = layout(2, {3});
    std::vector<cvec> fs;
    for (std::size_t f = 0; f < L->num_factors(); ++f) {
      cvec v = test::random_vector(L->factor_dim(f), rng);
      const double n = std::sqrt(test::inner(v, v).real());
      for (auto& z : v) z /= n;
      fs.push_back(v);
    }
    const StateVector psi = tensor_state(L, fs);
    for (std::size_t f = 0; f < L->num_factors(); ++f) {
      const std::size_t keep[] = {f};
      const DensityMatrix r = partial_trace(psi, keep);
      for (std::size_t i = 0; i < fs[f].size(); ++i)
        for (std::size_t j = 0; j < fs[f].size(); ++j)
          CHECK(std::abs(r.entries()(i, j) - fs[f][i] * std::conj(fs[f][j])) < 1e-12);
    }
    CHECK_THROWS_AS(partial_trace(psi, std::span<const std::size_t>{}), std::invalid_argument);
  }

  TEST_CASE("partial trace of a Bell pair is maximally mixed") {
    const LayoutPtr L = layout(2, {});
    const StateVector bell(L, {1.0, 0.0, 0.0, 1.0});
    const std::size_t keep[] = {1};
    const DensityMatrix r = partial_trace(bell, keep);
    CHECK(std::abs(r.entries()(0, 0) - 0.5) < 1e-15);
    CHECK(std::abs(r.entries()(1, 1) - 0.5) < 1e-15);
    CHECK(std::abs(r.entries()(0, 1)) < 1e-15);
  }

  TEST_CASE("partial trace preserves the trace") {
    std::mt19937_64 rng(17);
    const LayoutPtr L = layout(2, {3});
    for (int trial = 0; trial < 5; ++trial) {
      const DensityMatrix rho = test::random_density(L, rng);
      for (std::vector<std::size_t> keep : {std::vector<std::size_t>{0}, {1, 2}, {2, 0}}) {
        const DensityMatrix r = partial_trace(rho, keep);
        CHECK(std::abs(r.trace() - rho.trace()) < 1e-10);
      }
    }
  }

  TEST_CASE("reduced mode of the branch-displaced state") {
    const double alpha = 3.0;
    const std::size_t d = 30;
    const LayoutPtr L = layout(1, {d, d});
    const StateVector psi = photonic_ghz_target(L, alpha);
    const std::size_t keep[] = {1};
    const DensityMatrix r = partial_trace(psi, keep);
    const cvec a = test::coherent_reference(d, alpha), b = test::coherent_reference(d, -alpha);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const cplx ref = 0.5 * (a[i] * std::conj(a[j]) + b[i] * std::conj(b[j]));
        CHECK(std::abs(r.entries()(i, j) - ref) < 1e-6);
      }
  }

  TEST_CASE("density matrix validation") {
    const LayoutPtr L = layout(1, {});
    DenseMatrix m(2, 2);
    m << 0.5, 0.1, 0.2, 0.5;
    CHECK_THROWS_AS(DensityMatrix(L, m), NumericalError);
    m << 0.6, 0.0, 0.0, 0.6;
    CHECK_THROWS_AS(DensityMatrix(L, m), NumericalError);
    m << 1.1, 0.0, 0.0, -0.1;
    CHECK_NOTHROW(DensityMatrix(L, m));
    CHECK_THROWS_AS(DensityMatrix(L, m, DensityMatrix::Check::Spectrum), NumericalError);
    const DensityMatrix p = DensityMatrix::from_pure(StateVector(L, {1.0, kI}));
    CHECK(std::abs(p.entries()(0, 1) - cplx(0.0, -0.5)) < 1e-15);
  }
}
