#include <doctest.h>

#include "stagen/analysis.hpp"
#include "support.hpp"

using namespace stagen;

namespace {

LayoutPtr single_mode(std::size_t d) { return make_layout({}, {ModeSpec{1.0, d}}); }

DenseMatrix projector(const cvec& v) {
  const Eigen::Map<const Eigen::VectorXcd> x(v.data(), static_cast<Eigen::Index>(v.size()));
  return x * x.adjoint();
}

cvec normalized(cvec v) {
  double n = 0.0;
  for (auto z : v) n += std::norm(z);
  for (auto& z : v) z /= std::sqrt(n);
  return v;
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("pure-state fidelity examples") {
    const LayoutPtr q = make_layout({QubitSpec{1.0}}, {});
    const StateVector g = StateVector::basis(q, 0), e = StateVector::basis(q, 1);
    const StateVector plus(q, {1.0, 1.0});
    CHECK(fidelity(g, e).value == doctest::Approx(0.0));
    CHECK(fidelity(g, plus).value == doctest::Approx(0.5));
    CHECK(fidelity(g, g).method == FidelityMethod::PurePure);
    const DensityMatrix mixed(q, DenseMatrix::Identity(2, 2) * 0.5);
    const FidelityReport r = fidelity(plus, mixed);
    CHECK(r.value == doctest::Approx(0.5));
    CHECK(r.method == FidelityMethod::PureMixed);
    CHECK(fidelity(mixed, plus).value == doctest::Approx(0.5));
    CHECK(fidelity(mixed, mixed).value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fidelity(mixed, mixed).method == FidelityMethod::MixedMixed);
    CHECK(to_string(FidelityMethod::MixedMixed) == "mixed-mixed");
  }

  TEST_CASE("fidelity is blind to a global phase") {
    std::mt19937_64 rng(3);
    const LayoutPtr L = make_layout({QubitSpec{1.0}}, {ModeSpec{1.0, 5}});
    const StateVector a = test::random_state(L, rng), b = test::random_state(L, rng);
    cvec rotated(b.amplitudes().begin(), b.amplitudes().end());
    for (auto& z : rotated) z *= std::polar(1.0, 1.234);
    CHECK(fidelity(a, StateVector(L, rotated)).value == doctest::Approx(fidelity(a, b).value).epsilon(1e-13));
  }

  TEST_CASE("mixed-state fidelity: symmetry, range and pure limit") {
    std::mt19937_64 rng(5);
    const LayoutPtr L = make_layout({QubitSpec{1.0}}, {ModeSpec{1.0, 3}});
    for (int trial = 0; trial < 10; ++trial) {
      const DensityMatrix a = test::random_density(L, rng), b = test::random_density(L, rng);
      const double fab = fidelity(a, b).value, fba = fidelity(b, a).value;
      CHECK(std::abs(fab - fba) < 1e-10);
      CHECK(fab >= 0.0);
      CHECK(fab <= 1.0 + 1e-12);
      CHECK(fidelity(a, a).value == doctest::Approx(1.0).epsilon(1e-9));
    }
    const StateVector x = test::random_state(L, rng), y = test::random_state(L, rng);
    const double pure = std::norm(test::inner(cvec(x.amplitudes().begin(), x.amplitudes().end()),
                                              cvec(y.amplitudes().begin(), y.amplitudes().end())));
    CHECK(fidelity(DensityMatrix::from_pure(x), DensityMatrix::from_pure(y)).value == doctest::Approx(pure).epsilon(1e-7));
    CHECK(fidelity(x, DensityMatrix::from_pure(y)).value == doctest::Approx(pure).epsilon(1e-12));
  }

  TEST_CASE("fidelity is invariant under a common unitary") {
    std::mt19937_64 rng(7);
    const LayoutPtr L = make_layout({QubitSpec{1.0}, QubitSpec{1.0}}, {});
    for (int trial = 0; trial < 5; ++trial) {
      const DensityMatrix a = test::random_density(L, rng), b = test::random_density(L, rng);
      // Local unitary U1 (x) U2.
      const Eigen::MatrixXcd u1 = test::random_unitary(2, rng), u2 = test::random_unitary(2, rng);
      Eigen::MatrixXcd U(4, 4);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) U.block(2 * i, 2 * j, 2, 2) = u1(i, j) * u2;
      const DensityMatrix ua(L, U * a.entries() * U.adjoint()), ub(L, U * b.entries() * U.adjoint());
      CHECK(fidelity(ua, ub).value == doctest::Approx(fidelity(a, b).value).epsilon(1e-9));
      const Eigen::MatrixXcd V = test::random_unitary(4, rng);
      const DensityMatrix va(L, V * a.entries() * V.adjoint()), vb(L, V * b.entries() * V.adjoint());
      CHECK(fidelity(va, vb).value == doctest::Approx(fidelity(a, b).value).epsilon(1e-9));
    }
  }

  TEST_CASE("fidelity rejects mismatched dimensions") {
    const LayoutPtr a = make_layout({QubitSpec{1.0}}, {}), b = make_layout({}, {ModeSpec{1.0, 3}});
    CHECK_THROWS(fidelity(StateVector::basis(a, 0), StateVector::basis(b, 0)));
  }

  TEST_CASE("vacuum and coherent Wigner values") {
    const std::size_t d = 30;
    DenseMatrix vac = DenseMatrix::Zero(d, d);
    vac(0, 0) = 1.0;
    CHECK(std::abs(wigner_at(vac, 0.0) - 2.0 / kPi) < 1e-6);
    const cplx alpha(1.2, -0.7);
    const DenseMatrix coh = projector(test::coherent_reference(d, alpha));
    for (cplx beta : {cplx(0.0), cplx(1.0, -0.5), cplx(-0.3, 0.9)}) {
      CHECK(std::abs(wigner_at(coh, beta) - 2.0 / kPi * std::exp(-2.0 * std::norm(beta - alpha))) < 1e-8);
    }
  }

  TEST_CASE("odd cat has W(0) = -2/pi") {
    const std::size_t d = 40;
    const cvec a = test::coherent_reference(d, 2.0), b = test::coherent_reference(d, -2.0);
    cvec odd(d);
    for (std::size_t k = 0; k < d; ++k) odd[k] = a[k] - b[k];
    CHECK(std::abs(wigner_at(projector(normalized(odd)), 0.0) + 2.0 / kPi) < 1e-4);
    cvec even(d);
    for (std::size_t k = 0; k < d; ++k) even[k] = a[k] + b[k];
    CHECK(std::abs(wigner_at(projector(normalized(even)), 0.0) - 2.0 / kPi) < 1e-4);
  }

  TEST_CASE("Wigner function is linear in the state") {
    std::mt19937_64 rng(11);
    const LayoutPtr L = single_mode(8);
    const DenseMatrix r1 = test::random_density(L, rng).entries(), r2 = test::random_density(L, rng).entries();
    for (cplx beta : {cplx(0.2, 0.1), cplx(-1.0, 0.4)}) {
      const double lhs = wigner_at(0.3 * r1 + 0.7 * r2, beta);
      CHECK(std::abs(lhs - (0.3 * wigner_at(r1, beta) + 0.7 * wigner_at(r2, beta))) < 1e-12);
    }
  }

  TEST_CASE("Wigner grid and marginals of a coherent state") {
    const std::size_t d = 60;
    const LayoutPtr L = single_mode(d);
    const DensityMatrix rho(L, projector(test::coherent_reference(d, 3.0)));
    const WignerGrid g = wigner(rho, WignerGridSpec::square(6.5, 131));
    CHECK(g.warning.empty());
    CHECK(g.integral() == doctest::Approx(1.0).epsilon(2e-2));
    CHECK(g.min() > -1e-8);
    const Marginals m = wigner_marginals(g);
    const auto peak = std::max_element(m.px.begin(), m.px.end()) - m.px.begin();
    CHECK(std::abs(m.x[static_cast<std::size_t>(peak)] - 3.0) < 0.06);
    const auto ppeak = std::max_element(m.pp.begin(), m.pp.end()) - m.pp.begin();
    CHECK(std::abs(m.p[static_cast<std::size_t>(ppeak)]) < 0.06);
    double sx = 0.0;
    for (std::size_t i = 0; i + 1 < m.x.size(); ++i) sx += 0.5 * (m.px[i] + m.px[i + 1]) * (m.x[i + 1] - m.x[i]);
    CHECK(sx == doctest::Approx(1.0).epsilon(2e-2));
    for (double v : m.px) CHECK(v > -1e-8);
  }

  TEST_CASE("Wigner grid flags states at the truncation edge") {
    const std::size_t d = 10;
    const LayoutPtr L = single_mode(d);
    cvec top(d, 0.0);
    top[d - 1] = 1.0;
    CHECK_FALSE(wigner(DensityMatrix(L, projector(top)), WignerGridSpec::square(3.0, 11)).warning.empty());
  }

  TEST_CASE("computational labels") {
    CHECK(label_index("gg", 2) == 0);
    CHECK(label_index("gge", 3) == 1);
    CHECK(label_index("egg", 3) == 4);
    CHECK(label_index("eeee", 4) == 15);
    CHECK_THROWS(label_index("gx", 2));
    CHECK_THROWS(label_index("g", 2));
  }

  TEST_CASE("qubit populations sum to one with modes traced out") {
    std::mt19937_64 rng(13);
    const LayoutPtr L = make_layout({QubitSpec{1.0}, QubitSpec{1.0}}, {ModeSpec{1.0, 4}});
    const StateVector psi = test::random_state(L, rng);
    const std::vector<double> p = populations(psi, {"gg", "ge", "eg", "ee"});
    double total = 0.0;
    for (double x : p) total += x;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    double ref = 0.0;
    for (std::size_t k = 0; k < 4; ++k) ref += std::norm(psi[2 * 4 + k]);
    CHECK(p[2] == doctest::Approx(ref).epsilon(1e-12));
  }
}
