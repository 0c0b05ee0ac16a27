#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include <kerrcat/errors.hpp>
#include <kerrcat/fock.hpp>

using namespace kerrcat;

namespace {
constexpr double kTight = 1.0e-12;
}

TEST_CASE("ladder operators act on number states") {
  const HilbertSpace sp(12);
  const Operator a = annihilation(sp);
  const Operator ad = creation(sp);
  const Operator n = number_op(sp);

  for (int m = 1; m < 12; ++m) {
    const VectorXc em = StateVector::basis(sp, m).vec();
    const VectorXc lowered = a.matrix() * em;
    CHECK(std::abs(lowered(m - 1) - std::sqrt(double(m))) < kTight);
  }
  CHECK((n.matrix() - ad.matrix() * a.matrix()).norm() < kTight);

  // [a, a^dag] = 1 except the truncation corner, where it reads 1 - dim.
  const MatrixXc comm = a.matrix() * ad.matrix() - ad.matrix() * a.matrix();
  for (int m = 0; m < 11; ++m) CHECK(std::abs(comm(m, m) - 1.0) < kTight);
  CHECK(std::abs(comm(11, 11) - (1.0 - 12.0)) < kTight);
}

TEST_CASE("parity operator is diagonal (-1)^n and squares to identity") {
  const HilbertSpace sp(9);
  const MatrixXc pi = parity_op(sp).matrix();
  for (int m = 0; m < 9; ++m) CHECK(std::abs(pi(m, m) - ((m % 2) ? -1.0 : 1.0)) < kTight);
  CHECK((pi * pi - MatrixXc::Identity(9, 9)).norm() < kTight);
}

TEST_CASE("coherent state amplitudes match the Poisson closed form") {
  const HilbertSpace sp(30);
  const StateVector psi = coherent_state(Complex(1.3, 0.0), sp);
  // e^{-|a|^2/2} a^n / sqrt(n!) at n = 0 and 2, frozen independently.
  CHECK(std::abs(psi.vec()(0) - 0.4295573582107391) < 1.0e-10);
  CHECK(std::abs(psi.vec()(2) - 0.5133255363199734) < 1.0e-10);

  const Operator a = annihilation(sp);
  const Complex mean_a = expectation(a, psi);
  CHECK(std::abs(mean_a - Complex(1.3, 0.0)) < 1.0e-9);
  CHECK(std::abs(expectation(number_op(sp), psi).real() - 1.69) < 1.0e-9);
}

TEST_CASE("truncation rule keeps the Poisson tail below 1e-10") {
  for (double al : {0.8, 1.4, 2.3}) {
    const int need = required_dim(Complex(al, 0.0));
    CHECK(poisson_tail_mass(al * al, need) < 1.0e-10);
    CHECK(poisson_tail_mass(al * al, need / 2) > 1.0e-10);
  }
}

TEST_CASE("cat states: parity, orthogonality, and the a^2 eigenvalue") {
  const HilbertSpace sp(36);
  const Complex alpha(1.2, 0.0);
  const VectorXc cp = cat_state(alpha, CatKind::Plus, sp).vec();
  const VectorXc cm = cat_state(alpha, CatKind::Minus, sp).vec();

  const MatrixXc pi = parity_op(sp).matrix();
  CHECK((pi * cp - cp).norm() < 1.0e-10);
  CHECK((pi * cm + cm).norm() < 1.0e-10);
  CHECK(std::abs(cp.dot(cm)) < 1.0e-12);

  // <alpha|C+> = (1 + e^{-2 a^2}) / sqrt(2 (1 + e^{-2 a^2})), frozen.
  const VectorXc coh = coherent_state(alpha, sp).vec();
  CHECK(std::abs(coh.dot(cp).real() - 0.7266824488158957) < 1.0e-10);

  // Both cats are eigenvectors of a^2 with eigenvalue alpha^2.
  const MatrixXc a2 = (annihilation(sp).matrix() * annihilation(sp).matrix()).eval();
  CHECK((a2 * cp - alpha * alpha * cp).norm() < 1.0e-9);
  CHECK((a2 * cm - alpha * alpha * cm).norm() < 1.0e-9);

  CHECK(cat_phase(CatKind::PlusI) == Complex(0.0, 1.0));
  CHECK(cat_phase(CatKind::Minus) == Complex(-1.0, 0.0));
}

TEST_CASE("displacement: three construction routes agree and are unitary") {
  const HilbertSpace sp(40);
  const Complex beta(0.8, -0.4);
  const MatrixXc d1 = displacement(beta, sp).matrix();
  const MatrixXc d2 = displacement_pade(beta, sp).matrix();
  CHECK((d1 - d2).norm() < 1.0e-10);
  CHECK((d1 * d1.adjoint() - MatrixXc::Identity(40, 40)).norm() < 1.0e-10);

  const VectorXc from_vac = d1 * StateVector::basis(sp, 0).vec();
  CHECK((from_vac - coherent_state(beta, sp).vec()).norm() < 1.0e-9);

  // Closed-form matrix elements: truncation-free, so agreement holds in the
  // deep interior where the generator route has converged.
  const MatrixXc d3 = displacement_analytic(beta, 40);
  CHECK((d1.topLeftCorner(20, 20) - d3.topLeftCorner(20, 20)).norm() < 1.0e-9);
  CHECK(std::abs(d3(0, 0) - std::exp(-std::norm(beta) / 2.0)) < kTight);
  CHECK(std::abs(d3(1, 0) - beta * std::exp(-std::norm(beta) / 2.0)) < kTight);
}

TEST_CASE("displacement_analytic stays exact at large argument") {
  // |<0|D(4)|0>| = e^{-8}; the generator route would need dim >= 50 for this.
  const MatrixXc d = displacement_analytic(Complex(4.0, 0.0), 12);
  CHECK(std::abs(d(0, 0) - std::exp(-8.0)) < 1.0e-12);
}

TEST_CASE("state fidelities") {
  const HilbertSpace sp(25);
  const StateVector a = coherent_state(Complex(0.9, 0.0), sp);
  const StateVector b = coherent_state(Complex(0.9, 0.4), sp);
  const double overlap = std::norm(a.vec().dot(b.vec()));
  CHECK(state_fidelity(a, b) == doctest::Approx(overlap).epsilon(1e-12));

  const DensityMatrix rho = DensityMatrix::pure(a);
  CHECK(state_fidelity(rho, b) == doctest::Approx(overlap).epsilon(1e-10));
  CHECK(state_fidelity(rho, DensityMatrix::pure(b)) ==
        doctest::Approx(overlap).epsilon(1e-8));
  CHECK(state_fidelity(rho, a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("state constructors reject unphysical input") {
  const HilbertSpace sp(6);
  VectorXc v = VectorXc::Zero(6);
  v(0) = 1.1;  // norm off by 10%
  CHECK_THROWS_AS(StateVector(sp, v), Error);

  MatrixXc m = MatrixXc::Zero(6, 6);
  m(0, 0) = 1.3;
  m(1, 1) = -0.3;  // negative eigenvalue far beyond tolerance
  CHECK_THROWS_AS(DensityMatrix(sp, m), Error);

  m = MatrixXc::Zero(6, 6);
  m(0, 0) = 1.0;
  m(0, 1) = 0.2;  // not hermitian
  CHECK_THROWS_AS(DensityMatrix(sp, m), Error);

  CHECK_THROWS_AS(HilbertSpace(1), Error);
}

TEST_CASE("expectation agrees between pure and density forms") {
  const HilbertSpace sp(20);
  const StateVector psi = cat_state(Complex(1.1, 0.0), CatKind::PlusI, sp);
  const Operator n = number_op(sp);
  const Complex e1 = expectation(n, psi);
  const Complex e2 = expectation(n, DensityMatrix::pure(psi));
  CHECK(std::abs(e1 - e2) < 1.0e-10);
  CHECK(std::abs(e1.imag()) < 1.0e-12);
}
