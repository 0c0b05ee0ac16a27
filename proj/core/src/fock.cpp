#include "kerrcat/fock.hpp"

#include <cmath>
#include <string>

#include "kerrcat/errors.hpp"

namespace kerrcat {

HilbertSpace::HilbertSpace(int d) : dim(d) {
  if (d < 2) throw ConfigError("HilbertSpace: dim must be >= 2, got " + std::to_string(d));
}

Operator::Operator(HilbertSpace space, MatrixXc m) : space_(space), m_(std::move(m)) {
  if (m_.rows() != space_.dim || m_.cols() != space_.dim) {
    throw DimensionMismatch("Operator: matrix shape does not match space dim");
  }
}

static void check_same_space(const HilbertSpace& a, const HilbertSpace& b, const char* who) {
  if (a != b) throw DimensionMismatch(std::string(who) + ": operands from different spaces");
}

Operator operator+(const Operator& a, const Operator& b) {
  check_same_space(a.space_, b.space_, "Operator+");
  return Operator(a.space_, a.m_ + b.m_);
}

Operator operator-(const Operator& a, const Operator& b) {
  check_same_space(a.space_, b.space_, "Operator-");
  return Operator(a.space_, a.m_ - b.m_);
}

Operator operator*(const Operator& a, const Operator& b) {
  check_same_space(a.space_, b.space_, "Operator*");
  return Operator(a.space_, a.m_ * b.m_);
}

Operator operator*(Complex s, const Operator& a) { return Operator(a.space_, s * a.m_); }
Operator operator*(double s, const Operator& a) { return Operator(a.space_, s * a.m_); }

StateVector::StateVector(HilbertSpace space, VectorXc v) : space_(space), v_(std::move(v)) {
  if (v_.size() != space_.dim) throw DimensionMismatch("StateVector: length != space dim");
  double n = v_.norm();
  if (std::abs(n - 1.0) > 1.0e-6) {
    throw UnphysicalModel("StateVector: norm " + std::to_string(n) + " deviates from 1");
  }
  v_ /= n;
}

StateVector StateVector::basis(HilbertSpace space, int n) {
  if (n < 0 || n >= space.dim) throw DimensionMismatch("StateVector::basis: index out of range");
  VectorXc v = VectorXc::Zero(space.dim);
  v(n) = 1.0;
  return StateVector(space, std::move(v));
}

DensityMatrix::DensityMatrix(HilbertSpace space, MatrixXc rho) : space_(space), m_(std::move(rho)) {
  if (m_.rows() != space_.dim || m_.cols() != space_.dim) {
    throw DimensionMismatch("DensityMatrix: shape != space dim");
  }
  double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
  if (hermiticity_defect(m_) > 1.0e-10 * scale * m_.rows()) {
    throw UnphysicalModel("DensityMatrix: not Hermitian within tolerance");
  }
  m_ = 0.5 * (m_ + m_.adjoint().eval());
  double tr = m_.trace().real();
  if (std::abs(tr - 1.0) > 1.0e-6) {
    throw UnphysicalModel("DensityMatrix: trace " + std::to_string(tr) + " deviates from 1");
  }
  m_ /= tr;
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(m_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1.0e-6) {
    throw UnphysicalModel("DensityMatrix: negative eigenvalue " +
                          std::to_string(es.eigenvalues().minCoeff()));
  }
}

DensityMatrix DensityMatrix::pure(const StateVector& psi) {
  return DensityMatrix(psi.space(), psi.vec() * psi.vec().adjoint());
}

Complex cat_phase(CatKind k) {
  switch (k) {
    case CatKind::Plus: return {1.0, 0.0};
    case CatKind::Minus: return {-1.0, 0.0};
    case CatKind::PlusI: return {0.0, 1.0};
    case CatKind::MinusI: return {0.0, -1.0};
  }
  throw ConfigError("cat_phase: bad CatKind");
}

Operator annihilation(HilbertSpace space) {
  MatrixXc m = MatrixXc::Zero(space.dim, space.dim);
  for (int n = 1; n < space.dim; ++n) m(n - 1, n) = std::sqrt(double(n));
  return Operator(space, std::move(m));
}

Operator creation(HilbertSpace space) { return annihilation(space).adjoint(); }

Operator number_op(HilbertSpace space) {
  MatrixXc m = MatrixXc::Zero(space.dim, space.dim);
  for (int n = 0; n < space.dim; ++n) m(n, n) = double(n);
  return Operator(space, std::move(m));
}

Operator parity_op(HilbertSpace space) {
  MatrixXc m = MatrixXc::Zero(space.dim, space.dim);
  for (int n = 0; n < space.dim; ++n) m(n, n) = (n % 2 == 0) ? 1.0 : -1.0;
  return Operator(space, std::move(m));
}

int required_dim(Complex alpha) {
  double a = std::abs(alpha);
  return static_cast<int>(std::ceil(a * a + 6.0 * a + 10.0));
}

double poisson_tail_mass(double alpha_sq, int dim) {
  if (alpha_sq < 0.0) throw ConfigError("poisson_tail_mass: negative |alpha|^2");
  if (alpha_sq == 0.0) return 0.0;
  double log_t = dim * std::log(alpha_sq) - alpha_sq - std::lgamma(dim + 1.0);
  double t = std::exp(log_t);
  double s = t;
  for (int n = dim + 1; n < dim + 2000; ++n) {
    t *= alpha_sq / n;
    s += t;
    if (t < s * 1.0e-17 + 1.0e-300) break;
  }
  return s;
}

StateVector coherent_state(Complex alpha, HilbertSpace space) {
  if (space.dim < required_dim(alpha)) {
    throw TruncationTooSmall("coherent_state: dim " + std::to_string(space.dim) +
                             " < required " + std::to_string(required_dim(alpha)));
  }
  VectorXc v(space.dim);
  // c_n = alpha^n / sqrt(n!) * exp(-|alpha|^2/2), built by the stable ratio
  // c_{n+1} = c_n * alpha / sqrt(n+1).
  Complex c = std::exp(-0.5 * std::norm(alpha));
  for (int n = 0; n < space.dim; ++n) {
    v(n) = c;
    c *= alpha / std::sqrt(double(n + 1));
  }
  v /= v.norm();
  return StateVector(space, std::move(v));
}

StateVector cat_state(Complex alpha, CatKind kind, HilbertSpace space) {
  StateVector plus = coherent_state(alpha, space);
  StateVector minus = coherent_state(-alpha, space);
  VectorXc raw = plus.vec() + cat_phase(kind) * minus.vec();
  double n = raw.norm();
  if (n < 1.0e-8) throw DegenerateBasis("cat_state: superposition norm vanishes");
  raw /= n;
  return StateVector(space, std::move(raw));
}

static MatrixXc displacement_generator(Complex beta, HilbertSpace space) {
  MatrixXc a = annihilation(space).matrix();
  return beta * a.adjoint() - std::conj(beta) * a;
}

Operator displacement(Complex beta, HilbertSpace space) {
  if (space.dim < required_dim(beta)) {
    throw TruncationTooSmall("displacement: dim " + std::to_string(space.dim) +
                             " < required " + std::to_string(required_dim(beta)));
  }
  // generator g = beta a^dag - conj(beta) a is anti-Hermitian: g = i h.
  MatrixXc h = Complex(0.0, -1.0) * displacement_generator(beta, space);
  return Operator(space, expm_i_hermitian(h));
}

Operator displacement_pade(Complex beta, HilbertSpace space) {
  if (space.dim < required_dim(beta)) {
    throw TruncationTooSmall("displacement_pade: truncation too small for |beta|");
  }
  return Operator(space, expm_pade(displacement_generator(beta, space)));
}

MatrixXc displacement_analytic(Complex beta, int dim) {
  if (dim < 2) throw ConfigError("displacement_analytic: dim must be >= 2");
  MatrixXc d(dim, dim);
  // Row 0: <0|D|n> = (-conj(beta))^n / sqrt(n!) exp(-|beta|^2/2).
  Complex c = std::exp(-0.5 * std::norm(beta));
  for (int n = 0; n < dim; ++n) {
    d(0, n) = c;
    c *= -std::conj(beta) / std::sqrt(double(n + 1));
  }
  // a D = D (a + beta) gives the row-raising recurrence
  // <m+1|D|n> = (sqrt(n) <m|D|n-1> + beta <m|D|n>) / sqrt(m+1).
  for (int m = 0; m + 1 < dim; ++m) {
    double rm = 1.0 / std::sqrt(double(m + 1));
    for (int n = 0; n < dim; ++n) {
      Complex acc = beta * d(m, n);
      if (n > 0) acc += std::sqrt(double(n)) * d(m, n - 1);
      d(m + 1, n) = acc * rm;
    }
  }
  return d;
}

double state_fidelity(const StateVector& a, const StateVector& b) {
  check_same_space(a.space(), b.space(), "state_fidelity");
  return std::norm(a.vec().dot(b.vec()));
}

double state_fidelity(const DensityMatrix& rho, const StateVector& psi) {
  check_same_space(rho.space(), psi.space(), "state_fidelity");
  return (psi.vec().adjoint() * rho.matrix() * psi.vec())(0).real();
}

double state_fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  check_same_space(rho.space(), sigma.space(), "state_fidelity");
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(rho.matrix());
  if (es.info() != Eigen::Success) throw NoConvergence("state_fidelity: eigensolver failed");
  MatrixXc sq = es.eigenvectors() *
                es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                es.eigenvectors().adjoint();
  MatrixXc m = sq * sigma.matrix() * sq;
  Eigen::SelfAdjointEigenSolver<MatrixXc> es2(m, Eigen::EigenvaluesOnly);
  double s = es2.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return s * s;
}

Complex expectation(const Operator& op, const StateVector& psi) {
  check_same_space(op.space(), psi.space(), "expectation");
  return psi.vec().dot(op.matrix() * psi.vec());
}

Complex expectation(const Operator& op, const DensityMatrix& rho) {
  check_same_space(op.space(), rho.space(), "expectation");
  return (op.matrix() * rho.matrix()).trace();
}

}  // namespace kerrcat
