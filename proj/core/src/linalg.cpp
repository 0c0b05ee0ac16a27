#include "kerrcat/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>

#include "kerrcat/errors.hpp"

namespace kerrcat {

MatrixXc expm_pade(const MatrixXc& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("expm_pade: matrix not square");
  return a.exp();
}

MatrixXc expm_i_hermitian(const MatrixXc& h) {
  if (h.rows() != h.cols()) throw DimensionMismatch("expm_i_hermitian: matrix not square");
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(h);
  if (es.info() != Eigen::Success) throw NoConvergence("expm_i_hermitian: eigensolver failed");
  const auto& v = es.eigenvectors();
  VectorXc phases(h.rows());
  for (Eigen::Index k = 0; k < h.rows(); ++k) {
    phases(k) = std::polar(1.0, es.eigenvalues()(k));
  }
  return v * phases.asDiagonal() * v.adjoint();
}

double hermiticity_defect(const MatrixXc& a) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const MatrixXc& a, double tol) {
  if (a.rows() != a.cols()) return false;
  double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return hermiticity_defect(a) <= tol * scale;
}

// O(n^3) Hungarian algorithm, potentials formulation.
std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw DimensionMismatch("hungarian: cost matrix not square");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> perm(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] > 0) perm[p[j] - 1] = j - 1;
  }
  return perm;
}

MatrixXc project_to_psd(const MatrixXc& a) {
  MatrixXc h = 0.5 * (a + a.adjoint());
  double tr = h.trace().real();
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(h);
  if (es.info() != Eigen::Success) throw NoConvergence("project_to_psd: eigensolver failed");
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  double s = lam.sum();
  if (s <= 0.0) throw UnphysicalModel("project_to_psd: matrix has no positive part");
  if (tr > 0.0) lam *= tr / s;
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace kerrcat
