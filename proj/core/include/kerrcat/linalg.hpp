#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace kerrcat {

using Complex = std::complex<double>;
using MatrixXc = Eigen::MatrixXcd;
using VectorXc = Eigen::VectorXcd;

// Matrix exponential by scaling-and-squaring with a Pade approximant.
MatrixXc expm_pade(const MatrixXc& a);

// exp(i * h) for Hermitian h, via eigendecomposition. Exactly unitary up to
// the accuracy of the eigensolver; preferred for anti-Hermitian generators
// g = i*h (displacements, propagators of time-independent Hamiltonians).
MatrixXc expm_i_hermitian(const MatrixXc& h);

bool is_hermitian(const MatrixXc& a, double tol = 1.0e-12);

// Largest |a_ij - conj(a_ji)| over the matrix.
double hermiticity_defect(const MatrixXc& a);

// Minimum-cost assignment (Hungarian algorithm) on a square cost matrix.
// Returns perm with perm[row] = assigned column.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

// Clip negative eigenvalues of a Hermitian matrix to zero and renormalize
// the trace to its original value. Used to clean up reconstructed states.
MatrixXc project_to_psd(const MatrixXc& a);

}  // namespace kerrcat
