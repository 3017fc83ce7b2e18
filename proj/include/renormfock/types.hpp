#pragma once

#include <complex>
#include <cstdint>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace renormfock {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;
// Row-major compressed storage: deterministic column order within a row.
using SpMat = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<cplx>;

// Coefficients of a one-particle vector in the weight-orthonormalized basis.
using OneParticleVector = CVec;

inline constexpr cplx kI{0.0, 1.0};

}  // namespace renormfock
