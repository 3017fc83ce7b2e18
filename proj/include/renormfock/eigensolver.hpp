#pragma once

#include <cstdint>

#include "renormfock/types.hpp"

namespace renormfock {

struct SolverOptions {
  double tol = 1e-10;
  int max_iter = 2000;
  std::uint64_t seed = 20240601;
  // Problems up to this size go straight to a dense Hermitian eigensolver.
  Eigen::Index dense_threshold = 700;
};

struct Eigenpairs {
  RVec values;
  CMat vectors;    // columns, phase-canonicalized
  RVec residuals;  // ||H x - λ x||
  int iterations = 0;
};

// Largest-magnitude component made real and positive.
void canonicalize_phase(CVec& x);
void canonicalize_phases(CMat& x);

// Lowest k eigenpairs of a Hermitian matrix. Large problems use a shifted
// inverse subspace iteration: the shift sits just below the spectrum (found by
// a short Lanczos run and confirmed by a successful sparse Cholesky), and the
// block is refined by Rayleigh–Ritz on H until every residual satisfies
// ||Hx − λx|| ≤ tol·(|λ|+1). Throws SolverError otherwise.
Eigenpairs lowest_eigenpairs(const SpMat& h, int k, const SolverOptions& opts = {});
Eigenpairs lowest_eigenpairs_dense(const CMat& h, int k);

// All eigenvalues of a Hermitian matrix, ascending.
RVec hermitian_spectrum(const CMat& h);

}  // namespace renormfock
