#include "renormfock/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "renormfock/errors.hpp"

namespace renormfock {

void canonicalize_phase(CVec& x) {
  if (x.size() == 0) return;
  Eigen::Index imax = 0;
  double amax = -1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    // Ties resolve to the lowest index; tiny relative differences count as ties
    // so that rounding cannot flip the choice.
    const double a = std::abs(x[i]);
    if (a > amax * (1.0 + 1e-9)) {
      amax = a;
      imax = i;
    }
  }
  if (amax <= 0.0) return;
  const cplx phase = std::conj(x[imax]) / amax;
  x *= phase;
  x[imax] = cplx(x[imax].real(), 0.0);
}

void canonicalize_phases(CMat& x) {
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    CVec c = x.col(j);
    canonicalize_phase(c);
    x.col(j) = c;
  }
}

RVec hermitian_spectrum(const CMat& h) {
  const CMat sym = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

Eigenpairs lowest_eigenpairs_dense(const CMat& h, int k) {
  if (h.rows() != h.cols()) throw ShapeError("eigenproblem matrix must be square");
  if (k < 1) throw PreconditionError("k_lowest must be at least 1");
  k = std::min<int>(k, static_cast<int>(h.rows()));
  const CMat sym = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(sym);
  if (es.info() != Eigen::Success) throw SolverError("dense eigensolver failed");
  Eigenpairs out;
  out.values = es.eigenvalues().head(k);
  out.vectors = es.eigenvectors().leftCols(k);
  canonicalize_phases(out.vectors);
  out.residuals.resize(k);
  for (int j = 0; j < k; ++j) {
    out.residuals[j] = (h * out.vectors.col(j) - out.values[j] * out.vectors.col(j)).norm();
  }
  return out;
}

namespace {

using ColSp = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;

CMat random_block(Eigen::Index n, Eigen::Index p, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CMat x(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = cplx(nd(rng), nd(rng));
  return x;
}

// Orthonormal basis of the column span, twice-applied Householder for safety.
CMat orthonormalize(const CMat& x) {
  Eigen::HouseholderQR<CMat> qr(x);
  CMat q = qr.householderQ() * CMat::Identity(x.rows(), x.cols());
  Eigen::HouseholderQR<CMat> qr2(q);
  return qr2.householderQ() * CMat::Identity(x.rows(), x.cols());
}

// A few Lanczos steps give extreme Ritz values of H.
std::pair<double, double> lanczos_bounds(const SpMat& h, std::mt19937_64& rng,
                                         int steps) {
  const Eigen::Index n = h.rows();
  steps = static_cast<int>(std::min<Eigen::Index>(steps, n));
  CMat v(n, steps + 1);
  RVec alpha(steps), beta(steps);
  CVec q = random_block(n, 1, rng).col(0);
  q.normalize();
  v.col(0) = q;
  int m = 0;
  for (int j = 0; j < steps; ++j) {
    CVec w = h * v.col(j);
    alpha[j] = v.col(j).dot(w).real();
    // Full reorthogonalization; the run is short.
    for (int pass = 0; pass < 2; ++pass) {
      w -= v.leftCols(j + 1) * (v.leftCols(j + 1).adjoint() * w);
    }
    beta[j] = w.norm();
    m = j + 1;
    if (beta[j] < 1e-12 * (std::abs(alpha[j]) + 1.0)) break;
    v.col(j + 1) = w / beta[j];
  }
  RMat t = RMat::Zero(m, m);
  for (int j = 0; j < m; ++j) {
    t(j, j) = alpha[j];
    if (j + 1 < m) t(j, j + 1) = t(j + 1, j) = beta[j];
  }
  Eigen::SelfAdjointEigenSolver<RMat> es(t, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

}  // namespace

Eigenpairs lowest_eigenpairs(const SpMat& h, int k, const SolverOptions& opts) {
  const Eigen::Index n = h.rows();
  if (h.cols() != n) throw ShapeError("eigenproblem matrix must be square");
  if (k < 1) throw PreconditionError("k_lowest must be at least 1");
  if (n <= opts.dense_threshold || k * 4 >= n) {
    return lowest_eigenpairs_dense(CMat(h), k);
  }

  std::mt19937_64 rng(opts.seed);
  const auto [theta_lo, theta_hi] = lanczos_bounds(h, rng, 60);
  const double spread = std::max(theta_hi - theta_lo, 1e-12);

  // Move the shift down until H - σ is positive definite.
  ColSp hc = h;
  ColSp id(n, n);
  id.setIdentity();
  double delta = std::max(1e-6 * (std::abs(theta_lo) + 1.0), 1e-3 * spread);
  Eigen::SimplicialLLT<ColSp, Eigen::Lower> llt;
  double sigma = 0.0;
  bool factored = false;
  for (int attempt = 0; attempt < 60; ++attempt) {
    sigma = theta_lo - delta;
    llt.compute(hc - sigma * id);
    if (llt.info() == Eigen::Success) {
      factored = true;
      break;
    }
    delta *= 4.0;
  }
  if (!factored) throw SolverError("could not find a shift below the spectrum");

  const int guard = std::max(4, k);
  const Eigen::Index p = std::min<Eigen::Index>(n, k + guard);
  CMat x = orthonormalize(random_block(n, p, rng));
  Eigenpairs out;
  RVec res(k);
  for (int it = 1; it <= opts.max_iter; ++it) {
    CMat y(n, p);
    for (Eigen::Index j = 0; j < p; ++j) y.col(j) = llt.solve(x.col(j));
    x = orthonormalize(y);
    const CMat hx = h * x;
    CMat proj = x.adjoint() * hx;
    proj = 0.5 * (proj + proj.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMat> es(proj);
    x = x * es.eigenvectors();
    const CMat hxr = hx * es.eigenvectors();
    bool done = true;
    for (int j = 0; j < k; ++j) {
      const double lam = es.eigenvalues()[j];
      res[j] = (hxr.col(j) - lam * x.col(j)).norm();
      if (res[j] > opts.tol * (std::abs(lam) + 1.0)) done = false;
    }
    if (done) {
      out.values = es.eigenvalues().head(k);
      out.vectors = x.leftCols(k);
      canonicalize_phases(out.vectors);
      out.residuals.resize(k);
      for (int j = 0; j < k; ++j) {
        out.residuals[j] =
            (h * out.vectors.col(j) - out.values[j] * out.vectors.col(j)).norm();
      }
      out.iterations = it;
      return out;
    }
  }
  std::ostringstream os;
  os << "eigensolver did not converge in " << opts.max_iter
     << " iterations; residuals:";
  for (int j = 0; j < k; ++j) os << ' ' << res[j];
  throw SolverError(os.str());
}

}  // namespace renormfock
