#include "renormfock/doi.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "renormfock/errors.hpp"

namespace renormfock {

double normality_defect(const CMat& b) {
  return (b.adjoint() * b - b * b.adjoint()).norm();
}

bool is_normal(const CMat& b) {
  const double n = b.norm();
  return normality_defect(b) <= 1e-10 * n * n;
}

bool SpectralDecomposition::same_cluster(cplx lambda, cplx mu) const {
  return std::abs(lambda - mu) <= tol_eig * spectral_radius;
}

SpectralDecomposition spectral_decompose(const CMat& b, double tol_eig) {
  if (b.rows() != b.cols() || b.rows() == 0) throw ShapeError("B must be square");
  if (!is_normal(b)) {
    throw NormalityError("matrix is not normal: ||B*B - BB*|| = " +
                         std::to_string(normality_defect(b)) +
                         " exceeds 1e-10 ||B||^2");
  }
  const Eigen::Index n = b.rows();
  Eigen::ComplexSchur<CMat> schur(b);
  const CMat& u = schur.matrixU();
  const CMat& t = schur.matrixT();
  std::vector<cplx> lam(n);
  double radius = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    lam[i] = t(i, i);
    radius = std::max(radius, std::abs(lam[i]));
  }

  SpectralDecomposition dec;
  dec.tol_eig = tol_eig;
  dec.spectral_radius = radius;

  // Union-find over the closeness graph.
  std::vector<Eigen::Index> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](Eigen::Index i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (dec.same_cluster(lam[i], lam[j])) parent[find(i)] = find(j);

  std::vector<std::vector<Eigen::Index>> groups;
  std::vector<Eigen::Index> slot(n, -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<Eigen::Index>(groups.size());
      groups.emplace_back();
    }
    groups[slot[r]].push_back(i);
  }

  struct Cluster {
    cplx value;
    CMat proj;
  };
  std::vector<Cluster> cl;
  for (const auto& grp : groups) {
    cplx mean = 0.0;
    CMat p = CMat::Zero(n, n);
    for (Eigen::Index i : grp) {
      mean += lam[i];
      p += u.col(i) * u.col(i).adjoint();
    }
    mean /= static_cast<double>(grp.size());
    p = 0.5 * (p + p.adjoint()).eval();
    cl.push_back({mean, p});
  }
  std::sort(cl.begin(), cl.end(), [](const Cluster& a, const Cluster& c) {
    if (a.value.real() != c.value.real()) return a.value.real() < c.value.real();
    return a.value.imag() < c.value.imag();
  });
  for (auto& c : cl) {
    dec.eigenvalues.push_back(c.value);
    dec.projections.push_back(std::move(c.proj));
  }
  return dec;
}

cplx DOIKernel::operator()(cplx lambda, cplx mu) const {
  switch (kind) {
    case Kind::chi_regular: {
      const cplx e = (std::conj(lambda) * mu -
                      0.5 * (std::norm(lambda) + std::norm(mu))) * gnorm2;
      return std::exp(e);
    }
    case Kind::chi_singular:
      return std::abs(lambda - mu) <= diagonal_tol ? 1.0 : 0.0;
    case Kind::custom:
      return fn(lambda, mu);
  }
  return 0.0;
}

DOIKernel DOIKernel::chi_regular(double gnorm2) {
  DOIKernel k;
  k.kind = Kind::chi_regular;
  k.gnorm2 = gnorm2;
  return k;
}

DOIKernel DOIKernel::chi_singular(const SpectralDecomposition& dec) {
  DOIKernel k;
  k.kind = Kind::chi_singular;
  k.diagonal_tol = dec.tol_eig * dec.spectral_radius;
  return k;
}

DOIKernel DOIKernel::custom(std::function<cplx(cplx, cplx)> f) {
  DOIKernel k;
  k.kind = Kind::custom;
  k.fn = std::move(f);
  return k;
}

CMat doi_apply(const CMat& a, const SpectralDecomposition& left,
               const SpectralDecomposition& right, const DOIKernel& f) {
  if (a.rows() != left.dim() || a.cols() != right.dim()) {
    throw ShapeError("DOI operand does not match the spectral decompositions");
  }
  CMat out = CMat::Zero(a.rows(), a.cols());
  for (int i = 0; i < left.clusters(); ++i) {
    const CMat pa = left.projections[i] * a;
    for (int j = 0; j < right.clusters(); ++j) {
      const cplx w = f(left.eigenvalues[i], right.eigenvalues[j]);
      if (w == cplx(0.0)) continue;
      out += w * (pa * right.projections[j]);
    }
  }
  return out;
}

CMat doi_apply(const CMat& a, const SpectralDecomposition& dec, const DOIKernel& f) {
  return doi_apply(a, dec, dec, f);
}

DecomposabilityEstimate decomposability(const CMat& t,
                                        const SpectralDecomposition& dec1,
                                        const SpectralDecomposition& dec2,
                                        int restarts, std::uint64_t seed) {
  if (t.rows() != dec1.dim() || t.cols() != dec2.dim()) {
    throw ShapeError("operator does not match the spectral decompositions");
  }
  const int n1 = dec1.clusters(), n2 = dec2.clusters();
  std::vector<CMat> blocks;
  blocks.reserve(n1 * n2);
  double block_sum = 0.0;
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) {
      blocks.push_back(dec1.projections[i] * t * dec2.projections[j]);
      block_sum += Eigen::JacobiSVD<CMat>(blocks.back()).singularValues()(0);
    }

  DecomposabilityEstimate out;
  out.upper_bound = std::min(block_sum, t.norm());

  // Alternating ascent: for fixed vectors choose phases aligning every block
  // term, then take the top singular pair of the phased sum. The objective
  // never decreases.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(0.0, 2.0 * std::numbers::pi);
  auto objective = [&](const CVec& u, const CVec& w, std::vector<cplx>& phase) {
    double s = 0.0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const cplx c = u.dot(blocks[b] * w);
      const double a = std::abs(c);
      s += a;
      phase[b] = a > 0.0 ? std::conj(c) / a : 1.0;
    }
    return s;
  };
  std::vector<cplx> phase(blocks.size());
  for (int r = 0; r < restarts; ++r) {
    for (auto& p : phase) p = std::polar(1.0, ud(rng));
    double best = -1.0;
    for (int it = 0; it < 200; ++it) {
      CMat s = CMat::Zero(t.rows(), t.cols());
      for (std::size_t b = 0; b < blocks.size(); ++b) s += phase[b] * blocks[b];
      Eigen::JacobiSVD<CMat> svd(s, Eigen::ComputeFullU | Eigen::ComputeFullV);
      if (svd.singularValues()(0) == 0.0) break;
      const CVec u = svd.matrixU().col(0);
      const CVec w = svd.matrixV().col(0);
      const double val = objective(u, w, phase);
      out.estimate = std::max(out.estimate, val);
      if (val <= best * (1.0 + 1e-14)) break;
      best = val;
    }
  }
  return out;
}

double decomposability_norm(const CMat& t, const SpectralDecomposition& dec1,
                            const SpectralDecomposition& dec2) {
  return decomposability(t, dec1, dec2).estimate;
}

}  // namespace renormfock
