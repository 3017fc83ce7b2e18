#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "renormfock/types.hpp"

namespace renormfock {

struct SpectralDecomposition {
  std::vector<cplx> eigenvalues;  // one per cluster
  std::vector<CMat> projections;  // orthogonal projections, same order
  double tol_eig = 1e-9;
  double spectral_radius = 0.0;

  int clusters() const { return static_cast<int>(eigenvalues.size()); }
  Eigen::Index dim() const { return projections.empty() ? 0 : projections[0].rows(); }
  // |λ - μ| ≤ tol_eig·spectral_radius
  bool same_cluster(cplx lambda, cplx mu) const;
};

// Eigenprojections of a normal matrix. Eigenvalues within
// tol_eig·spectral_radius of each other share a projection.
SpectralDecomposition spectral_decompose(const CMat& b, double tol_eig = 1e-9);

double normality_defect(const CMat& b);
bool is_normal(const CMat& b);

struct DOIKernel {
  enum class Kind { chi_regular, chi_singular, custom };
  Kind kind = Kind::custom;
  double gnorm2 = 0.0;
  // Absolute diagonal tolerance for chi_singular.
  double diagonal_tol = 0.0;
  std::function<cplx(cplx, cplx)> fn;

  cplx operator()(cplx lambda, cplx mu) const;

  // e^{(conj(λ)μ - (|λ|²+|μ|²)/2)·gnorm2}
  static DOIKernel chi_regular(double gnorm2);
  // Diagonal indicator with the decomposition's clustering tolerance.
  static DOIKernel chi_singular(const SpectralDecomposition& dec);
  static DOIKernel custom(std::function<cplx(cplx, cplx)> f);
};

// Σ_{i,j} f(λ_i, λ_j) Π_i A Π_j over the clusters of one decomposition.
CMat doi_apply(const CMat& a, const SpectralDecomposition& dec, const DOIKernel& f);
// Two-measure version Σ f(λ_i, μ_j) P_i A Q_j.
CMat doi_apply(const CMat& a, const SpectralDecomposition& left,
               const SpectralDecomposition& right, const DOIKernel& f);

struct DecomposabilityEstimate {
  // Best value of Σ_{ij}|⟨P_iψ₁, T Q_jψ₂⟩| found over unit vectors; a lower
  // estimate of the total-variation norm.
  double estimate = 0.0;
  // min(Σ_{ij}||P_i T Q_j||, ||T||_HS), an upper bound.
  double upper_bound = 0.0;
};

DecomposabilityEstimate decomposability(const CMat& t,
                                        const SpectralDecomposition& dec1,
                                        const SpectralDecomposition& dec2,
                                        int restarts = 16,
                                        std::uint64_t seed = 7);

double decomposability_norm(const CMat& t, const SpectralDecomposition& dec1,
                            const SpectralDecomposition& dec2);

}  // namespace renormfock
