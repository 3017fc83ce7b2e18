#pragma once

#include <cstdint>
#include <vector>

#include "renormfock/dressing.hpp"
#include "renormfock/doi.hpp"
#include "renormfock/eigensolver.hpp"
#include "renormfock/modes.hpp"

namespace renormfock {

// Spin ⊗ Fock states use the index spin * dim(F) + fock.
struct SpinSpace {
  int dim = 0;
  CMat A;
  CMat B;
  SpectralDecomposition dec_B;
};

inline constexpr int kDefaultSpinCap = 8;

// Validates A Hermitian (1e-12) and B normal (1e-10), then decomposes B.
SpinSpace make_spin_space(const CMat& a, const CMat& b, int spin_cap = kDefaultSpinCap,
                          double tol_eig = 1e-9);

CMat pauli_x();
CMat pauli_y();
CMat pauli_z();

// S ⊗ F for a small dense spin factor and a sparse Fock factor.
SpMat kron(const CMat& s, const SpMat& f);

// H(B,v) = A⊗I + I⊗dΓ(ω) + B⊗a†(v) + B†⊗a(v).
SpMat assemble_sb(const SpinSpace& spin, const OneParticleVector& v,
                  const ModeSet& modes, const BasisPtr& basis);

// e^{B†⊗a(g)} = Σ_k (B†)^k ⊗ a(g)^k / k!.
SpMat sb_dress_lower(const SpinSpace& spin, const OneParticleVector& g,
                     const BasisPtr& basis);
// e^{B†⊗a(g - g2)}: the matrix of U_{B,g,g2}.
SpMat sb_transfer(const SpinSpace& spin, const OneParticleVector& g,
                  const OneParticleVector& g2, const BasisPtr& basis);
RenormMetric sb_metric(const SpinSpace& spin, const OneParticleVector& g,
                       const BasisPtr& basis);

enum class ChiKind { regular, singular };

struct RenormSpinMatrix {
  CMat form;  // M with 𝔞^ren(Ψ,Φ) = Ψ† M Φ
  CMat op;    // G^{-1} M, the operator on 𝓑_{B,g}
};

RenormSpinMatrix renorm_spin_matrix(const SpinSpace& spin, const OneParticleVector& g,
                                    ChiKind kind, const BasisPtr& basis,
                                    const RenormMetric& metric);

// D^{-1}(T⊗I)D with D = e^{B†⊗a(g)}.
CMat dressed_diag(const SpinSpace& spin, const CMat& t, const OneParticleVector& g,
                  const BasisPtr& basis);

struct RenormalizedSb {
  CMat op;       // H_ren(B,v)_g on 𝓑_{B,g}
  CMat form;     // G · op
  CMat dressed;  // I⊗dΓ(ω) + D^{-†} M D^{-1}, Hermitian on 𝓑₀
  RenormMetric metric;
  RVec spectrum;          // whitened op, ascending
  RVec dressed_spectrum;  // ascending
};

RenormalizedSb renormalized_sb(const SpinSpace& spin, const ModeSet& modes,
                               const OneParticleVector& g, ChiKind kind,
                               const BasisPtr& basis);

struct EnergyRenormRow {
  double lambda0 = 0.0;
  double resolvent_gap = 0.0;
};

struct EnergyRenormTable {
  std::vector<EnergyRenormRow> rows;
  bool monotone = true;
};

// H(B,v_α) + ||v_α/√ω||²·(B†B⊗I) for every α; norm resolvent gaps at z are
// measured against the last element.
EnergyRenormTable energy_renorm_sb(const SpinSpace& spin,
                                   const std::vector<OneParticleVector>& v_sequence,
                                   const ModeSet& modes, const BasisPtr& basis,
                                   cplx z = kI);

struct PerturbationBound {
  double gap = 0.0;
  double bound = 0.0;
  // bound / ||v1 - v2||
  double constant = 0.0;
};

// Resolvent gap between two energy-renormalized Hamiltonians and the first
// order bound ||ΔH|| / |Im z|².
PerturbationBound energy_renorm_perturbation(const SpinSpace& spin,
                                             const OneParticleVector& v1,
                                             const OneParticleVector& v2,
                                             const ModeSet& modes,
                                             const BasisPtr& basis, cplx z = kI);

struct PullThroughResult {
  std::vector<double> residuals;
  double max_residual = 0.0;
  double pair_residual = 0.0;  // ||HΨ - λ₀Ψ||
  double top_grade_weight = 0.0;  // ||Ψ_N||
  double constant = 0.0;       // C in max r ≤ C·(pair residual + ||Ψ_N||)
  double bound = 0.0;
};

// r_i = ||b_iΨ + v_i (H − λ₀ + ω_i)^{-1}(B⊗I)Ψ||.
PullThroughResult pull_through_residual(const SpinSpace& spin,
                                        const OneParticleVector& v,
                                        const ModeSet& modes, const BasisPtr& basis,
                                        double lambda0, const CVec& psi,
                                        double pair_tol = 1e-8);

struct IdentityDefects {
  double number = 0.0;    // dΓ(ω) past e^{B⊗a†(g)}
  double coupling = 0.0;  // field term past e^{B⊗a†(g)}
  double exchange = 0.0;  // e^{B†⊗a(g)} e^{B⊗a†(g)} reordering
  int padding = 0;        // extra grades of the working basis for `exchange`
};

// Checks the three commutation identities on random vectors supported on
// grades ≤ N_max − 2; outputs are compared on grades where the truncated
// computation is exact (the reordering identity is computed on a padded
// working basis and compared on grades ≤ N_max).
IdentityDefects sb_commutation_identities(const SpinSpace& spin,
                                          const OneParticleVector& v,
                                          const OneParticleVector& g,
                                          const ModeSet& modes, const BasisPtr& basis,
                                          std::uint64_t seed = 99);

// φ_{B,g}(f) = U_{B,0,g}(I⊗φ₀(f) + √2 Re⟨g,f⟩ B†B⊗I)U_{B,g,0}; the momentum
// field uses Im⟨g,f⟩ and π₀.
CMat sb_interacting_field(const SpinSpace& spin, const OneParticleVector& g,
                          const OneParticleVector& f, FieldKind kind,
                          const BasisPtr& basis);

// ⟨Ψ,Φ⟩_{B,g} against ⟨S e^{B⊗a†(g)}Ψ, S e^{B⊗a†(g)}Φ⟩ with
// S = e^{−½B†B||g||²}⊗I, on inputs of grade ≤ N_max/2.
MollifiedCheck sb_mollified_inner_check(const CVec& psi, const CVec& phi,
                                        const SpinSpace& spin,
                                        const OneParticleVector& g,
                                        const RenormMetric& metric,
                                        const BasisPtr& basis);

// Random unit vector on spin ⊗ (grades ≤ max_grade).
CVec random_sb_vector(int spin_dim, const FockBasis& basis, int max_grade,
                      std::uint64_t seed);

}  // namespace renormfock
