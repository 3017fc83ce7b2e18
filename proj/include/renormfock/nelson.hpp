#pragma once

#include <vector>

#include "renormfock/eigensolver.hpp"
#include "renormfock/fock.hpp"
#include "renormfock/modes.hpp"

namespace renormfock {

struct FiberModel {
  ModeSet modes;
  BasisPtr basis;
  Eigen::Vector3d P = Eigen::Vector3d::Zero();
  FormFactorSpec spec;
  OneParticleVector v;
  SpMat K;
  double E_counterterm = 0.0;
};

// K = Σ_c (P_c − dΓ(k_c))² + dΓ(ω) + a†(v) + a(v), with the self-energy of
// `spec` as counterterm. P has one entry per spatial dimension of the modes.
FiberModel assemble_fiber(const Eigen::VectorXd& P, const FormFactorSpec& spec,
                          const ModeSet& modes, const BasisPtr& basis);

// Σ_c (P_c − dΓ(k_c))² + dΓ(ω) as a diagonal.
RVec free_fiber_diagonal(const Eigen::Vector3d& P, const ModeSet& modes,
                         const FockBasis& basis);

struct DressedFiber {
  SpMat op;  // W(h)†(K − E)W(h)
  OneParticleVector h;
  double spectra_gap = 0.0;
  double tail_bound = 0.0;  // Poisson tail of ||h||² at N_max
};

// h = g_σ − g_{σ₀'}: the Gross configuration restricted to σ₀' < |k| ≤ σ.
// Throws PreconditionError naming the N_max needed when the displacement
// tail exceeds tail_tolerance.
DressedFiber dressed_fiber(const FiberModel& model, double sigma0_prime,
                           int k_compare = 4, double tail_tolerance = 1e-8,
                           const SolverOptions& opts = {});

// Smallest N with Poisson tail below tol for mean x.
int required_cap(double x, double tol);

struct FiberSweepPoint {
  double lambda0 = 0.0;      // λ₀(K) − E
  double raw_lambda0 = 0.0;  // λ₀(K)
  double counterterm = 0.0;
  double gap = 0.0;
  double num_expect = 0.0;
  double vac_overlap = 0.0;
  // |⟨x_prev, x⟩| when consecutive points share a mode set, NaN otherwise.
  double overlap_prev = 0.0;
  // Norm resolvent gap of K − E to the last point (same mode set), else NaN.
  double resolvent_gap = 0.0;
  double tail_bound = 0.0;   // Poisson tail of the Gross configuration
  int dim = 0;
};

std::vector<FiberSweepPoint> fiber_ir_sweep(const Eigen::VectorXd& P,
                                            const std::vector<FormFactorSpec>& specs,
                                            const std::vector<ModeSet>& modes,
                                            int nmax, const SolverOptions& opts = {},
                                            cplx z = kI);

bool same_modes(const ModeSet& a, const ModeSet& b);

}  // namespace renormfock
