#pragma once

#include <limits>
#include <string>
#include <vector>

#include "renormfock/types.hpp"

namespace renormfock {

enum class GridKind { linear, logarithmic, custom };

// Discretized one-particle momentum space. Nodes are stored as 3-vectors;
// unused components are zero. On isotropic radial grids (dimension 3,
// radial == true) only the first component is used and holds |k|.
struct ModeSet {
  int dimension = 1;
  std::vector<Eigen::Vector3d> nodes;
  std::vector<double> weights;
  double mass = 0.0;
  GridKind kind = GridKind::custom;
  bool radial = false;

  int size() const { return static_cast<int>(nodes.size()); }
  double knorm(int i) const { return nodes[i].norm(); }
  double omega(int i) const;
  RVec omegas() const;
  RVec knorms() const;
  // Component c of every node momentum (the one-particle symbol of dΓ(k_c)).
  RVec momentum_component(int c) const;
};

// Throws ConfigError on empty sets, nonpositive weights, duplicate nodes,
// negative mass or a dimension outside {1, 3}.
void validate(const ModeSet& modes);

// Cell-centred grids. Log cells use geometric midpoints; weights are exact
// cell measures (interval length in d=1, shell volume in d=3).
ModeSet radial_grid(GridKind kind, int nodes, double k_min, double k_max,
                    double mass);
ModeSet signed_grid_1d(GridKind kind, int nodes_per_side, double k_min,
                       double k_max, double mass);
// Uniform cube [-k_max, k_max]^3 with an even number of cells per axis, so
// that no node sits at k = 0.
ModeSet product_grid_3d(int cells_per_axis, double k_max, double mass);
ModeSet custom_grid(int dimension, std::vector<Eigen::Vector3d> nodes,
                    std::vector<double> weights, double mass,
                    bool radial = false);

std::string to_string(GridKind kind);

enum class FormFactorKind { nelson_sharp, weisskopf_wigner, custom_table };

struct FormFactorSpec {
  FormFactorKind kind = FormFactorKind::nelson_sharp;
  double sigma = std::numeric_limits<double>::infinity();
  double sigma0 = 0.0;
  double coupling = 1.0;
  // Values of v at the nodes, used by custom_table only.
  std::vector<double> table;
};

void validate(const FormFactorSpec& spec);
std::string to_string(FormFactorKind kind);

// Pointwise form factor v(k) for the analytic kinds, including the cutoff
// window σ₀ ≤ |k| ≤ σ and the coupling.
double form_factor_value(const FormFactorSpec& spec, double k, double mass);

OneParticleVector sample_form_factor(const FormFactorSpec& spec,
                                     const ModeSet& modes);

// g = -v/ω.
OneParticleVector vhm_ground_config(const OneParticleVector& v,
                                    const ModeSet& modes);

// g = -v/(ω + |k|²).
OneParticleVector gross_config(const OneParticleVector& v,
                               const ModeSet& modes);

// ||v/√ω||² on the grid.
double infrared_norm2(const OneParticleVector& v, const ModeSet& modes);

// Self-energy counterterm by adaptive quadrature, independent of any grid.
// d = 3 uses the radial measure 4πk²dk, d = 1 integrates both signs of k.
double self_energy(const FormFactorSpec& spec, int dimension, double mass);
double self_energy(const FormFactorSpec& spec, const ModeSet& modes);

}  // namespace renormfock
