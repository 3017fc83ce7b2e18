#pragma once

#include <cstddef>
#include <vector>

#include "renormfock/fock.hpp"

namespace renormfock {

// Operators on different spaces, each carried into a common parent space by
// an isometric embedding ι (ι†ι = I). Members are Hermitian in the standard
// metric of their own space; renormalized operators are transported there
// before they are added.
class EmbeddedOperatorFamily {
 public:
  explicit EmbeddedOperatorFamily(Eigen::Index parent_dim) : parent_dim_(parent_dim) {}

  // Returns the member index. Throws ShapeError on size mismatch and
  // PreconditionError when ι is not an isometry to 1e-12 or the operator is
  // not Hermitian.
  std::size_t add(const CMat& op, const CMat& embedding);
  // Members on the parent space itself, or on a prefix of it (nested Fock
  // bases), use the identity-prefix embedding.
  std::size_t add(const CMat& op);

  void set_limit(std::size_t index);
  std::size_t limit() const;
  std::size_t size() const { return ops_.size(); }
  Eigen::Index parent_dim() const { return parent_dim_; }

  const CMat& op(std::size_t i) const { return ops_[i]; }
  const CMat& embedding(std::size_t i) const { return emb_[i]; }

  // ι (T + z)^{-1} ι†.
  CMat embedded_resolvent(std::size_t i, cplx z) const;

 private:
  Eigen::Index parent_dim_;
  std::vector<CMat> ops_;
  std::vector<CMat> emb_;
  std::vector<RVec> spectra_;
  std::size_t limit_ = static_cast<std::size_t>(-1);
};

enum class DistanceMode { norm, strong };

// Distance of every member's embedded resolvent to the limit member's:
// spectral norm of the difference, or the largest difference over unit
// probe vectors. Throws ShiftError when z is real and within 1e-12 of a
// member's spectrum.
std::vector<double> resolvent_distance(const EmbeddedOperatorFamily& family, cplx z,
                                       DistanceMode mode = DistanceMode::norm,
                                       const std::vector<CVec>& probes = {});

struct RateFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double residual = 0.0;  // RMS of log residuals
  int points = 0;
};

// Least squares of log d against log h on positive pairs; FitError with
// fewer than three.
RateFit rate_fit(const std::vector<double>& distances,
                 const std::vector<double>& parameters);

// Γ(J) between truncated Fock spaces for a mode map J (fine × coarse).
// For an isometric J and equal caps the result is an isometry.
CMat fock_embedding(const FockBasis& coarse, const FockBasis& fine, const CMat& j);

// Ω, the one-boson states and, if g is nonempty, the coherent state c_g.
std::vector<CVec> default_probes(const BasisPtr& basis, const OneParticleVector& g = {});

}  // namespace renormfock
