#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "renormfock/types.hpp"

namespace renormfock {

// Truncated occupation-number basis with a total boson cap. States are
// graded by total boson number; inside a grade they follow descending
// lexicographic order, so grade 1 lists the modes in their natural order.
// The vacuum sits at index 0.
class FockBasis {
 public:
  static constexpr std::size_t kDefaultCapacity = 4'000'000;

  FockBasis(int modes, int cap, std::size_t capacity = kDefaultCapacity);

  int modes() const { return modes_; }
  int cap() const { return cap_; }
  std::size_t dim() const { return grade_.size(); }

  std::span<const int> occupation(std::size_t index) const {
    return {occ_.data() + index * modes_, static_cast<std::size_t>(modes_)};
  }
  int grade(std::size_t index) const { return grade_[index]; }
  // First index of grade n (n in [0, cap + 1]; cap + 1 gives dim()).
  std::size_t grade_begin(int n) const { return offsets_[n]; }
  // Number of states with total boson number ≤ n.
  std::size_t dim_up_to(int n) const;

  // Inverse of occupation(); the tuple must lie inside the cap.
  std::size_t index_of(std::span<const int> occupation) const;

 private:
  std::size_t count(int bosons, int modes) const;

  int modes_;
  int cap_;
  std::vector<int> occ_;
  std::vector<int> grade_;
  std::vector<std::size_t> offsets_;
  // binom_[n][k] = C(n, k) for n ≤ cap + modes.
  std::vector<std::vector<std::size_t>> binom_;
};

using BasisPtr = std::shared_ptr<const FockBasis>;

// Checked factory; throws CapacityError when C(M+N, N) exceeds the budget.
BasisPtr enumerate_basis(int modes, int cap,
                         std::size_t capacity = FockBasis::kDefaultCapacity);

// C(n, k) with overflow detection; returns SIZE_MAX on overflow.
std::size_t binomial(int n, int k);

struct FockOperator {
  BasisPtr basis;
  SpMat matrix;
  // Offset in total boson number carried by every nonzero, when uniform.
  std::optional<int> grading;
  bool hermitian = false;

  Eigen::Index rows() const { return matrix.rows(); }
};

// a(f) = Σ conj(f_i) b_i.
FockOperator annihilator(const OneParticleVector& f, const BasisPtr& basis);
// a†(f) = Σ f_i b_i†, dropping amplitudes that would leave the cap.
FockOperator creator(const OneParticleVector& f, const BasisPtr& basis);
// dΓ(T) for a diagonal one-particle operator.
FockOperator second_quantization(const RVec& diagonal, const BasisPtr& basis);
// dΓ(T) = Σ T_ij b_i† b_j for a full one-particle matrix.
FockOperator second_quantization(const CMat& t, const BasisPtr& basis);
FockOperator number_operator(const BasisPtr& basis);
FockOperator identity_operator(const BasisPtr& basis);

// True when every nonzero maps grade n to grade n + offset.
bool respects_grading(const SpMat& m, const FockBasis& basis, int offset);

double max_abs(const SpMat& m);
double hermiticity_defect(const SpMat& m);

// Σ_{n>N} xⁿ/n!, summed directly so that tiny tails keep full precision.
double exp_series_tail(double x, int n_max);
// e^{-x} Σ_{n>N} xⁿ/n!.
double poisson_tail(double x, int n_max);
// Σ_{n≤N} xⁿ/n!.
double exp_partial_sum(double x, int n_max);

struct ExponentialVector {
  CVec vector;
  double tail_bound = 0.0;
};

// Grade-n component f^{⊗n}/√(n!), i.e. coefficient Π f_i^{n_i}/√(n_i!).
ExponentialVector exponential_vector(const OneParticleVector& f,
                                     const BasisPtr& basis);

// e^{-||g||²/2} ε(g); rescaled to unit norm on the truncated space unless
// renormalize is false. Warns when the Poisson tail exceeds tail_tolerance.
CVec coherent_state(const OneParticleVector& g, const BasisPtr& basis,
                    bool renormalize = true, double tail_tolerance = 1e-8);

CVec vacuum(const BasisPtr& basis);

// Σ_{k≤max_power} X^k/k!, stopping early once a power vanishes. Exact when
// X is nilpotent of order ≤ max_power + 1.
SpMat nilpotent_exp(const SpMat& x, int max_power);

struct Displacement {
  FockOperator op;
  // max |W†W - I| over states with grade ≤ budget.
  double unitarity_defect = 0.0;
  // Rigorous bound on the same quantity derived from the e^{a†} tail.
  double defect_bound = 0.0;
  double poisson_tail = 0.0;
  // Bounds on ||Q W∞ e_j|| for the budget block, in basis order.
  std::vector<double> leak;
};

// W(g) = e^{-||g||²/2} e^{a†(g)} e^{-a(g)}, with the raising factor
// truncated at the cap. Equals P e^{a†(g)-a(g)} P for the projection P onto
// the truncated space.
Displacement displacement(const OneParticleVector& g, const BasisPtr& basis,
                          int defect_budget = 0, double tail_tolerance = 1e-8);

// Upper bound on ||Q W∞ e_j|| for the basis state j, where W∞ is the exact
// displacement and Q projects onto grades above the cap.
double displacement_leak_bound(const OneParticleVector& g,
                               const BasisPtr& basis, std::size_t j);

// Upper bound on the grade > N part of e^{a†(g)}ψ for a vector ψ, given the
// gradewise norms of ψ: returns the per-grade norms for grades N+1, N+2, ...
// until negligible.
std::vector<double> raising_tail_norms(double gnorm,
                                       const std::vector<double>& grade_norms,
                                       int cap);

std::vector<double> grade_norms(const CVec& psi, const FockBasis& basis);
int max_grade(const CVec& psi, const FockBasis& basis, double threshold = 0.0);

}  // namespace renormfock
