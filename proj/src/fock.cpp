#include "renormfock/fock.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "renormfock/errors.hpp"

namespace renormfock {

std::size_t binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::size_t r = 1;
  for (int i = 1; i <= k; ++i) {
    // r * (n - k + i) / i stays integral at every step.
    const std::size_t num = static_cast<std::size_t>(n - k + i);
    if (r > std::numeric_limits<std::size_t>::max() / num) {
      return std::numeric_limits<std::size_t>::max();
    }
    r = r * num / i;
  }
  return r;
}

FockBasis::FockBasis(int modes, int cap, std::size_t capacity)
    : modes_(modes), cap_(cap) {
  if (modes < 1) throw ConfigError("a Fock basis needs at least one mode");
  if (cap < 0) throw ConfigError("boson cap must be nonnegative");
  const std::size_t d = binomial(modes + cap, cap);
  if (d > capacity) {
    std::ostringstream os;
    os << "Fock dimension C(" << modes + cap << ", " << cap << ") = ";
    if (d == std::numeric_limits<std::size_t>::max()) {
      os << "overflow";
    } else {
      os << d;
    }
    os << " exceeds the capacity budget of " << capacity << " states";
    throw CapacityError(os.str());
  }

  const int top = modes + cap;
  binom_.assign(top + 1, std::vector<std::size_t>(top + 1, 0));
  for (int n = 0; n <= top; ++n) {
    binom_[n][0] = 1;
    for (int k = 1; k <= n; ++k) binom_[n][k] = binom_[n - 1][k - 1] + binom_[n - 1][k];
  }

  occ_.reserve(d * modes);
  grade_.reserve(d);
  offsets_.assign(cap + 2, 0);
  std::vector<int> cur(modes, 0);
  // Descending lexicographic compositions of n into `modes` parts.
  auto emit = [&](auto&& self, int pos, int remaining, int n) -> void {
    if (pos == modes - 1) {
      cur[pos] = remaining;
      occ_.insert(occ_.end(), cur.begin(), cur.end());
      grade_.push_back(n);
      return;
    }
    for (int v = remaining; v >= 0; --v) {
      cur[pos] = v;
      self(self, pos + 1, remaining - v, n);
    }
  };
  for (int n = 0; n <= cap; ++n) {
    offsets_[n] = grade_.size();
    emit(emit, 0, n, n);
  }
  offsets_[cap + 1] = grade_.size();
}

std::size_t FockBasis::count(int bosons, int modes) const {
  if (bosons < 0) return 0;
  if (modes == 0) return bosons == 0 ? 1 : 0;
  return binom_[bosons + modes - 1][modes - 1];
}

std::size_t FockBasis::dim_up_to(int n) const {
  if (n < 0) return 0;
  return offsets_[std::min(n, cap_) + 1];
}

std::size_t FockBasis::index_of(std::span<const int> occupation) const {
  if (static_cast<int>(occupation.size()) != modes_) {
    throw ShapeError("occupation tuple has the wrong length");
  }
  int n = 0;
  for (int v : occupation) {
    if (v < 0) throw ShapeError("negative occupation");
    n += v;
  }
  if (n > cap_) throw ShapeError("occupation tuple exceeds the boson cap");
  std::size_t rank = 0;
  int rem = n;
  for (int i = 0; i + 1 < modes_; ++i) {
    const int v = occupation[i];
    // Tuples sharing the prefix but larger at position i come first.
    rank += count(rem - v - 1, modes_ - i);
    rem -= v;
  }
  return offsets_[n] + rank;
}

BasisPtr enumerate_basis(int modes, int cap, std::size_t capacity) {
  return std::make_shared<const FockBasis>(modes, cap, capacity);
}

namespace {

void check_length(const OneParticleVector& f, const FockBasis& basis) {
  if (f.size() != basis.modes()) {
    throw ShapeError("one-particle vector has " + std::to_string(f.size()) +
                     " entries for " + std::to_string(basis.modes()) + " modes");
  }
}

SpMat from_triplets(std::size_t n, const std::vector<Triplet>& t) {
  SpMat m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

}  // namespace

FockOperator annihilator(const OneParticleVector& f, const BasisPtr& basis) {
  check_length(f, *basis);
  const auto& b = *basis;
  std::vector<Triplet> t;
  std::vector<int> occ(b.modes());
  for (std::size_t j = 0; j < b.dim(); ++j) {
    const auto o = b.occupation(j);
    for (int i = 0; i < b.modes(); ++i) {
      if (o[i] == 0 || f[i] == cplx(0.0)) continue;
      occ.assign(o.begin(), o.end());
      --occ[i];
      t.emplace_back(b.index_of(occ), j, std::conj(f[i]) * std::sqrt(double(o[i])));
    }
  }
  return {basis, from_triplets(b.dim(), t), -1, false};
}

FockOperator creator(const OneParticleVector& f, const BasisPtr& basis) {
  check_length(f, *basis);
  const auto& b = *basis;
  std::vector<Triplet> t;
  std::vector<int> occ(b.modes());
  for (std::size_t j = 0; j < b.grade_begin(b.cap()); ++j) {
    const auto o = b.occupation(j);
    for (int i = 0; i < b.modes(); ++i) {
      if (f[i] == cplx(0.0)) continue;
      occ.assign(o.begin(), o.end());
      ++occ[i];
      t.emplace_back(b.index_of(occ), j, f[i] * std::sqrt(double(o[i] + 1)));
    }
  }
  return {basis, from_triplets(b.dim(), t), +1, false};
}

FockOperator second_quantization(const RVec& diagonal, const BasisPtr& basis) {
  const auto& b = *basis;
  if (diagonal.size() != b.modes()) throw ShapeError("dGamma symbol has the wrong length");
  std::vector<Triplet> t;
  t.reserve(b.dim());
  for (std::size_t j = 0; j < b.dim(); ++j) {
    const auto o = b.occupation(j);
    double e = 0.0;
    for (int i = 0; i < b.modes(); ++i) e += diagonal[i] * o[i];
    t.emplace_back(j, j, e);
  }
  return {basis, from_triplets(b.dim(), t), 0, true};
}

FockOperator second_quantization(const CMat& tm, const BasisPtr& basis) {
  const auto& b = *basis;
  if (tm.rows() != tm.cols()) throw ShapeError("dGamma symbol must be square");
  if (tm.rows() != b.modes()) throw ShapeError("dGamma symbol has the wrong size");
  std::vector<Triplet> t;
  std::vector<int> occ(b.modes());
  for (std::size_t j = 0; j < b.dim(); ++j) {
    const auto o = b.occupation(j);
    for (int jm = 0; jm < b.modes(); ++jm) {
      if (o[jm] == 0) continue;
      for (int i = 0; i < b.modes(); ++i) {
        const cplx tij = tm(i, jm);
        if (tij == cplx(0.0)) continue;
        occ.assign(o.begin(), o.end());
        --occ[jm];
        ++occ[i];
        t.emplace_back(b.index_of(occ), j,
                       tij * std::sqrt(double(o[jm]) * double(occ[i])));
      }
    }
  }
  const bool herm = (tm - tm.adjoint()).cwiseAbs().maxCoeff() <=
                    1e-12 * std::max(1.0, tm.cwiseAbs().maxCoeff());
  return {basis, from_triplets(b.dim(), t), 0, herm};
}

FockOperator number_operator(const BasisPtr& basis) {
  return second_quantization(RVec(RVec::Ones(basis->modes())), basis);
}

FockOperator identity_operator(const BasisPtr& basis) {
  SpMat m(basis->dim(), basis->dim());
  m.setIdentity();
  return {basis, m, 0, true};
}

bool respects_grading(const SpMat& m, const FockBasis& basis, int offset) {
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    for (SpMat::InnerIterator it(m, r); it; ++it) {
      if (it.value() == cplx(0.0)) continue;
      if (basis.grade(it.row()) - basis.grade(it.col()) != offset) return false;
    }
  }
  return true;
}

double max_abs(const SpMat& m) {
  double r = 0.0;
  for (Eigen::Index k = 0; k < m.nonZeros(); ++k) r = std::max(r, std::abs(m.valuePtr()[k]));
  return r;
}

double hermiticity_defect(const SpMat& m) {
  const SpMat d = m - SpMat(m.adjoint());
  return max_abs(d);
}

double exp_series_tail(double x, int n_max) {
  if (x <= 0.0) return 0.0;
  // Start at the first omitted term and sum until the terms stop mattering.
  double log_term = (n_max + 1) * std::log(x) - std::lgamma(n_max + 2.0);
  double term = std::exp(log_term);
  double s = 0.0;
  for (int n = n_max + 1; n < n_max + 100000; ++n) {
    s += term;
    term *= x / (n + 1);
    if (term <= s * 1e-18 || term == 0.0) break;
  }
  return s;
}

double poisson_tail(double x, int n_max) {
  if (x <= 0.0) return 0.0;
  if (x > 600.0) return exp_series_tail(x, n_max) * std::exp(-x);
  return std::exp(-x) * exp_series_tail(x, n_max);
}

double exp_partial_sum(double x, int n_max) {
  double term = 1.0, s = 1.0;
  for (int n = 1; n <= n_max; ++n) {
    term *= x / n;
    s += term;
  }
  return s;
}

ExponentialVector exponential_vector(const OneParticleVector& f,
                                     const BasisPtr& basis) {
  check_length(f, *basis);
  const auto& b = *basis;
  CVec psi(b.dim());
  for (std::size_t j = 0; j < b.dim(); ++j) {
    const auto o = b.occupation(j);
    cplx c = 1.0;
    for (int i = 0; i < b.modes(); ++i) {
      if (o[i] == 0) continue;
      c *= std::pow(f[i], o[i]) / std::sqrt(std::tgamma(o[i] + 1.0));
    }
    psi[j] = c;
  }
  return {psi, exp_series_tail(f.squaredNorm(), b.cap())};
}

CVec vacuum(const BasisPtr& basis) {
  CVec v = CVec::Zero(basis->dim());
  v[0] = 1.0;
  return v;
}

CVec coherent_state(const OneParticleVector& g, const BasisPtr& basis,
                    bool renormalize, double tail_tolerance) {
  const double x = g.squaredNorm();
  const double tail = poisson_tail(x, basis->cap());
  if (tail > tail_tolerance) {
    std::ostringstream os;
    os << "coherent state with ||g||^2 = " << x << " loses " << tail
       << " of its norm at N_max = " << basis->cap();
    warn(os.str());
  }
  CVec c = exponential_vector(g, basis).vector * std::exp(-0.5 * x);
  if (renormalize) c.normalize();
  return c;
}

SpMat nilpotent_exp(const SpMat& x, int max_power) {
  SpMat sum(x.rows(), x.cols());
  sum.setIdentity();
  SpMat term = sum;
  for (int k = 1; k <= max_power; ++k) {
    term = SpMat(term * x) / double(k);
    term.prune(cplx(0.0), 0.0);
    if (term.nonZeros() == 0) break;
    sum += term;
  }
  sum.makeCompressed();
  return sum;
}

std::vector<double> grade_norms(const CVec& psi, const FockBasis& basis) {
  std::vector<double> out(basis.cap() + 1, 0.0);
  for (int n = 0; n <= basis.cap(); ++n) {
    const auto a = static_cast<Eigen::Index>(basis.grade_begin(n));
    const auto e = static_cast<Eigen::Index>(basis.grade_begin(n + 1));
    out[n] = psi.segment(a, e - a).norm();
  }
  return out;
}

int max_grade(const CVec& psi, const FockBasis& basis, double threshold) {
  int g = -1;
  for (Eigen::Index j = 0; j < psi.size(); ++j) {
    if (std::abs(psi[j]) > threshold) g = std::max(g, basis.grade(j));
  }
  return g;
}

std::vector<double> raising_tail_norms(double gnorm,
                                       const std::vector<double>& norms,
                                       int cap) {
  std::vector<double> out;
  if (gnorm == 0.0) return out;
  const double lg = std::log(gnorm);
  double peak = 0.0;
  for (int n = cap + 1; n < cap + 4000; ++n) {
    double s = 0.0;
    for (int m = 0; m < static_cast<int>(norms.size()) && m <= cap; ++m) {
      if (norms[m] == 0.0) continue;
      const int k = n - m;
      // ||a†(g)^k y_m|| / k! ≤ ||g||^k √(n!/m!) / k! · ||y_m||.
      const double lt = k * lg - std::lgamma(k + 1.0) +
                        0.5 * (std::lgamma(n + 1.0) - std::lgamma(m + 1.0)) +
                        std::log(norms[m]);
      s += std::exp(lt);
    }
    out.push_back(s);
    peak = std::max(peak, s);
    if (n > cap + 4 && s <= peak * 1e-20) break;
  }
  return out;
}

double displacement_leak_bound(const OneParticleVector& g,
                               const BasisPtr& basis, std::size_t j) {
  const double x = g.squaredNorm();
  if (x == 0.0) return 0.0;
  const SpMat down = nilpotent_exp(-annihilator(g, basis).matrix, basis->cap());
  CVec e = CVec::Zero(basis->dim());
  e[static_cast<Eigen::Index>(j)] = 1.0;
  const CVec y = down * e;
  const auto tail = raising_tail_norms(std::sqrt(x), grade_norms(y, *basis), basis->cap());
  double s2 = 0.0;
  for (double t : tail) s2 += t * t;
  return std::exp(-0.5 * x) * std::sqrt(s2);
}

Displacement displacement(const OneParticleVector& g, const BasisPtr& basis,
                          int defect_budget, double tail_tolerance) {
  check_length(g, *basis);
  const auto& b = *basis;
  const double x = g.squaredNorm();
  Displacement out;
  out.poisson_tail = poisson_tail(x, b.cap());
  if (out.poisson_tail > tail_tolerance) {
    std::ostringstream os;
    os << "displacement with ||g||^2 = " << x << " has Poisson tail "
       << out.poisson_tail << " at N_max = " << b.cap();
    warn(os.str());
  }
  const SpMat up = nilpotent_exp(creator(g, basis).matrix, b.cap());
  const SpMat down = nilpotent_exp(-annihilator(g, basis).matrix, b.cap());
  SpMat w = SpMat(up * down) * std::exp(-0.5 * x);
  w.makeCompressed();
  out.op = {basis, w, std::nullopt, false};

  const std::size_t k = b.dim_up_to(std::max(0, defect_budget));
  std::vector<CVec> cols(k);
  std::vector<double> leak(k);
  const double gn = std::sqrt(x);
  for (std::size_t j = 0; j < k; ++j) {
    CVec e = CVec::Zero(b.dim());
    e[j] = 1.0;
    cols[j] = w * e;
    if (x > 0.0) {
      const CVec y = down * e;
      double s2 = 0.0;
      for (double t : raising_tail_norms(gn, grade_norms(y, b), b.cap())) s2 += t * t;
      leak[j] = std::exp(-0.5 * x) * std::sqrt(s2);
    } else {
      leak[j] = 0.0;
    }
  }
  double defect = 0.0, bound = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const cplx v = cols[i].dot(cols[j]) - (i == j ? 1.0 : 0.0);
      defect = std::max(defect, std::abs(v));
      const double slack = 8.0 * std::numeric_limits<double>::epsilon() *
                           (8.0 + std::sqrt(double(b.dim()))) * cols[i].norm() *
                           cols[j].norm();
      bound = std::max(bound, leak[i] * leak[j] + slack);
    }
  }
  out.leak = leak;
  out.unitarity_defect = defect;
  out.defect_bound = bound;
  return out;
}

}  // namespace renormfock
