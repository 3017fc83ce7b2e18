#include "renormfock/convergence.hpp"

#include <cmath>
#include <sstream>

#include "renormfock/errors.hpp"

namespace renormfock {

std::size_t EmbeddedOperatorFamily::add(const CMat& op, const CMat& embedding) {
  if (op.rows() != op.cols()) throw ShapeError("family member must be square");
  if (embedding.rows() != parent_dim_ || embedding.cols() != op.rows()) {
    std::ostringstream os;
    os << "embedding is " << embedding.rows() << "x" << embedding.cols() << ", expected "
       << parent_dim_ << "x" << op.rows();
    throw ShapeError(os.str());
  }
  const CMat gram = embedding.adjoint() * embedding;
  const double iso = (gram - CMat::Identity(op.rows(), op.rows())).cwiseAbs().maxCoeff();
  if (iso > 1e-12) {
    std::ostringstream os;
    os << "embedding is not isometric (defect " << iso << ")";
    throw PreconditionError(os.str());
  }
  const double scale = std::max(1.0, op.cwiseAbs().maxCoeff());
  if ((op - op.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw PreconditionError("family members must be Hermitian in the standard metric");
  }
  ops_.push_back(op);
  emb_.push_back(embedding);
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (op + op.adjoint()), Eigen::EigenvaluesOnly);
  spectra_.push_back(es.eigenvalues());
  return ops_.size() - 1;
}

std::size_t EmbeddedOperatorFamily::add(const CMat& op) {
  if (op.rows() > parent_dim_) throw ShapeError("family member is larger than the parent space");
  return add(op, CMat::Identity(parent_dim_, op.rows()));
}

void EmbeddedOperatorFamily::set_limit(std::size_t index) {
  if (index >= ops_.size()) throw PreconditionError("limit index out of range");
  limit_ = index;
}

std::size_t EmbeddedOperatorFamily::limit() const {
  if (ops_.empty()) throw PreconditionError("family is empty");
  return limit_ < ops_.size() ? limit_ : ops_.size() - 1;
}

CMat EmbeddedOperatorFamily::embedded_resolvent(std::size_t i, cplx z) const {
  const RVec& s = spectra_[i];
  if (std::abs(z.imag()) < 1e-12) {
    const double dist = (s.array() + z.real()).abs().minCoeff();
    if (dist < 1e-12) {
      std::ostringstream os;
      os << "shift z = " << z.real() << " is singular for member " << i;
      throw ShiftError(os.str());
    }
  }
  CMat m = ops_[i];
  m.diagonal().array() += z;
  const CMat r = m.partialPivLu().inverse();
  return emb_[i] * r * emb_[i].adjoint();
}

std::vector<double> resolvent_distance(const EmbeddedOperatorFamily& family, cplx z,
                                       DistanceMode mode, const std::vector<CVec>& probes) {
  const std::size_t lim = family.limit();
  const CMat r_lim = family.embedded_resolvent(lim, z);
  if (mode == DistanceMode::strong) {
    if (probes.empty()) throw PreconditionError("strong distance needs probe vectors");
    for (const CVec& p : probes) {
      if (p.size() != family.parent_dim()) throw ShapeError("probe has the wrong dimension");
    }
  }
  std::vector<double> out(family.size(), 0.0);
  for (std::size_t i = 0; i < family.size(); ++i) {
    if (i == lim) continue;
    const CMat diff = family.embedded_resolvent(i, z) - r_lim;
    if (mode == DistanceMode::norm) {
      out[i] = Eigen::BDCSVD<CMat>(diff).singularValues()(0);
    } else {
      double worst = 0.0;
      for (const CVec& p : probes) {
        const double n = p.norm();
        if (n == 0.0) continue;
        worst = std::max(worst, (diff * p).norm() / n);
      }
      out[i] = worst;
    }
  }
  return out;
}

RateFit rate_fit(const std::vector<double>& distances, const std::vector<double>& parameters) {
  if (distances.size() != parameters.size()) throw ShapeError("rate fit inputs differ in length");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    if (distances[i] > 0.0 && parameters[i] > 0.0 && std::isfinite(distances[i]) &&
        std::isfinite(parameters[i])) {
      xs.push_back(std::log(parameters[i]));
      ys.push_back(std::log(distances[i]));
    }
  }
  if (xs.size() < 3) {
    throw FitError("rate fit needs at least three positive points, got " +
                   std::to_string(xs.size()));
  }
  const int n = static_cast<int>(xs.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = xs[i];
    b(i) = ys[i];
  }
  const Eigen::Vector2d c = a.colPivHouseholderQr().solve(b);
  RateFit fit;
  fit.prefactor = std::exp(c(0));
  fit.exponent = c(1);
  fit.residual = std::sqrt((a * c - b).squaredNorm() / n);
  fit.points = n;
  return fit;
}

CMat fock_embedding(const FockBasis& coarse, const FockBasis& fine, const CMat& j) {
  if (j.rows() != fine.modes() || j.cols() != coarse.modes()) {
    throw ShapeError("mode map must be fine x coarse");
  }
  if (fine.cap() < coarse.cap()) throw ShapeError("fine cap is below the coarse cap");
  auto fine_ptr = std::make_shared<const FockBasis>(fine);
  std::vector<SpMat> raise;
  for (int i = 0; i < coarse.modes(); ++i) {
    raise.push_back(creator(j.col(i), fine_ptr).matrix);
  }
  CMat out = CMat::Zero(fine.dim(), coarse.dim());
  for (std::size_t s = 0; s < coarse.dim(); ++s) {
    const auto occ = coarse.occupation(s);
    CVec x = CVec::Zero(fine.dim());
    x[0] = 1.0;
    for (int i = 0; i < coarse.modes(); ++i) {
      double fact = 1.0;
      for (int p = 1; p <= occ[i]; ++p) {
        x = raise[i] * x;
        fact *= p;
      }
      if (occ[i] > 1) x /= std::sqrt(fact);
    }
    out.col(s) = x;
  }
  return out;
}

std::vector<CVec> default_probes(const BasisPtr& basis, const OneParticleVector& g) {
  std::vector<CVec> out;
  out.push_back(vacuum(basis));
  for (int i = 0; i < basis->modes() && basis->cap() >= 1; ++i) {
    CVec e = CVec::Zero(basis->dim());
    e[basis->grade_begin(1) + i] = 1.0;
    out.push_back(e);
  }
  if (g.size() > 0) out.push_back(coherent_state(g, basis));
  return out;
}

}  // namespace renormfock
