#include "renormfock/sweep.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <thread>

#include "renormfock/doi.hpp"
#include "renormfock/errors.hpp"
#include "renormfock/nelson.hpp"
#include "renormfock/vhm.hpp"

namespace renormfock {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Above this dimension no dense matrices are kept for the resolvent pass.
constexpr Eigen::Index kDenseLimit = 1500;

struct PointResult {
  SweepRow row;
  bool ok = false;
  std::string error;
  // Operator whose resolvent is compared with the last point, if kept.
  CMat op;
  ModeSet modes;
  int spin_dim = 1;
  int nmax = 0;
  std::size_t fock_dim = 0;
};

SolverOptions solver_options(const ExperimentConfig& c, const RunOptions& o) {
  SolverOptions s;
  s.tol = c.solver.tol;
  s.max_iter = c.solver.max_iter;
  s.seed = o.seed.value_or(c.solver.seed);
  return s;
}

double poisson_or_inf(const OneParticleVector& g, int nmax) {
  return poisson_tail(g.squaredNorm(), nmax);
}

OneParticleVector safe_vhm_config(const OneParticleVector& v, const ModeSet& modes, bool& ok) {
  try {
    ok = true;
    return vhm_ground_config(v, modes);
  } catch (const SingularConfigError&) {
    ok = false;
    return OneParticleVector::Zero(v.size());
  }
}

void evaluate_vhm(const ExperimentConfig& c, const RunOptions& o, const ModeSet& modes,
                  const OneParticleVector& v, const BasisPtr& basis, PointResult& r) {
  const VhmModel model = assemble_vhm(v, modes, basis);
  const int k = std::min<int>(std::max(2, c.solver.k_lowest), static_cast<int>(basis->dim()));
  const Eigenpairs ep = ground_state(model, k, c.solver.tol, solver_options(c, o));
  const CVec x0 = ep.vectors.col(0);
  r.row.e0 = ep.values[0];
  r.row.gap = ep.values.size() > 1 ? ep.values[1] - ep.values[0] : kNaN;
  r.row.num_expect = x0.dot(number_operator(basis).matrix * x0).real();
  r.row.vac_overlap = std::abs(x0[0]);
  bool regular = true;
  const OneParticleVector g = safe_vhm_config(v, modes, regular);
  r.row.tail_bound = regular ? poisson_or_inf(g, basis->cap()) : kNaN;
  r.row.metric_cond = kNaN;
  if (regular && basis->dim() <= static_cast<std::size_t>(kDenseLimit)) {
    try {
      r.row.metric_cond = renorm_metric(g, basis).condition_estimate;
    } catch (const MetricDegeneracyError&) {
      r.row.metric_cond = std::numeric_limits<double>::infinity();
    }
  }
  if (model.H.matrix.rows() <= kDenseLimit) r.op = CMat(model.H.matrix);
}

void evaluate_sb(const ExperimentConfig& c, const ModeSet& modes, const OneParticleVector& v,
                 const BasisPtr& basis, PointResult& r) {
  const SpinSpace spin = make_spin_space(c.A, c.B, c.spin_cap);
  bool regular = true;
  const OneParticleVector g = safe_vhm_config(v, modes, regular);
  if (!regular) {
    throw SingularConfigError("sb dressing needs v/ω finite at every node; raise sigma0");
  }
  const RenormalizedSb sb = renormalized_sb(spin, modes, g, c.kernel, basis);
  const Eigenpairs ep = lowest_eigenpairs_dense(sb.dressed, 1);
  const CVec x0 = ep.vectors.col(0);
  const std::size_t nf = basis->dim();
  r.row.e0 = sb.dressed_spectrum[0];
  r.row.gap = sb.dressed_spectrum.size() > 1 ? sb.dressed_spectrum[1] - sb.dressed_spectrum[0]
                                             : kNaN;
  double n_exp = 0.0, vac = 0.0;
  for (int s = 0; s < spin.dim; ++s) {
    for (std::size_t j = 0; j < nf; ++j) {
      n_exp += std::norm(x0[s * nf + j]) * basis->grade(j);
    }
    vac += std::norm(x0[s * nf]);
  }
  r.row.num_expect = n_exp;
  r.row.vac_overlap = std::sqrt(vac);
  const double bnorm = Eigen::JacobiSVD<CMat>(spin.B).singularValues()(0);
  r.row.tail_bound = poisson_tail(bnorm * bnorm * g.squaredNorm(), basis->cap());
  r.row.metric_cond = sb.metric.condition_estimate;
  r.spin_dim = spin.dim;
  if (sb.dressed.rows() <= kDenseLimit) r.op = sb.dressed;
}

void evaluate_nelson(const ExperimentConfig& c, const RunOptions& o, const ModeSet& modes,
                     const FormFactorSpec& spec, const BasisPtr& basis, PointResult& r) {
  const Eigen::VectorXd P = Eigen::Map<const Eigen::VectorXd>(c.P.data(), c.P.size());
  const FiberModel m = assemble_fiber(P, spec, modes, basis);
  const int k = std::min<int>(std::max(2, c.solver.k_lowest), static_cast<int>(basis->dim()));
  const Eigenpairs ep = lowest_eigenpairs(m.K, k, solver_options(c, o));
  const CVec x0 = ep.vectors.col(0);
  r.row.e0 = ep.values[0] - m.E_counterterm;
  r.row.gap = ep.values.size() > 1 ? ep.values[1] - ep.values[0] : kNaN;
  r.row.num_expect = x0.dot(number_operator(basis).matrix * x0).real();
  r.row.vac_overlap = std::abs(x0[0]);
  r.row.tail_bound = poisson_or_inf(gross_config(m.v, modes), basis->cap());
  r.row.metric_cond = kNaN;
  if (m.K.rows() <= kDenseLimit) {
    r.op = CMat(m.K);
    r.op.diagonal().array() -= m.E_counterterm;
  }
}

void evaluate_doi(const ExperimentConfig& c, const ModeSet& modes, const OneParticleVector& v,
                  PointResult& r) {
  const SpinSpace spin = make_spin_space(c.A, c.B, c.spin_cap);
  const double x = infrared_norm2(v, modes);
  const DOIKernel f = c.kernel == ChiKind::regular ? DOIKernel::chi_regular(x)
                                                   : DOIKernel::chi_singular(spin.dec_B);
  CMat m = doi_apply(spin.A, spin.dec_B, f);
  m = 0.5 * (m + m.adjoint());
  const RVec s = hermitian_spectrum(m);
  r.row.dim = spin.dim;
  r.row.e0 = s[0];
  r.row.gap = s.size() > 1 ? s[1] - s[0] : kNaN;
  r.row.num_expect = kNaN;
  r.row.vac_overlap = kNaN;
  r.row.tail_bound = kNaN;
  r.row.metric_cond = kNaN;
  r.spin_dim = spin.dim;
  r.op = m;
}

PointResult evaluate_point(const ExperimentConfig& c, const RunOptions& o, std::size_t i) {
  PointResult r;
  const auto t0 = std::chrono::steady_clock::now();
  const PointSetup p = point_setup(c, i);
  r.modes = build_modes(c, p);
  r.nmax = p.nmax;
  FormFactorSpec spec = c.form;
  spec.sigma = p.sigma;
  spec.sigma0 = p.sigma0;
  const OneParticleVector v = sample_form_factor(spec, r.modes);

  r.row.model = to_string(c.model);
  r.row.sweep_param = to_string(c.sweep_param);
  r.row.sweep_value = c.sweep_values[i];
  r.row.mu = c.grid.mu;
  r.row.modes = r.modes.size();
  r.row.nmax = p.nmax;
  r.row.sigma = p.sigma;
  r.row.sigma0 = p.sigma0;

  if (c.model == ModelKind::doi_demo) {
    evaluate_doi(c, r.modes, v, r);
  } else {
    const BasisPtr basis = enumerate_basis(r.modes.size(), p.nmax);
    r.fock_dim = basis->dim();
    switch (c.model) {
      case ModelKind::vhm: evaluate_vhm(c, o, r.modes, v, basis, r); break;
      case ModelKind::sb: evaluate_sb(c, r.modes, v, basis, r); break;
      case ModelKind::nelson_fiber: evaluate_nelson(c, o, r.modes, spec, basis, r); break;
      case ModelKind::doi_demo: break;
    }
    r.row.dim = static_cast<long long>(r.spin_dim * r.fock_dim);
  }
  r.row.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  r.ok = true;
  return r;
}

// Index map of a point's state space into the last point's, or empty when
// the two spaces are not nested.
std::vector<Eigen::Index> nesting(const PointResult& a, const PointResult& last) {
  std::vector<Eigen::Index> map;
  if (a.spin_dim != last.spin_dim) return map;
  if (a.fock_dim == 0 && last.fock_dim == 0) {
    for (int s = 0; s < a.spin_dim; ++s) map.push_back(s);
    return map;
  }
  if (!same_modes(a.modes, last.modes) || a.nmax > last.nmax) return map;
  for (int s = 0; s < a.spin_dim; ++s)
    for (std::size_t j = 0; j < a.fock_dim; ++j)
      map.push_back(static_cast<Eigen::Index>(s * last.fock_dim + j));
  return map;
}

CMat resolvent(const CMat& op, cplx z) {
  CMat m = op;
  m.diagonal().array() += z;
  return m.partialPivLu().inverse();
}

void resolvent_pass(std::vector<PointResult>& points, cplx z) {
  PointResult& last = points.back();
  if (last.op.size() == 0) {
    for (auto& p : points) p.row.resolvent_gap = kNaN;
    return;
  }
  const CMat r_last = resolvent(last.op, z);
  for (std::size_t i = 0; i < points.size(); ++i) {
    PointResult& p = points[i];
    if (i + 1 == points.size()) {
      p.row.resolvent_gap = 0.0;
      continue;
    }
    const auto map = nesting(p, last);
    if (map.empty() || p.op.size() == 0) {
      p.row.resolvent_gap = kNaN;
      continue;
    }
    const CMat r = resolvent(p.op, z);
    CMat diff = r_last;
    for (std::size_t a = 0; a < map.size(); ++a)
      for (std::size_t b = 0; b < map.size(); ++b) diff(map[a], map[b]) -= r(a, b);
    p.row.resolvent_gap = Eigen::BDCSVD<CMat>(diff).singularValues()(0);
  }
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

int default_threads() {
  const char* env = std::getenv("RENORMFOCK_THREADS");
  if (!env) return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || n < 1) {
    warn("ignoring invalid RENORMFOCK_THREADS='" + std::string(env) + "'");
    return 1;
  }
  return static_cast<int>(n);
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const RunOptions& options,
                                std::vector<SweepRow>* completed) {
  const std::size_t n = config.sweep_values.size();
  std::vector<PointResult> results(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = evaluate_point(config, options, i);
      } catch (const std::exception& e) {
        results[i].ok = false;
        results[i].error = e.what();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(n)));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < n; ++i) {
    if (!results[i].ok) {
      if (completed) {
        completed->clear();
        for (const auto& r : results)
          if (r.ok) completed->push_back(r.row);
      }
      throw Error("sweep point " + std::to_string(i) + " failed: " + results[i].error);
    }
  }
  resolvent_pass(results, options.z);
  std::vector<SweepRow> rows;
  for (auto& r : results) rows.push_back(r.row);
  return rows;
}

std::vector<SweepRow> run_sweep_to_file(const ExperimentConfig& config,
                                        const std::string& out_path,
                                        const RunOptions& options) {
  std::vector<SweepRow> partial;
  std::vector<SweepRow> rows;
  try {
    rows = run_sweep(config, options, &partial);
  } catch (const Error&) {
    std::ofstream p(out_path + ".partial", std::ios::binary);
    p << to_csv(partial);
    throw;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw Error("cannot write '" + out_path + "'");
  out << to_csv(rows);
  return rows;
}

const std::string& csv_header() {
  static const std::string h =
      "model,sweep_param,sweep_value,mu,modes,nmax,dim,sigma,sigma0,e0,gap,num_expect,"
      "vac_overlap,resolvent_gap,tail_bound,metric_cond,runtime_ms";
  return h;
}

std::string csv_line(const SweepRow& r) {
  std::string s = r.model + "," + r.sweep_param + "," + fmt(r.sweep_value) + "," + fmt(r.mu) +
                  "," + std::to_string(r.modes) + "," + std::to_string(r.nmax) + "," +
                  std::to_string(r.dim);
  for (double x : {r.sigma, r.sigma0, r.e0, r.gap, r.num_expect, r.vac_overlap,
                   r.resolvent_gap, r.tail_bound, r.metric_cond, r.runtime_ms}) {
    s += "," + fmt(x);
  }
  return s;
}

std::string to_csv(const std::vector<SweepRow>& rows) {
  std::string s = csv_header() + "\n";
  for (const auto& r : rows) s += csv_line(r) + "\n";
  return s;
}

}  // namespace renormfock
