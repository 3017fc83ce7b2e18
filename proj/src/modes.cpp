#include "renormfock/modes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "renormfock/errors.hpp"

namespace renormfock {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> cell_edges(GridKind kind, int cells, double k_min,
                               double k_max) {
  if (cells < 1) throw ConfigError("grid needs at least one cell");
  if (!(k_min >= 0.0) || !(k_max > k_min) || !std::isfinite(k_max)) {
    throw ConfigError("grid requires 0 <= k_min < k_max < inf");
  }
  std::vector<double> edges(cells + 1);
  if (kind == GridKind::logarithmic) {
    if (k_min <= 0.0) throw ConfigError("logarithmic grid requires k_min > 0");
    const double ratio = std::log(k_max / k_min) / cells;
    for (int i = 0; i <= cells; ++i) edges[i] = k_min * std::exp(ratio * i);
  } else if (kind == GridKind::linear) {
    const double h = (k_max - k_min) / cells;
    for (int i = 0; i <= cells; ++i) edges[i] = k_min + h * i;
  } else {
    throw ConfigError("custom grids take explicit nodes");
  }
  edges.back() = k_max;
  return edges;
}

double cell_node(GridKind kind, double a, double b) {
  return kind == GridKind::logarithmic ? std::sqrt(a * b) : 0.5 * (a + b);
}

}  // namespace

double ModeSet::omega(int i) const {
  const double k = knorm(i);
  return std::sqrt(k * k + mass * mass);
}

RVec ModeSet::omegas() const {
  RVec w(size());
  for (int i = 0; i < size(); ++i) w[i] = omega(i);
  return w;
}

RVec ModeSet::knorms() const {
  RVec k(size());
  for (int i = 0; i < size(); ++i) k[i] = knorm(i);
  return k;
}

RVec ModeSet::momentum_component(int c) const {
  if (radial) throw ShapeError("radial grids carry no vector momenta");
  if (c < 0 || c >= dimension) throw ShapeError("momentum component out of range");
  RVec k(size());
  for (int i = 0; i < size(); ++i) k[i] = nodes[i][c];
  return k;
}

void validate(const ModeSet& modes) {
  if (modes.dimension != 1 && modes.dimension != 3) {
    throw ConfigError("mode dimension must be 1 or 3");
  }
  if (modes.nodes.empty()) throw ConfigError("mode set is empty");
  if (modes.nodes.size() != modes.weights.size()) {
    throw ShapeError("nodes and weights differ in length");
  }
  if (!(modes.mass >= 0.0) || !std::isfinite(modes.mass)) {
    throw ConfigError("mass must be finite and nonnegative");
  }
  for (double w : modes.weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("weights must be positive");
  }
  for (std::size_t i = 0; i < modes.nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < modes.nodes.size(); ++j) {
      if ((modes.nodes[i] - modes.nodes[j]).norm() == 0.0) {
        throw ConfigError("duplicate momentum node at index " + std::to_string(j));
      }
    }
  }
}

ModeSet radial_grid(GridKind kind, int nodes, double k_min, double k_max,
                    double mass) {
  const auto edges = cell_edges(kind, nodes, k_min, k_max);
  ModeSet m;
  m.dimension = 3;
  m.radial = true;
  m.kind = kind;
  m.mass = mass;
  for (int i = 0; i < nodes; ++i) {
    const double a = edges[i], b = edges[i + 1];
    m.nodes.emplace_back(cell_node(kind, a, b), 0.0, 0.0);
    m.weights.push_back(4.0 * kPi * (b * b * b - a * a * a) / 3.0);
  }
  validate(m);
  return m;
}

ModeSet signed_grid_1d(GridKind kind, int nodes_per_side, double k_min,
                       double k_max, double mass) {
  const auto edges = cell_edges(kind, nodes_per_side, k_min, k_max);
  ModeSet m;
  m.dimension = 1;
  m.kind = kind;
  m.mass = mass;
  // Negative side first, ascending momentum overall.
  for (int i = nodes_per_side - 1; i >= 0; --i) {
    m.nodes.emplace_back(-cell_node(kind, edges[i], edges[i + 1]), 0.0, 0.0);
    m.weights.push_back(edges[i + 1] - edges[i]);
  }
  for (int i = 0; i < nodes_per_side; ++i) {
    m.nodes.emplace_back(cell_node(kind, edges[i], edges[i + 1]), 0.0, 0.0);
    m.weights.push_back(edges[i + 1] - edges[i]);
  }
  validate(m);
  return m;
}

ModeSet product_grid_3d(int cells_per_axis, double k_max, double mass) {
  if (cells_per_axis < 2 || cells_per_axis % 2 != 0) {
    throw ConfigError("product grid needs an even number of cells per axis");
  }
  if (!(k_max > 0.0)) throw ConfigError("product grid needs k_max > 0");
  const double h = 2.0 * k_max / cells_per_axis;
  ModeSet m;
  m.dimension = 3;
  m.kind = GridKind::linear;
  m.mass = mass;
  for (int x = 0; x < cells_per_axis; ++x)
    for (int y = 0; y < cells_per_axis; ++y)
      for (int z = 0; z < cells_per_axis; ++z) {
        m.nodes.emplace_back(-k_max + (x + 0.5) * h, -k_max + (y + 0.5) * h,
                             -k_max + (z + 0.5) * h);
        m.weights.push_back(h * h * h);
      }
  validate(m);
  return m;
}

ModeSet custom_grid(int dimension, std::vector<Eigen::Vector3d> nodes,
                    std::vector<double> weights, double mass, bool radial) {
  ModeSet m;
  m.dimension = dimension;
  m.nodes = std::move(nodes);
  m.weights = std::move(weights);
  m.mass = mass;
  m.kind = GridKind::custom;
  m.radial = radial;
  validate(m);
  return m;
}

std::string to_string(GridKind kind) {
  switch (kind) {
    case GridKind::linear: return "linear";
    case GridKind::logarithmic: return "logarithmic";
    case GridKind::custom: return "custom";
  }
  return "?";
}

std::string to_string(FormFactorKind kind) {
  switch (kind) {
    case FormFactorKind::nelson_sharp: return "nelson_sharp";
    case FormFactorKind::weisskopf_wigner: return "weisskopf_wigner";
    case FormFactorKind::custom_table: return "custom_table";
  }
  return "?";
}

void validate(const FormFactorSpec& spec) {
  if (!(spec.sigma0 >= 0.0) || !(spec.sigma > spec.sigma0)) {
    std::ostringstream os;
    os << "form factor cutoffs must satisfy 0 <= sigma0 < sigma (sigma0="
       << spec.sigma0 << ", sigma=" << spec.sigma << ")";
    throw ConfigError(os.str());
  }
  if (!std::isfinite(spec.coupling)) throw ConfigError("coupling must be finite");
}

double form_factor_value(const FormFactorSpec& spec, double k, double mass) {
  const double ak = std::abs(k);
  if (ak < spec.sigma0 || ak > spec.sigma) return 0.0;
  const double w = std::sqrt(k * k + mass * mass);
  switch (spec.kind) {
    case FormFactorKind::nelson_sharp:
      return spec.coupling / std::sqrt(2.0 * w);
    case FormFactorKind::weisskopf_wigner:
      return spec.coupling / std::sqrt(w);
    case FormFactorKind::custom_table:
      throw ConfigError("custom_table form factors have no pointwise formula");
  }
  return 0.0;
}

OneParticleVector sample_form_factor(const FormFactorSpec& spec,
                                     const ModeSet& modes) {
  validate(spec);
  const int m = modes.size();
  OneParticleVector c(m);
  if (spec.kind == FormFactorKind::custom_table) {
    if (static_cast<int>(spec.table.size()) != m) {
      throw ConfigError("custom form factor table has " +
                        std::to_string(spec.table.size()) + " entries for " +
                        std::to_string(m) + " modes");
    }
    for (int i = 0; i < m; ++i) {
      c[i] = spec.coupling * std::sqrt(modes.weights[i]) * spec.table[i];
    }
    return c;
  }
  for (int i = 0; i < m; ++i) {
    const double k = modes.knorm(i);
    const double ak = std::abs(k);
    if (ak < spec.sigma0 || ak > spec.sigma) {
      c[i] = 0.0;
      continue;
    }
    const double w = modes.omega(i);
    if (w == 0.0) {
      throw SingularConfigError("form factor is singular at k = 0 with zero mass");
    }
    c[i] = std::sqrt(modes.weights[i]) * form_factor_value(spec, k, modes.mass);
  }
  return c;
}

OneParticleVector vhm_ground_config(const OneParticleVector& v,
                                    const ModeSet& modes) {
  if (v.size() != modes.size()) throw ShapeError("v does not match the mode set");
  OneParticleVector g(v.size());
  for (int i = 0; i < v.size(); ++i) {
    const double w = modes.omega(i);
    if (v[i] == cplx(0.0)) {
      g[i] = 0.0;
    } else if (w == 0.0) {
      throw SingularConfigError("omega vanishes at mode " + std::to_string(i) +
                                " where v is nonzero; raise the infrared cutoff");
    } else {
      g[i] = -v[i] / w;
    }
  }
  return g;
}

OneParticleVector gross_config(const OneParticleVector& v,
                               const ModeSet& modes) {
  if (v.size() != modes.size()) throw ShapeError("v does not match the mode set");
  OneParticleVector g(v.size());
  for (int i = 0; i < v.size(); ++i) {
    const double k = modes.knorm(i);
    const double denom = modes.omega(i) + k * k;
    if (denom == 0.0) {
      throw SingularConfigError("Gross configuration undefined at k = 0 with zero mass");
    }
    g[i] = -v[i] / denom;
  }
  return g;
}

double infrared_norm2(const OneParticleVector& v, const ModeSet& modes) {
  if (v.size() != modes.size()) throw ShapeError("v does not match the mode set");
  double s = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    const double a2 = std::norm(v[i]);
    if (a2 == 0.0) continue;
    const double w = modes.omega(i);
    if (w == 0.0) return std::numeric_limits<double>::infinity();
    s += a2 / w;
  }
  return s;
}

double self_energy(const FormFactorSpec& spec, int dimension, double mass) {
  if (!std::isfinite(spec.sigma)) {
    throw CountertermDivergenceError(
        "self-energy diverges for an infinite ultraviolet cutoff; sweep finite sigma");
  }
  if (spec.kind == FormFactorKind::custom_table) {
    throw ConfigError("self-energy needs an analytic form factor");
  }
  if (dimension != 1 && dimension != 3) throw ConfigError("dimension must be 1 or 3");
  if (spec.sigma0 == spec.sigma) return 0.0;
  validate(spec);

  // Radial integrand in k; the d = 1 case counts both signs of k.
  auto radial = [&](double k) {
    const double v = form_factor_value(spec, k, mass);
    const double w = std::sqrt(k * k + mass * mass);
    const double measure = dimension == 3 ? 4.0 * kPi * k * k : 2.0;
    return measure * v * v / (w + k * k);
  };

  using boost::math::quadrature::gauss_kronrod;
  constexpr unsigned kDepth = 30;
  double err = 0.0;
  double value = 0.0;
  if (spec.sigma0 > 0.0) {
    // Logarithmic variable keeps decades of scale equally resolved.
    auto f = [&](double t) {
      const double k = std::exp(t);
      return radial(k) * k;
    };
    value = gauss_kronrod<double, 31>::integrate(
        f, std::log(spec.sigma0), std::log(spec.sigma), kDepth, 1e-13, &err);
  } else {
    if (dimension == 1 && mass == 0.0) {
      throw CountertermDivergenceError(
          "one-dimensional massless self-energy diverges without an infrared cutoff");
    }
    value = gauss_kronrod<double, 31>::integrate(radial, 0.0, spec.sigma, kDepth,
                                                 1e-13, &err);
  }
  if (!std::isfinite(value) || err > 1e-8) {
    throw CountertermDivergenceError("self-energy quadrature did not reach 1e-8");
  }
  return -value;
}

double self_energy(const FormFactorSpec& spec, const ModeSet& modes) {
  return self_energy(spec, modes.dimension, modes.mass);
}

}  // namespace renormfock
