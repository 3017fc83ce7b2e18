#include "renormfock/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "renormfock/doi.hpp"
#include "renormfock/errors.hpp"
#include "renormfock/fock.hpp"

namespace renormfock {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

bool to_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  if (*b == '+') ++b;
  const auto [p, ec] = std::from_chars(b, s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt(cplx z) {
  std::string s = fmt(z.real());
  s += std::signbit(z.imag()) ? "-" : "+";
  s += fmt(std::abs(z.imag())) + "i";
  return s;
}

struct Entry {
  std::string value;
  int line = 0;
};

using Sections = std::map<std::string, std::map<std::string, Entry>>;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"grid", {"dimension", "kind", "nodes", "k_min", "k_max", "mu", "points", "weights"}},
      {"truncation", {"modes", "nmax"}},
      {"model",
       {"type", "form_factor", "coupling", "sigma", "sigma0", "table", "A", "B", "spin_cap",
        "P", "kernel"}},
      {"sweep", {"param", "values"}},
      {"solver", {"tol", "max_iter", "k_lowest", "seed"}},
      {"output", {"path"}},
  };
  return keys;
}

class Reader {
 public:
  explicit Reader(Sections s) : s_(std::move(s)) {}

  const Entry* find(const std::string& sec, const std::string& key) const {
    auto it = s_.find(sec);
    if (it == s_.end()) return nullptr;
    auto jt = it->second.find(key);
    return jt == it->second.end() ? nullptr : &jt->second;
  }

  const Entry& need(const std::string& sec, const std::string& key) const {
    const Entry* e = find(sec, key);
    if (!e) throw ConfigError("missing required key " + sec + "." + key);
    return *e;
  }

  static ConfigError bad(const std::string& sec, const std::string& key, const Entry& e,
                         const std::string& why) {
    return ConfigError(sec + "." + key + " (line " + std::to_string(e.line) + "): " + why);
  }

  double num(const std::string& sec, const std::string& key, double fallback) const {
    const Entry* e = find(sec, key);
    if (!e) return fallback;
    double x;
    if (!to_double(e->value, x)) throw bad(sec, key, *e, "not a number: '" + e->value + "'");
    return x;
  }

  long long integer(const std::string& sec, const std::string& key, long long fallback) const {
    const Entry* e = find(sec, key);
    if (!e) return fallback;
    long long x = 0;
    const auto [p, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), x);
    if (ec != std::errc() || p != e->value.data() + e->value.size()) {
      throw bad(sec, key, *e, "not an integer: '" + e->value + "'");
    }
    return x;
  }

  std::string word(const std::string& sec, const std::string& key,
                   const std::string& fallback) const {
    const Entry* e = find(sec, key);
    return e ? e->value : fallback;
  }

  std::vector<double> list(const std::string& sec, const std::string& key) const {
    const Entry* e = find(sec, key);
    std::vector<double> out;
    if (!e) return out;
    for (const std::string& t : split_list(e->value)) {
      double x;
      if (!to_double(t, x)) throw bad(sec, key, *e, "not a number: '" + t + "'");
      out.push_back(x);
    }
    return out;
  }

  CMat matrix(const std::string& sec, const std::string& key) const {
    const Entry* e = find(sec, key);
    if (!e) return CMat();
    std::vector<cplx> vals;
    for (const std::string& t : split_list(e->value)) {
      try {
        vals.push_back(parse_complex(t));
      } catch (const ConfigError& err) {
        throw bad(sec, key, *e, err.what());
      }
    }
    const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(vals.size()))));
    if (n == 0 || static_cast<std::size_t>(n * n) != vals.size()) {
      throw bad(sec, key, *e, "expected a square matrix in row-major order, got " +
                                  std::to_string(vals.size()) + " entries");
    }
    CMat m(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) m(r, c) = vals[r * n + c];
    return m;
  }

  int line(const std::string& sec, const std::string& key) const {
    const Entry* e = find(sec, key);
    return e ? e->line : 0;
  }

 private:
  Sections s_;
};

Sections tokenize(const std::string& text) {
  Sections out;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("syntax error on line " + std::to_string(lineno) +
                          ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (!known_keys().count(section)) {
        throw ConfigError("unknown section [" + section + "] on line " +
                          std::to_string(lineno));
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("syntax error on line " + std::to_string(lineno) +
                        ": expected key = value");
    }
    if (section.empty()) {
      throw ConfigError("syntax error on line " + std::to_string(lineno) +
                        ": key outside of any section");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!known_keys().at(section).count(key)) {
      throw ConfigError("unknown key " + section + "." + key + " on line " +
                        std::to_string(lineno));
    }
    if (value.empty()) {
      throw ConfigError("syntax error on line " + std::to_string(lineno) + ": empty value");
    }
    if (out[section].count(key)) {
      throw ConfigError("duplicate key " + section + "." + key + " on line " +
                        std::to_string(lineno));
    }
    out[section][key] = Entry{value, lineno};
  }
  return out;
}

ModelKind parse_model(const std::string& s) {
  if (s == "vhm") return ModelKind::vhm;
  if (s == "sb") return ModelKind::sb;
  if (s == "nelson-fiber") return ModelKind::nelson_fiber;
  if (s == "doi-demo") return ModelKind::doi_demo;
  throw ConfigError("model.type: unknown model '" + s + "'");
}

GridKind parse_grid_kind(const std::string& s) {
  if (s == "linear") return GridKind::linear;
  if (s == "log" || s == "logarithmic") return GridKind::logarithmic;
  if (s == "custom") return GridKind::custom;
  throw ConfigError("grid.kind: unknown grid kind '" + s + "'");
}

FormFactorKind parse_form_kind(const std::string& s) {
  if (s == "nelson" || s == "nelson_sharp") return FormFactorKind::nelson_sharp;
  if (s == "ww" || s == "weisskopf-wigner" || s == "weisskopf_wigner") {
    return FormFactorKind::weisskopf_wigner;
  }
  if (s == "custom" || s == "custom_table") return FormFactorKind::custom_table;
  throw ConfigError("model.form_factor: unknown form factor '" + s + "'");
}

SweepParam parse_sweep(const std::string& s) {
  if (s == "sigma") return SweepParam::sigma;
  if (s == "sigma0") return SweepParam::sigma0;
  if (s == "nmax") return SweepParam::nmax;
  if (s == "nodes") return SweepParam::nodes;
  throw ConfigError("sweep.param: unknown parameter '" + s + "'");
}

std::string form_name(FormFactorKind k) {
  switch (k) {
    case FormFactorKind::nelson_sharp: return "nelson";
    case FormFactorKind::weisskopf_wigner: return "ww";
    case FormFactorKind::custom_table: return "custom";
  }
  return "?";
}

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + fmt(xs[i]);
  return s;
}

std::string join(const CMat& m) {
  std::string s;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) s += (r || c ? ", " : "") + fmt(m(r, c));
  return s;
}

bool is_whole(double x) { return std::isfinite(x) && x == std::floor(x); }

void validate(const ExperimentConfig& c) {
  const GridConfig& g = c.grid;
  if (g.dimension != 1 && g.dimension != 3) throw ConfigError("grid.dimension must be 1 or 3");
  if (g.mu < 0) throw ConfigError("grid.mu must be nonnegative");
  if (g.kind == GridKind::custom) {
    if (g.points.empty() || g.points.size() != g.weights.size()) {
      throw ConfigError("grid.points and grid.weights must be nonempty lists of equal length");
    }
    if (c.sweep_param == SweepParam::nodes) {
      throw ConfigError("sweep.param = nodes needs a linear or logarithmic grid");
    }
    if (c.model == ModelKind::nelson_fiber && g.dimension == 3) {
      throw ConfigError("grid.kind = custom is not available for 3d fiber models");
    }
  } else {
    if (g.nodes < 1) throw ConfigError("grid.nodes must be positive");
    if (!(g.k_max > g.k_min) || g.k_min < 0) {
      throw ConfigError("grid.k_min and grid.k_max must satisfy 0 <= k_min < k_max");
    }
    if (g.kind == GridKind::logarithmic && g.k_min <= 0) {
      throw ConfigError("grid.k_min must be positive on logarithmic grids");
    }
  }
  if (c.nmax < 0) throw ConfigError("truncation.nmax must be nonnegative");
  if (c.sweep_values.empty()) throw ConfigError("sweep.values must be nonempty");
  if (c.solver.tol <= 0) throw ConfigError("solver.tol must be positive");
  if (c.solver.max_iter < 1) throw ConfigError("solver.max_iter must be positive");
  if (c.solver.k_lowest < 1) throw ConfigError("solver.k_lowest must be positive");
  if (c.form.coupling < 0 || !std::isfinite(c.form.coupling)) {
    throw ConfigError("model.coupling must be finite and nonnegative");
  }

  if (c.model == ModelKind::sb || c.model == ModelKind::doi_demo) {
    if (c.A.size() == 0 || c.B.size() == 0) {
      throw ConfigError("model.A and model.B are required for the " + to_string(c.model) +
                        " model");
    }
    if (c.A.rows() != c.B.rows()) throw ConfigError("model.A and model.B differ in size");
    if (c.A.rows() > c.spin_cap) {
      throw ConfigError("model.A exceeds the spin dimension cap " + std::to_string(c.spin_cap));
    }
    if ((c.A - c.A.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
      throw ConfigError("model.A must be Hermitian");
    }
    const double nd = normality_defect(c.B);
    if (!is_normal(c.B)) {
      std::ostringstream os;
      os << "model.B violates the normality rule ||B†B - BB†|| <= 1e-10 ||B||^2 (defect "
         << nd << ")";
      throw ConfigError(os.str());
    }
  }
  if (c.model == ModelKind::nelson_fiber &&
      static_cast<int>(c.P.size()) != c.grid.dimension) {
    throw ConfigError("model.P must have one component per spatial dimension");
  }

  for (std::size_t i = 0; i < c.sweep_values.size(); ++i) {
    const double x = c.sweep_values[i];
    const std::string where = "sweep point " + std::to_string(i);
    if ((c.sweep_param == SweepParam::nmax || c.sweep_param == SweepParam::nodes) &&
        (!is_whole(x) || x < (c.sweep_param == SweepParam::nodes ? 1 : 0))) {
      throw ConfigError(where + ": " + to_string(c.sweep_param) +
                        " must be a nonnegative integer");
    }
    const PointSetup p = point_setup(c, i);
    if (!(p.sigma0 >= 0)) throw ConfigError(where + ": sigma0 must be nonnegative");
    if (!(p.sigma0 < p.sigma)) {
      throw ConfigError(where + ": sigma0 (" + fmt(p.sigma0) + ") must be below sigma (" +
                        fmt(p.sigma) + ")");
    }
    ModeSet modes;
    try {
      modes = build_modes(c, p);
      FormFactorSpec spec = c.form;
      spec.sigma = p.sigma;
      spec.sigma0 = p.sigma0;
      sample_form_factor(spec, modes);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
    if (c.modes && c.sweep_param != SweepParam::nodes && *c.modes != modes.size()) {
      throw ConfigError("truncation.modes = " + std::to_string(*c.modes) +
                        " but the grid has " + std::to_string(modes.size()) + " modes");
    }
    const std::size_t dim = binomial(modes.size() + p.nmax, p.nmax);
    if (dim > FockBasis::kDefaultCapacity) {
      throw ConfigError(where + ": truncation.nmax gives a basis beyond the memory budget");
    }
  }
}

}  // namespace

cplx parse_complex(const std::string& token) {
  const std::string t = trim(token);
  if (t.empty()) throw ConfigError("empty complex entry");
  double re = 0.0, im = 0.0;
  if (t.back() != 'i') {
    if (!to_double(t, re)) throw ConfigError("bad complex entry '" + t + "'");
    return {re, 0.0};
  }
  const std::string body = t.substr(0, t.size() - 1);
  std::size_t split = std::string::npos;
  for (std::size_t p = body.size(); p-- > 1;) {
    if ((body[p] == '+' || body[p] == '-') && body[p - 1] != 'e' && body[p - 1] != 'E') {
      split = p;
      break;
    }
  }
  const std::string real_part = split == std::string::npos ? "" : body.substr(0, split);
  std::string imag_part = split == std::string::npos ? body : body.substr(split);
  if (imag_part.empty() || imag_part == "+") imag_part = "1";
  if (imag_part == "-") imag_part = "-1";
  if (!to_double(imag_part, im) || (!real_part.empty() && !to_double(real_part, re))) {
    throw ConfigError("bad complex entry '" + t + "'");
  }
  return {re, im};
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::vhm: return "vhm";
    case ModelKind::sb: return "sb";
    case ModelKind::nelson_fiber: return "nelson-fiber";
    case ModelKind::doi_demo: return "doi-demo";
  }
  return "?";
}

std::string to_string(SweepParam param) {
  switch (param) {
    case SweepParam::sigma: return "sigma";
    case SweepParam::sigma0: return "sigma0";
    case SweepParam::nmax: return "nmax";
    case SweepParam::nodes: return "nodes";
  }
  return "?";
}

PointSetup point_setup(const ExperimentConfig& c, std::size_t index) {
  PointSetup p{c.form.sigma, c.form.sigma0, c.nmax, c.grid.nodes};
  const double x = c.sweep_values.at(index);
  switch (c.sweep_param) {
    case SweepParam::sigma: p.sigma = x; break;
    case SweepParam::sigma0: p.sigma0 = x; break;
    case SweepParam::nmax: p.nmax = static_cast<int>(x); break;
    case SweepParam::nodes: p.nodes = static_cast<int>(x); break;
  }
  return p;
}

ModeSet build_modes(const ExperimentConfig& c, const PointSetup& p) {
  const GridConfig& g = c.grid;
  if (g.kind == GridKind::custom) {
    std::vector<Eigen::Vector3d> nodes;
    for (double x : g.points) nodes.emplace_back(x, 0.0, 0.0);
    return custom_grid(g.dimension, nodes, g.weights, g.mu, g.dimension == 3);
  }
  if (g.dimension == 1) return signed_grid_1d(g.kind, p.nodes, g.k_min, g.k_max, g.mu);
  if (c.model == ModelKind::nelson_fiber) {
    if (p.nodes % 2 != 0) throw ConfigError("3d fiber grids need an even grid.nodes");
    return product_grid_3d(p.nodes, g.k_max, g.mu);
  }
  return radial_grid(g.kind, p.nodes, g.k_min, g.k_max, g.mu);
}

ExperimentConfig parse_config(const std::string& text) {
  const Reader r(tokenize(text));
  ExperimentConfig c;
  c.model = parse_model(r.need("model", "type").value);

  c.grid.dimension = static_cast<int>(r.integer("grid", "dimension", 1));
  c.grid.kind = parse_grid_kind(r.word("grid", "kind", "log"));
  c.grid.nodes = static_cast<int>(r.integer("grid", "nodes", c.grid.nodes));
  c.grid.k_min = r.num("grid", "k_min", c.grid.k_min);
  c.grid.k_max = r.num("grid", "k_max", c.grid.k_max);
  c.grid.mu = r.num("grid", "mu", 0.0);
  c.grid.points = r.list("grid", "points");
  c.grid.weights = r.list("grid", "weights");

  if (r.find("truncation", "modes")) c.modes = static_cast<int>(r.integer("truncation", "modes", 0));
  r.need("truncation", "nmax");
  c.nmax = static_cast<int>(r.integer("truncation", "nmax", 0));

  c.form.kind = parse_form_kind(r.word("model", "form_factor", "nelson"));
  c.form.coupling = r.num("model", "coupling", 1.0);
  c.form.sigma = r.num("model", "sigma", c.form.sigma);
  c.form.sigma0 = r.num("model", "sigma0", 0.0);
  c.form.table = r.list("model", "table");
  c.A = r.matrix("model", "A");
  c.B = r.matrix("model", "B");
  c.spin_cap = static_cast<int>(r.integer("model", "spin_cap", kDefaultSpinCap));
  c.P = r.list("model", "P");
  const std::string kernel = r.word("model", "kernel", "regular");
  if (kernel == "regular") {
    c.kernel = ChiKind::regular;
  } else if (kernel == "singular") {
    c.kernel = ChiKind::singular;
  } else {
    throw ConfigError("model.kernel must be regular or singular");
  }

  c.sweep_param = parse_sweep(r.need("sweep", "param").value);
  r.need("sweep", "values");
  c.sweep_values = r.list("sweep", "values");

  c.solver.tol = r.num("solver", "tol", c.solver.tol);
  c.solver.max_iter = static_cast<int>(r.integer("solver", "max_iter", c.solver.max_iter));
  c.solver.k_lowest = static_cast<int>(r.integer("solver", "k_lowest", c.solver.k_lowest));
  const long long seed = r.integer("solver", "seed", static_cast<long long>(c.solver.seed));
  if (seed < 0) throw ConfigError("solver.seed must be nonnegative");
  c.solver.seed = static_cast<std::uint64_t>(seed);
  c.output = r.word("output", "path", "");

  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "[grid]\n"
     << "dimension = " << c.grid.dimension << "\n"
     << "kind = " << (c.grid.kind == GridKind::logarithmic ? "log" : to_string(c.grid.kind))
     << "\n"
     << "nodes = " << c.grid.nodes << "\n"
     << "k_min = " << fmt(c.grid.k_min) << "\n"
     << "k_max = " << fmt(c.grid.k_max) << "\n"
     << "mu = " << fmt(c.grid.mu) << "\n";
  if (!c.grid.points.empty()) os << "points = " << join(c.grid.points) << "\n";
  if (!c.grid.weights.empty()) os << "weights = " << join(c.grid.weights) << "\n";
  os << "\n[truncation]\n";
  if (c.modes) os << "modes = " << *c.modes << "\n";
  os << "nmax = " << c.nmax << "\n";
  os << "\n[model]\n"
     << "type = " << to_string(c.model) << "\n"
     << "form_factor = " << form_name(c.form.kind) << "\n"
     << "coupling = " << fmt(c.form.coupling) << "\n"
     << "sigma = " << fmt(c.form.sigma) << "\n"
     << "sigma0 = " << fmt(c.form.sigma0) << "\n";
  if (!c.form.table.empty()) os << "table = " << join(c.form.table) << "\n";
  if (c.A.size()) os << "A = " << join(c.A) << "\n";
  if (c.B.size()) os << "B = " << join(c.B) << "\n";
  os << "spin_cap = " << c.spin_cap << "\n";
  if (!c.P.empty()) os << "P = " << join(c.P) << "\n";
  os << "kernel = " << (c.kernel == ChiKind::regular ? "regular" : "singular") << "\n";
  os << "\n[sweep]\n"
     << "param = " << to_string(c.sweep_param) << "\n"
     << "values = " << join(c.sweep_values) << "\n";
  os << "\n[solver]\n"
     << "tol = " << fmt(c.solver.tol) << "\n"
     << "max_iter = " << c.solver.max_iter << "\n"
     << "k_lowest = " << c.solver.k_lowest << "\n"
     << "seed = " << c.solver.seed << "\n";
  if (!c.output.empty()) os << "\n[output]\npath = " << c.output << "\n";
  return os.str();
}

}  // namespace renormfock
