#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "renormfock/modes.hpp"
#include "renormfock/spinboson.hpp"

namespace renormfock {

enum class ModelKind { vhm, sb, nelson_fiber, doi_demo };
enum class SweepParam { sigma, sigma0, nmax, nodes };

struct GridConfig {
  int dimension = 1;
  GridKind kind = GridKind::logarithmic;
  // Nodes per side for d = 1 signed grids, radial nodes for d = 3, cells per
  // axis for the d = 3 fiber product grid.
  int nodes = 4;
  double k_min = 0.1;
  double k_max = 10.0;
  double mu = 0.0;
  // kind = custom: signed momenta (d = 1) or radii (d = 3) and weights.
  std::vector<double> points;
  std::vector<double> weights;
};

struct SolverConfig {
  double tol = 1e-10;
  int max_iter = 2000;
  int k_lowest = 2;
  std::uint64_t seed = 20240601;
};

struct ExperimentConfig {
  ModelKind model = ModelKind::vhm;
  GridConfig grid;
  std::optional<int> modes;  // checked against the built grid when given
  int nmax = 4;
  FormFactorSpec form;
  CMat A;
  CMat B;
  int spin_cap = kDefaultSpinCap;
  std::vector<double> P;
  ChiKind kernel = ChiKind::regular;
  SweepParam sweep_param = SweepParam::sigma;
  std::vector<double> sweep_values;
  SolverConfig solver;
  std::string output;
};

// Line-based `key = value` text under `[section]` headers, `#` comments.
// Syntax errors carry the line number; constraint violations name the key
// (or the sweep point index). All throw ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& config);

// One sweep point with the swept parameter applied.
struct PointSetup {
  double sigma = 0.0;
  double sigma0 = 0.0;
  int nmax = 0;
  int nodes = 0;
};
PointSetup point_setup(const ExperimentConfig& config, std::size_t index);
ModeSet build_modes(const ExperimentConfig& config, const PointSetup& point);

std::string to_string(ModelKind kind);
std::string to_string(SweepParam param);
// Complex numbers written as `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i`.
cplx parse_complex(const std::string& token);

}  // namespace renormfock
