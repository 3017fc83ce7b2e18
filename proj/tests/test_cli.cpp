#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "renormfock/config.hpp"
#include "renormfock/errors.hpp"
#include "renormfock/sweep.hpp"

using namespace renormfock;
namespace fs = std::filesystem;

namespace {

// One custom mode at k = 2 with weight 1 and table value 1: v = 1, ω = 2, so
// the ground energy is −|v|²/ω = −0.5.
const char* kMinimalVhm = R"(# single mode van Hove model
[grid]
dimension = 1
kind = custom
points = 2
weights = 1
mu = 0

[truncation]
modes = 1
nmax = 20

[model]
type = vhm
form_factor = custom
table = 1
sigma = 5

[sweep]
param = sigma
values = 5
)";

const char* kSbTemplate = R"([grid]
dimension = 1
kind = log
nodes = 1
k_min = 0.5
k_max = 2

[truncation]
nmax = 4

[model]
type = sb
form_factor = ww
coupling = 0.3
sigma = 2
A = 1, 0, 0, -1
B = @B@

[sweep]
param = sigma0
values = 0.1
)";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& s, const std::string& part) {
  return s.find(part) != std::string::npos;
}

// Drops the final (runtime) column of every CSV line.
std::string without_runtime(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir() {
  const fs::path d = fs::temp_directory_path() / ("renormfock_cli_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(RENORMFOCK_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("parse_complex") {
  CHECK(parse_complex("1.5") == cplx(1.5, 0.0));
  CHECK(parse_complex("2i") == cplx(0.0, 2.0));
  CHECK(parse_complex("i") == cplx(0.0, 1.0));
  CHECK(parse_complex("-i") == cplx(0.0, -1.0));
  CHECK(parse_complex("0.5-0.25i") == cplx(0.5, -0.25));
  CHECK(parse_complex("-1+3i") == cplx(-1.0, 3.0));
  CHECK(parse_complex("1e-3+2e1i") == cplx(1e-3, 20.0));
  CHECK_THROWS_AS(parse_complex("abc"), ConfigError);
}

TEST_CASE("parse_config") {
  const ExperimentConfig c = parse_config(kMinimalVhm);
  CHECK(c.model == ModelKind::vhm);
  CHECK(c.grid.kind == GridKind::custom);
  CHECK(c.nmax == 20);
  REQUIRE(c.modes.has_value());
  CHECK(*c.modes == 1);
  CHECK(c.sweep_values == std::vector<double>{5.0});

  // Round trip through the canonical text.
  const std::string text = to_text(c);
  const ExperimentConfig again = parse_config(text);
  CHECK(to_text(again) == text);
  CHECK(again.grid.points == c.grid.points);
  CHECK(again.form.table == c.form.table);
  CHECK(again.solver.seed == c.solver.seed);

  const std::string sb = replace(kSbTemplate, "@B@", "0, 1, 1, 0");
  const ExperimentConfig s = parse_config(sb);
  CHECK(s.B.rows() == 2);
  CHECK(s.B(0, 1) == cplx(1.0));
  CHECK(parse_config(to_text(s)).B == s.B);
}

TEST_CASE("config errors") {
  // σ₀ ≥ σ at the second point.
  std::string bad = replace(kMinimalVhm, "param = sigma\nvalues = 5", "param = sigma0\nvalues = 0.1, 5");
  CHECK(contains(config_error(bad), "sweep point 1"));

  // Nilpotent B is not normal.
  const std::string jordan = replace(kSbTemplate, "@B@", "0, 1, 0, 0");
  CHECK(contains(config_error(jordan), "normality"));
  CHECK(contains(config_error(jordan), "model.B"));

  // Non-Hermitian A.
  std::string a = replace(kSbTemplate, "@B@", "0, 1, 1, 0");
  a = replace(a, "A = 1, 0, 0, -1", "A = 1, 2, 0, -1");
  CHECK(contains(config_error(a), "model.A"));

  // Syntax errors carry the line number.
  const std::string syntax = replace(kMinimalVhm, "nmax = 20", "nmax 20");
  CHECK(contains(config_error(syntax), "line 11"));
  CHECK(contains(config_error("[grid\ndimension = 1\n"), "line 1"));

  CHECK(contains(config_error(replace(kMinimalVhm, "nmax = 20", "nmax = 20\ncolour = red")),
                 "colour"));
  CHECK(contains(config_error(std::string(kMinimalVhm) + "[extras]\n"),
                 "extras"));
  CHECK(contains(config_error(replace(kMinimalVhm, "nmax = 20", "nmax = 20\nnmax = 21")),
                 "nmax"));
  CHECK(contains(config_error(replace(kMinimalVhm, "modes = 1", "modes = 3")), "modes"));
  CHECK_FALSE(config_error(replace(kMinimalVhm, "values = 5", "values =")).empty());
}

TEST_CASE("run_sweep") {
  const ExperimentConfig c = parse_config(kMinimalVhm);
  const auto rows = run_sweep(c, {});
  REQUIRE(rows.size() == 1);
  CHECK(std::abs(rows[0].e0 + 0.5) < 1e-10);
  CHECK(rows[0].model == "vhm");
  CHECK(rows[0].dim == 21);
  CHECK(rows[0].gap == doctest::Approx(2.0));

  ExperimentConfig twice = c;
  twice.sweep_values = {5.0, 5.0};
  const auto two = run_sweep(twice, {});
  REQUIRE(two.size() == 2);
  CHECK(without_runtime(csv_line(two[0])) == without_runtime(csv_line(two[1])));

  CHECK(csv_header() ==
        "model,sweep_param,sweep_value,mu,modes,nmax,dim,sigma,sigma0,e0,gap,num_expect,"
        "vac_overlap,resolvent_gap,tail_bound,metric_cond,runtime_ms");
  const std::string csv = to_csv(two);
  CHECK(csv.rfind(csv_header() + "\n", 0) == 0);
  CHECK_FALSE(contains(csv, "\r"));
  // e0 is the tenth field, written with 17 significant digits.
  std::istringstream fields(csv_line(rows[0]));
  std::string field;
  for (int i = 0; i < 10; ++i) std::getline(fields, field, ',');
  CHECK(std::abs(std::stod(field) - rows[0].e0) == 0.0);
}

TEST_CASE("thread count does not change results") {
  const std::string text = replace(kSbTemplate, "@B@", "0, 1, 1, 0");
  ExperimentConfig c = parse_config(replace(text, "values = 0.1", "values = 1.5, 1, 0.7, 0.4, 0.1"));
  c.grid.nodes = 2;
  c.nmax = 3;
  RunOptions one;
  one.threads = 1;
  RunOptions eight;
  eight.threads = 8;
  const std::string a = without_runtime(to_csv(run_sweep(c, one)));
  const std::string b = without_runtime(to_csv(run_sweep(c, eight)));
  CHECK(a == b);
  RunOptions seeded = eight;
  seeded.seed = 7;
  CHECK(without_runtime(to_csv(run_sweep(c, seeded))) ==
        without_runtime(to_csv(run_sweep(c, seeded))));
}

TEST_CASE("failures keep partial results") {
  // A massless one-dimensional fiber needs an infrared cutoff, so the last
  // point cannot be evaluated.
  const char* text = R"([grid]
dimension = 1
kind = log
nodes = 1
k_min = 0.5
k_max = 2

[truncation]
nmax = 3

[model]
type = nelson-fiber
coupling = 0.5
sigma = 2
P = 0.1

[sweep]
param = sigma0
values = 0.5, 0.25, 0
)";
  const ExperimentConfig c = parse_config(text);
  std::vector<SweepRow> done;
  try {
    run_sweep(c, {}, &done);
    FAIL("expected the sweep to fail");
  } catch (const Error& e) {
    CHECK(contains(e.what(), "sweep point 2"));
  }
  CHECK(done.size() == 2);

  const fs::path dir = scratch_dir();
  const fs::path out = dir / "fail.csv";
  CHECK_THROWS(run_sweep_to_file(c, out.string(), {}));
  const fs::path partial = dir / "fail.csv.partial";
  REQUIRE(fs::exists(partial));
  const std::string body = slurp(partial);
  CHECK(body.rfind(csv_header(), 0) == 0);
  CHECK(std::count(body.begin(), body.end(), '\n') == 3);
  fs::remove_all(dir);
}

TEST_CASE("command line") {
  const fs::path dir = scratch_dir();
  const fs::path cfg = dir / "vhm.cfg";
  std::ofstream(cfg) << kMinimalVhm;
  const fs::path bad = dir / "bad.cfg";
  std::ofstream(bad) << replace(kMinimalVhm, "nmax = 20", "nmax 20");

  CHECK(run_binary("validate-config --config " + cfg.string()) == 0);
  CHECK(run_binary("validate-config --config " + bad.string()) == 2);
  CHECK(run_binary("validate-config --config " + (dir / "missing.cfg").string()) == 2);

  const fs::path out1 = dir / "t1.csv", out4 = dir / "t4.csv";
  CHECK(run_binary("run --config " + cfg.string() + " --out " + out1.string() + " --threads 1") == 0);
  CHECK(run_binary("run --config " + cfg.string() + " --out " + out4.string() +
                   " --threads 4 --seed 11") == 0);
  const std::string a = slurp(out1), b = slurp(out4);
  CHECK(a.rfind(csv_header() + "\n", 0) == 0);
  CHECK(without_runtime(a) == without_runtime(b));

  // The environment variable sets the default thread count.
  const fs::path out_env = dir / "env.csv";
  ::setenv("RENORMFOCK_THREADS", "3", 1);
  CHECK(default_threads() == 3);
  CHECK(run_binary("run --config " + cfg.string() + " --out " + out_env.string()) == 0);
  ::unsetenv("RENORMFOCK_THREADS");
  CHECK(default_threads() == 1);
  CHECK(without_runtime(slurp(out_env)) == without_runtime(a));

  CHECK(run_binary("run --config " + cfg.string()) != 0);
  CHECK(run_binary("no-such-command") != 0);
  fs::remove_all(dir);
}
