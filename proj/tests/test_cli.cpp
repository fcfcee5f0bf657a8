#include "slhf/cache.hpp"
#include "slhf/config.hpp"
#include "slhf/errors.hpp"
#include "slhf/pipeline.hpp"
#include "slhf/units.hpp"

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace slhf;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const char* env = std::getenv("SLHF_TEST_TMP");
  const fs::path root = env ? fs::path(env) : fs::temp_directory_path() / "slhf-cli-tests";
  const fs::path dir = root / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string without_timestamp(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind("# timestamp:", 0) != 0) out += line + "\n";
  return out;
}

const char* small_hydrogen = R"(
[atom]
Z = 1
configuration = 1s1
[grid]
points = 120
r_max = 40
map = 5
[response]
kernel = hartree+slater-x
[scan]
start = 14
stop = 20
step = 1
refine = false
)";

} // namespace

TEST_CASE("minimal config fills defaults", "[cli]") {
  const auto c = parse_config("[atom]\nZ = 1\nconfiguration = 1s1\n");
  CHECK(c.nuclear_charge == 1);
  CHECK(c.grid.points == 400);
  CHECK(c.grid.r_max == 150.0);
  CHECK(c.kernel == KernelVariant::hartree_alda_x);
  CHECK(c.mode == ResponseMode::td);
  CHECK(c.absorber.enabled);
  CHECK(c.shifts.empty());
}

TEST_CASE("energy shift map", "[cli]") {
  const auto c = parse_config("[atom]\nZ = 10\nconfiguration = 1s2 2s2 2p6\n[shifts]\n2s↑ = −48.47 eV\n");
  REQUIRE(c.shifts.size() == 1);
  CHECK(c.shifts[0].first == "2s↑");
  CHECK(c.shifts[0].second == -48.47);
  const auto ro = c.response_options();
  REQUIRE(ro.shifts.overrides.size() == 1);
  CHECK(ro.shifts.overrides[0].second == -48.47 / units::hartree_ev);
  CHECK_THAT(ro.shifts.overrides[0].second, WithinAbs(-1.782, 1e-3));
  CHECK(ro.shifts.overrides[0].first.spin == Spin::up);
}

TEST_CASE("range violations name the field", "[cli]") {
  try {
    parse_config("[atom]\nZ = 1\nconfiguration = 1s1\n[scan]\nstep = -0.05\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "scan.step");
  }
}

TEST_CASE("every violation is listed", "[cli]") {
  const std::string text = "[atom]\nZ = 1\nconfiguration = 1s1\ncolour = blue\n[scan]\nstep = 0\n"
                           "[grid]\npoints = 4\n[shifts]\n2p = -3\n";
  try {
    parse_config(text);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK_THAT(msg, ContainsSubstring("atom.colour"));
    CHECK_THAT(msg, ContainsSubstring("scan.step"));
    CHECK_THAT(msg, ContainsSubstring("grid.points"));
    CHECK_THAT(msg, ContainsSubstring("shifts.2p"));
    CHECK(e.field() == "atom.colour");
  }
}

TEST_CASE("referenced orbitals must exist", "[cli]") {
  CHECK_THROWS_AS(parse_config("[atom]\nZ = 10\nconfiguration = [Ne]\n[absorber]\noverride.3d = 0.1, 50\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("[atom]\nZ = 10\nconfiguration = [Ne]\n[tables]\ntransitions = 3s->3p\n"),
                  ConfigError);
  CHECK_NOTHROW(parse_config("[atom]\nZ = 10\nconfiguration = [Ne]\n[tables]\ntransitions = 2s->3p\n"));
  CHECK_THROWS_AS(parse_config("[atom]\nZ = 1\n[nonsense]\n"), ConfigError);
}

TEST_CASE("emit and parse round trip", "[cli]") {
  RunConfig c;
  c.nuclear_charge = 10;
  c.configuration = "1s↓1s↑2s↓2s↑2p↓³2p↑²3s↑";
  c.grid = {321, 123.4567890123, 33.3};
  c.scf.use_lyp = true;
  c.scf.mixing = 0.1 + 0.2;
  c.absorber.strength = 1.0 / 3.0;
  c.absorber.overrides["3s↑"] = {0.05, 61.5};
  c.mode = ResponseMode::ti;
  c.kernel = KernelVariant::hartree_slater_x_numeric_c;
  c.scan.windows = {{22.9, 23.1}, {43.2, 43.6}};
  c.shifts = {{"2s↑", -48.47}, {"2p", -21.6}};
  c.fit.windows = {{43.25, 43.6}};
  c.fit.transitions = {"2s->3p"};
  c.tables.transitions = {"2s↑→2p↑", "2s->3p"};
  c.output.prefix = "ne3s";
  c.output.threads = 3;
  const auto text = emit_config(c);
  const auto back = parse_config(text);
  CHECK(back == c);
  CHECK(emit_config(back) == text);
  CHECK(parse_config(emit_config(RunConfig{})) == RunConfig{});
}

TEST_CASE("shipped sample configs are valid", "[cli]") {
  int count = 0;
  for (const auto& f : fs::directory_iterator(SLHF_CONFIG_DIR)) {
    if (f.path().extension() != ".ini") continue;
    INFO(f.path().filename().string());
    CHECK_NOTHROW(load_config(f.path().string()));
    ++count;
  }
  CHECK(count >= 5);
  const auto shifted = load_config(std::string(SLHF_CONFIG_DIR) + "/neon_shifted.ini");
  CHECK_THAT(shifted.response_options().shifts.overrides.at(0).second, WithinAbs(-1.782, 1e-5));
}

TEST_CASE("transition labels", "[cli]") {
  const auto [a, b] = parse_transition("2s↑→2p↑");
  CHECK(a.n == 2);
  CHECK(a.l == 0);
  CHECK(b.l == 1);
  CHECK(b.spin == Spin::up);
  const auto [c, d] = parse_transition("2s -> 3p");
  CHECK_FALSE(c.spin.has_value());
  CHECK(d.n == 3);
  CHECK_THROWS_AS(parse_transition("2s 3p"), ConfigError);
}

TEST_CASE("run modes", "[cli]") {
  CHECK(parse_run_mode("scan-td") == RunMode::scan_td);
  CHECK(to_string(parse_run_mode("tables")) == "tables");
  CHECK_THROWS_AS(parse_run_mode("plot"), ConfigError);
}

TEST_CASE("cache key depends on every SCF input", "[cli]") {
  const auto cfg = parse_configuration(10, "[Ne]");
  const ScfOptions o;
  const auto base = scf_cache_key(cfg, 200, 50.0, 5.0, o);
  CHECK(base.size() == 16);
  CHECK(scf_cache_key(cfg, 200, 50.0, 5.0, o) == base);
  CHECK(scf_cache_key(cfg, 201, 50.0, 5.0, o) != base);
  CHECK(scf_cache_key(cfg, 200, 50.0000001, 5.0, o) != base);
  CHECK(scf_cache_key(parse_configuration(10, "1s↓1s↑2s↓2s↑2p↓³2p↑²3s↑"), 200, 50.0, 5.0, o) != base);
  ScfOptions lyp;
  lyp.use_lyp = true;
  CHECK(scf_cache_key(cfg, 200, 50.0, 5.0, lyp) != base);
}

TEST_CASE("cached and fresh SCF states give the same curve", "[cli]") {
  const auto dir = scratch("cache");
  auto cfg = parse_config(small_hydrogen);
  const auto electrons = cfg.electron_configuration();
  const auto grid = build_grid(cfg.grid.points, cfg.grid.r_max, cfg.grid.map_param);
  bool hit = true;
  const auto fresh = cached_scf(electrons, grid, cfg.scf_options(), (dir / "c").string(), &hit);
  CHECK_FALSE(hit);
  const auto loaded = cached_scf(electrons, grid, cfg.scf_options(), (dir / "c").string(), &hit);
  CHECK(hit);
  CHECK(loaded.orbital(1, 0, Spin::up).energy == fresh.orbital(1, 0, Spin::up).energy);

  const ResponseEngine a(std::make_shared<const SpinOrbitalSet>(fresh), cfg.response_options());
  const ResponseEngine b(std::make_shared<const SpinOrbitalSet>(loaded), cfg.response_options());
  for (double ev : {14.0, 20.0, 35.0}) {
    const double w = units::to_hartree(ev);
    const double sa = a.evaluate(w).sigma_mb, sb = b.evaluate(w).sigma_mb;
    CHECK(std::abs(sa - sb) <= 1e-10 * std::abs(sa));
  }

  // A corrupt file is ignored and rewritten.
  for (const auto& f : fs::directory_iterator(dir / "c")) std::ofstream(f.path()) << "{not json";
  cached_scf(electrons, grid, cfg.scf_options(), (dir / "c").string(), &hit);
  CHECK_FALSE(hit);
}

TEST_CASE("pipeline writes reproducible artifacts", "[cli]") {
  const auto dir = scratch("pipeline");
  auto cfg = parse_config(small_hydrogen);
  cfg.output.directory = (dir / "out").string();
  cfg.output.cache = (dir / "cache").string();
  cfg.output.prefix = "h";
  RunContext ctx;
  ctx.threads = 2;

  const auto scf = run(cfg, RunMode::scf, ctx);
  REQUIRE(scf.exit_code == exit_code::ok);
  const auto report = slurp(dir / "out" / "h_scf.txt");
  CHECK_THAT(report, ContainsSubstring("# code_version:"));
  CHECK_THAT(report, ContainsSubstring("# timestamp:"));
  CHECK_THAT(report, ContainsSubstring("1s↑\t1.000000\t-0.5000"));

  const auto first = run(cfg, RunMode::scan_td, ctx);
  REQUIRE(first.exit_code == exit_code::ok);
  const auto a = slurp(dir / "out" / "h_td.dat");
  const auto second = run(cfg, RunMode::scan_td, ctx);
  REQUIRE(second.exit_code == exit_code::ok);
  const auto b = slurp(dir / "out" / "h_td.dat");
  CHECK(without_timestamp(a) == without_timestamp(b));
  CHECK_THAT(a, ContainsSubstring("# gaps: 0"));

  // Different thread counts give identical numbers.
  ctx.threads = 1;
  run(cfg, RunMode::scan_td, ctx);
  const auto c = slurp(dir / "out" / "h_td.dat");
  auto numbers = [](const std::string& t) { return t.substr(t.find("omega_eV")); };
  CHECK(numbers(a) == numbers(c));

  const auto ti = run(cfg, RunMode::scan_ti, ctx);
  REQUIRE(ti.exit_code == exit_code::ok);
  std::ifstream in(dir / "out" / "h_ti.dat");
  const auto curve = read_curve(in);
  CHECK(curve.mode == ResponseMode::ti);
  CHECK(curve.points.size() == 7);
}

TEST_CASE("pipeline exit codes", "[cli]") {
  const auto dir = scratch("exit");
  auto cfg = parse_config(small_hydrogen);
  cfg.output.directory = (dir / "out").string();
  cfg.output.cache = "";
  cfg.nuclear_charge = 10;
  cfg.configuration = "[Ne]";
  cfg.scf.max_iterations = 2;
  CHECK(run(cfg, RunMode::scf).exit_code == exit_code::scf);

  auto bad = parse_config(small_hydrogen);
  bad.output.directory = (dir / "out").string();
  bad.configuration = "1s3";
  CHECK(run(bad, RunMode::scf).exit_code == exit_code::config);
}
