#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "perfhom/config.hpp"
#include "perfhom/error.hpp"
#include "perfhom/pipeline.hpp"

using namespace perfhom;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ErrorKind kind_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("config was accepted: " << text);
  return ErrorKind::Argument;
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

// small enough for a unit test
const char* kTiny = R"(
[geometry]
override = 0 0 disk 0.5 0.5 0.32 0.32 0
window = 3
a2_samples = 16
[corrector]
resolution = 64
truncation = 2
growth_truncation = 3
trials = 40
[macro]
eps = 0.5 0.25 0.125
cell_resolution = 64 64 64
[poincare]
eps = 0.5 0.25
cell_resolution = 16
box_cell_resolution = 64
coupling_resolution = 64
[run]
seed = 9
)";

}  // namespace

TEST_CASE("defaults round trip") {
  const ExperimentConfig def;
  CHECK(parse_config(serialize_config(def)) == def);
  CHECK(parse_config("") == def);
}

TEST_CASE("shipped configs round trip") {
  for (const char* name : {"golden.ini", "golden_constant.ini", "periodic.ini", "decay.ini", "smoke.ini"}) {
    const auto cfg = load_config(std::string(PERFHOM_SOURCE_DIR) + "/configs/" + name);
    const auto text = serialize_config(cfg);
    CHECK(parse_config(text) == cfg);
    CHECK(serialize_config(parse_config(text)) == text);
  }
}

TEST_CASE("parsed values") {
  const auto cfg = parse_config(R"(
# comment
[geometry]
pattern = ellipse
center = 0.5 0.45
radii = 0.3 0.2
rotation = 0.25
override = 1 -2 disk 0.5 0.5 0.2 0.2 0
override = 0 0 ellipse 0.5 0.5 0.3 0.25 0.1
decay_amplitude = 0.05
decay_ratio = 0.5
[macro]
source = constant
constant_value = 2
eps = 0.25 0.125 0.0625
cell_resolution = 64 64 64
corrector_choice = periodic
[run]
jobs = 2
)");
  CHECK(cfg.geometry.pattern.kind == ShapeKind::Ellipse);
  CHECK(cfg.geometry.pattern.r2 == 0.2);
  CHECK(cfg.geometry.overrides.size() == 2);
  CHECK(cfg.geometry.overrides.at({1, -2}).r1 == 0.2);
  CHECK(cfg.macro.source.kind == Source::Kind::Constant);
  CHECK(cfg.macro.eps == std::vector<double>{0.25, 0.125, 0.0625});
  CHECK(cfg.macro.choice == CorrectorChoice::PeriodicOnly);
  CHECK(cfg.run.jobs == 2);
  const auto f = cfg.field();
  CHECK(f.is_perturbed({1, -2}));
  CHECK(f.defects().decay.has_value());
  CHECK(parse_config(serialize_config(cfg)) == cfg);
}

TEST_CASE("rejected configs") {
  CHECK(kind_of("[geometry]\nbogus = 1\n") == ErrorKind::Config);
  CHECK(kind_of("[nowhere]\n") == ErrorKind::Config);
  CHECK(kind_of("key_outside = 1\n") == ErrorKind::Config);
  CHECK(kind_of("[corrector]\nresolution = 32\n") == ErrorKind::Config);
  CHECK(kind_of("[corrector]\nresolution = abc\n") == ErrorKind::Config);
  CHECK(kind_of("[macro]\neps = 0.3 0.125 0.0625\n") == ErrorKind::Config);
  CHECK(kind_of("[macro]\neps = 0.25 0.125\ncell_resolution = 64 64 64\n") == ErrorKind::Config);
  CHECK(kind_of("[geometry]\ndecay_ratio = 1.5\n") == ErrorKind::Config);
  CHECK(kind_of("[geometry]\nradii = 0.6 0.6\n") == ErrorKind::Config);
  CHECK(kind_of("[run]\njobs = 0\n") == ErrorKind::Config);
  CHECK(kind_of("[geometry]\nwindow = 3\nwindow\n") == ErrorKind::Config);
  CHECK(error_of("\n\n[geometry]\nbogus = 1\n").find("line 4") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/perfhom.ini"), Error);
}

TEST_CASE("set_config_value") {
  ExperimentConfig cfg;
  set_config_value(cfg, "corrector", "resolution", "256");
  CHECK(cfg.corrector.resolution == 256);
  CHECK_THROWS_AS(set_config_value(cfg, "corrector", "colour", "red"), Error);
  CHECK(cfg.corrector.resolution == 256);
}

TEST_CASE("commands") {
  CHECK(parse_command("geometry-check") == Command::GeometryCheck);
  CHECK(parse_command("all") == Command::All);
  CHECK_FALSE(parse_command("solve"));
  CHECK(std::string(to_string(Command::Poincare)) == "poincare");
  CHECK(exit_code_for(ErrorKind::Config) == 2);
  CHECK(exit_code_for(ErrorKind::NoConvergence) == 3);
  CHECK(exit_code_for(ErrorKind::Breakdown) == 3);
}

TEST_CASE("geometry-check on the golden config") {
  auto cfg = load_config(std::string(PERFHOM_SOURCE_DIR) + "/configs/golden.ini");
  const fs::path out = fs::temp_directory_path() / "perfhom_test_geometry";
  fs::remove_all(out);
  const auto rep = run(Command::GeometryCheck, cfg, {out.string(), 1, false});
  CHECK(rep.all_pass());
  CHECK(rep.exit_code() == 0);
  const std::string text = slurp(out / "geometry_report.txt");
  std::istringstream in(text);
  std::string line;
  double alpha = -1, d0 = -1, tail = -1, ball = -1;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "cell") {
      int i, j;
      ls >> i >> j;
      if (i == 0 && j == 0) ls >> alpha;
    }
    if (key == "delta0") ls >> d0;
    if (key == "alpha_tail_bound") ls >> tail;
    if (key == "inscribed_radius_min") ls >> ball;
  }
  CHECK(alpha == doctest::Approx(0.07).epsilon(1e-12));
  CHECK(d0 == doctest::Approx(0.18).epsilon(1e-12));
  CHECK(tail >= 0.0);
  CHECK(tail < 1e-6);
  CHECK(ball >= 0.2);
  CHECK(rep.summary().find("PASS delta0 ") != std::string::npos);
}

TEST_CASE("geometry-check flags a hole touching its cell") {
  auto cfg = parse_config("[geometry]\noverride = 2 0 disk 0.75 0.5 0.3 0.3 0\nwindow = 3\n");
  const fs::path out = fs::temp_directory_path() / "perfhom_test_a1";
  const auto rep = run(Command::GeometryCheck, cfg, {out.string(), 1, false});
  CHECK_FALSE(rep.all_pass());
  CHECK(rep.exit_code() == 1);
  CHECK(rep.summary().find("FAIL a1_holes_inside_cells (2,0)") != std::string::npos);
}

TEST_CASE("study self-test") {
  const fs::path out = fs::temp_directory_path() / "perfhom_test_selftest";
  const auto rep = run(Command::Study, ExperimentConfig{}, {out.string(), 1, true});
  CHECK(rep.all_pass());
  CHECK(rep.summary().find("PASS self_test_slope 2 2") != std::string::npos);
  CHECK(fs::exists(out / "study.csv"));
}

TEST_CASE("corrector without a defect") {
  auto cfg = parse_config(kTiny);
  cfg.geometry.overrides.clear();
  const fs::path out = fs::temp_directory_path() / "perfhom_test_nodefect";
  fs::remove_all(out);
  const auto rep = run(Command::Corrector, cfg, {out.string(), 1, false});
  CHECK(rep.all_pass());
  std::istringstream in(slurp(out / "w_tilde.txt"));
  std::string line;
  int values = 0;
  for (int header = 0; header < 4; ++header) std::getline(in, line);
  while (std::getline(in, line)) {
    CHECK(std::stod(line) == 0.0);
    ++values;
  }
  CHECK(values > 0);
}

TEST_CASE("study and poincare outputs are deterministic") {
  const auto cfg = parse_config(kTiny);
  const fs::path a = fs::temp_directory_path() / "perfhom_test_det_a";
  const fs::path b = fs::temp_directory_path() / "perfhom_test_det_b";
  fs::remove_all(a);
  fs::remove_all(b);
  for (const auto cmd : {Command::Study, Command::Poincare}) {
    run(cmd, cfg, {a.string(), 1, false});
    run(cmd, cfg, {b.string(), 2, false});
  }
  int compared = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
    ++compared;
  }
  CHECK(compared >= 3);
}
