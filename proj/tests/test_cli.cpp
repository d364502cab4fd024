#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "lrsmooth/commands.hpp"
#include "lrsmooth/errors.hpp"
#include "lrsmooth/run_config.hpp"
#include "lrsmooth/text_format.hpp"

using namespace lrsmooth;
namespace fs = std::filesystem;

namespace {

fs::path scratch(std::string const &name) {
  fs::path const p = fs::temp_directory_path() / ("lrsmooth_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(std::string const &args) {
  std::string const cmd = std::string(LRSMOOTH_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int const status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string const kSmall = R"(
[run]
seed = 3

[grid]
nx = 6
ny = 6

[sources]
count = 4

[field]
n_anomalies = 3
amplitude_rank = 2

[mask]
ratio = 0.5
cluster_count = 3
)";

std::string small_solver(std::string const &name) {
  return kSmall + "\n[solver]\nname = " + name + "\n\n[vr]\nrank_k = 3\nmax_iters = 20\nschedule_period = 10\n"
                  "\n[fista]\nmax_iters = 100\n\n[lbfgs]\nrank_k = 3\nmax_iters = 100\n\n[output]\nsv_count = 5\n";
}

} // namespace

TEST_SUITE("run config") {
  TEST_CASE("defaults round trip through the resolved form") {
    RunConfig const c;
    std::string const text = format_run_config(c);
    CHECK(format_run_config(parse_run_config(text)) == text);
  }

  TEST_CASE("every shipped config parses and re-serializes stably") {
    for (auto const &e : fs::directory_iterator(LRSMOOTH_CONFIG_DIR)) {
      CAPTURE(e.path().string());
      auto const c = load_run_config(e.path());
      auto const text = format_run_config(c);
      CHECK(format_run_config(parse_run_config(text)) == text);
    }
  }

  TEST_CASE("reference configs are encoded") {
    fs::path const dir = LRSMOOTH_CONFIG_DIR;
    auto const vr = load_run_config(dir / "reference.vr_noise.ini");
    CHECK(vr.solver.name == SolverName::Vr);
    CHECK(vr.solver.relax.gamma == 6.45e-7);
    CHECK(vr.solver.relax.rho0 == 2.0);
    CHECK(vr.solver.relax.rho_factor == 4.17);
    CHECK(vr.solver.relax.max_iters == 90);
    CHECK(vr.solver.relax.lambda_init == 0.0111);
    CHECK(*vr.solver.sigma == 3.719);
    auto const ex = load_run_config(dir / "reference.vr_exact.ini");
    CHECK(*ex.solver.sigma == 0.0);
    auto const fi = load_run_config(dir / "reference.fista.ini");
    CHECK(fi.solver.fista.lambda_fit == 2.2222e-4);
    CHECK(fi.solver.fista.max_iters == 1500);
    auto const lb = load_run_config(dir / "reference.lbfgs.ini");
    CHECK(lb.solver.lbfgs.lambda_fit == 1.1111e-4);
    CHECK(lb.solver.lbfgs.max_iters == 1500);
    auto const sm = load_run_config(dir / "reference.smooth_only.ini");
    CHECK(sm.solver.name == SolverName::SmoothOnly);
    CHECK(*sm.solver.sigma == 3.719);
    auto const lr = load_run_config(dir / "reference.lowrank_only.ini");
    CHECK(lr.solver.relax.rho0 == 1.0);
    CHECK(lr.solver.relax.max_iters == 500);
    CHECK(lr.solver.relax.schedule_period == 100);
  }

  TEST_CASE("unknown keys, unknown sections and bad values name the key path") {
    auto expect_error = [](std::string const &text, std::string const &needle) {
      try {
        parse_run_config(text, "cfg");
        FAIL("expected ValidationError");
      } catch (ValidationError const &e) {
        CHECK(std::string(e.what()).find(needle) != std::string::npos);
      }
    };
    expect_error("[vr]\ngama = 1\n", "vr.gama");
    expect_error("[solvr]\nname = vr\n", "solvr");
    expect_error("[vr]\ngamma = fast\n", "vr.gamma");
    expect_error("[solver]\nname = admm\n", "solver.name");
    expect_error("[vr]\neta = -1\n", "vr.eta");
    expect_error("[vr]\nmax_iters = 2.5\n", "vr.max_iters");
    expect_error("[run]\nseed = -4\n", "run.seed");
    expect_error("[mask]\nratio = 0\n", "mask.ratio");
    expect_error("[vr]\ngamma = 1\ngamma = 2\n", "duplicate");
  }

  TEST_CASE("special values") {
    auto const c = parse_run_config("[solver]\nsigma = budget\n[vr]\neta_f = spectrum\n");
    CHECK(!c.solver.sigma);
    CHECK(c.solver.relax.rho_factor_from_spectrum);
    auto const d = parse_run_config("[solver]\nname = lowrank_only\npreset = reference\n");
    CHECK(d.eta == 1.0);
  }

  TEST_CASE("seed changes the data seeds but not the grid") {
    RunConfig a, b;
    b.set_seed(99);
    CHECK(a.dataset.grid.nx == b.dataset.grid.nx);
    CHECK(a.dataset.mask.seed != b.dataset.mask.seed);
  }
}

TEST_SUITE("cli") {
  TEST_CASE("exit codes for bad input") {
    auto const dir = scratch("bad");
    write_file(dir / "bad.ini", "[vr]\ngama = 1\n");
    CHECK(run("generate --config " + (dir / "bad.ini").string() + " --out " + (dir / "g").string()) == 2);
    CHECK(run("solve --out " + (dir / "s").string()) == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("solve --data " + dir.string() + " --out " + (dir / "s").string()) == 2); // no data files
  }

  TEST_CASE("generate, solve, compare and svd on a small grid") {
    auto const dir = scratch("small");
    write_file(dir / "gen.ini", kSmall);
    REQUIRE(run("generate --config " + (dir / "gen.ini").string() + " --out " + (dir / "data").string()) == 0);
    for (auto f : {"grid.meta", "truth.csv", "observed.csv", "dataset.ini", "config.ini"}) CHECK(fs::exists(dir / "data" / f));

    std::string runs;
    for (std::string name : {"vr", "smooth_only", "lowrank_only", "fista", "lbfgs", "vr_exact"}) {
      write_file(dir / (name + ".ini"), small_solver(name));
      int const code = run("solve --config " + (dir / (name + ".ini")).string() + " --data " + (dir / "data").string() +
                           " --out " + (dir / name).string());
      CHECK(code == 0);
      CHECK(fs::exists(dir / name / "report.csv"));
      CHECK(fs::exists(dir / name / "timing.csv"));
      CHECK(fs::exists(dir / name / "completed.csv"));
      runs += " " + (dir / name).string();
    }
    CHECK(fs::exists(dir / "vr" / "factor_L.csv"));
    CHECK(!fs::exists(dir / "smooth_only" / "factor_L.csv"));
    CHECK(read_file(dir / "vr" / "report.csv").find("seconds") == std::string::npos);

    REQUIRE(run("compare --out " + (dir / "cmp").string() + runs) == 0);
    std::string const table = read_file(dir / "cmp" / "comparison.csv");
    CHECK(table.rfind("algorithm,terminal_feasibility,time_s,rms_obs,rms_int\n", 0) == 0);
    CHECK(split(table, '\n').size() == 8u); // header, six rows, trailing empty

    REQUIRE(run("compare --out " + (dir / "one").string() + " " + (dir / "vr").string()) == 0);
    CHECK(split(read_file(dir / "one" / "comparison.csv"), '\n').size() == 3u);

    CHECK(run("svd " + (dir / "data" / "truth.csv").string() + " --count 500 --out " + (dir / "svd").string()) == 0);
    CHECK(split(read_file(dir / "svd" / "decay.csv"), '\n').size() == 14u); // clipped to 12 plus header
  }

  TEST_CASE("compare refuses runs on different data and can require vr to be best") {
    auto const dir = scratch("mismatch");
    write_file(dir / "gen.ini", kSmall);
    REQUIRE(run("generate --config " + (dir / "gen.ini").string() + " --out " + (dir / "d1").string()) == 0);
    REQUIRE(run("generate --config " + (dir / "gen.ini").string() + " --seed 4 --out " + (dir / "d2").string()) == 0);
    write_file(dir / "vr.ini", small_solver("vr"));
    write_file(dir / "lr.ini", small_solver("lowrank_only"));
    REQUIRE(run("solve --config " + (dir / "vr.ini").string() + " --data " + (dir / "d1").string() + " --out " +
                (dir / "a").string()) == 0);
    REQUIRE(run("solve --config " + (dir / "lr.ini").string() + " --data " + (dir / "d2").string() + " --out " +
                (dir / "b").string()) == 0);
    CHECK(run("compare --out " + (dir / "c").string() + " " + (dir / "a").string() + " " + (dir / "b").string()) == 2);
    CHECK(run("compare --require-vr-best --out " + (dir / "c").string() + " " + (dir / "b").string()) == 3);
  }

  TEST_CASE("generate is byte-identical across runs; seed alters values only") {
    auto const dir = scratch("det");
    write_file(dir / "gen.ini", kSmall);
    REQUIRE(run("generate --config " + (dir / "gen.ini").string() + " --out " + (dir / "a").string()) == 0);
    REQUIRE(run("generate --config " + (dir / "gen.ini").string() + " --out " + (dir / "b").string()) == 0);
    REQUIRE(run("generate --config " + (dir / "gen.ini").string() + " --seed 11 --out " + (dir / "c").string()) == 0);
    for (auto f : {"grid.meta", "truth.csv", "observed.csv", "dataset.ini", "config.ini"}) {
      CHECK(read_file(dir / "a" / f) == read_file(dir / "b" / f));
    }
    CHECK(read_file(dir / "a" / "observed.csv") != read_file(dir / "c" / "observed.csv"));
    auto const ca = load_run_config(dir / "a" / "config.ini"), cc = load_run_config(dir / "c" / "config.ini");
    CHECK(ca.dataset.grid.nx == cc.dataset.grid.nx);
    CHECK(cc.seed == 11u);
  }
}
