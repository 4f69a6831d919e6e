#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "levyruin/config.hpp"
#include "levyruin/error.hpp"
#include "levyruin/pipeline.hpp"

using namespace levyruin;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("levyruin_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

int run_cli(const std::string& args, const std::string& log = "/dev/null") {
  const std::string cmd = std::string(LEVYRUIN_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

ErrorKind config_error_kind(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidArgument;
}

const char* kBrownian = "family = brownian\nA = 1\ndomain = [-1,1]\nx0 = 0\nresolution = 200\n";

}  // namespace

TEST_CASE("configuration parsing") {
  const RunConfig c = parse_config(
      "family = stable  ; tail index below\n"
      "domain = [-1,0] u [0.5,1]\n"
      "x0 = -0.5\n"
      "[params]\nalpha = 1.5\nscale = 2\nskew = 0.25\n"
      "[laplace]\ns = 0, 1.5\n"
      "[mc]\nseed = 42\npaths = 5000\n"
      "[stages]\nmc = on\nlaplace = off\n"
      "[tolerances]\nlaplace = 1e-4\n");
  CHECK(c.family == "stable");
  REQUIRE(c.domain.size() == 2);
  CHECK(c.domain[1].lo == 0.5);
  CHECK(c.x0 == -0.5);
  CHECK(c.laplace_s == std::vector<double>{0.0, 1.5});
  CHECK(*c.mc.seed == 42);
  CHECK(c.mc.paths == 5000);
  CHECK(c.stages.mc);
  CHECK_FALSE(c.stages.laplace);
  CHECK(c.tolerances.laplace == 1e-4);
  const LevyTriplet triplet = c.triplet();
  const auto& f = std::get<StableFamily>(triplet.measure());
  CHECK(f.alpha == 1.5);
  CHECK(f.skew == 0.25);
  CHECK(c.triplet_key() == parse_config(
      "family = stable\ndomain = [-1,1]\nx0 = 0\n[params]\nskew = 0.25\nscale = 2\nalpha = 1.5\n").triplet_key());
}

TEST_CASE("configuration errors") {
  CHECK(config_error_kind("domain = [-1,1]\nx0 = 0\n") == ErrorKind::Config);
  CHECK(config_error_kind("family = brownian\nA = 1\nx0 = 0\n") == ErrorKind::Config);
  CHECK(config_error_kind("family = brownian\nA = 1\ndomain = [-1,1]\nx0 = 0\nbogus = 1\n") == ErrorKind::Config);
  CHECK(config_error_kind("family = brownian\nA = 1\ndomain = [1,-1]\nx0 = 0\n") == ErrorKind::Config);
  CHECK(config_error_kind("family = brownian\nA = x\ndomain = [-1,1]\nx0 = 0\n") == ErrorKind::Config);
  CHECK(config_error_kind("family = warp\ndomain = [-1,1]\nx0 = 0\n") == ErrorKind::Config);
  CHECK(config_error_kind("family = cauchy\ndomain = [-1,1]\nx0 = 0\n[params]\nalpha = 1\n") == ErrorKind::Config);
  CHECK(config_error_kind("family = brownian\nA = 1\ndomain = [-1,1]\nx0 = 0\n[extra]\nk = 1\n") ==
        ErrorKind::Config);
  CHECK(config_error_kind("family = brownian\nA = -1\ndomain = [-1,1]\nx0 = 0\n") == ErrorKind::Config);

  RunConfig c = parse_config(std::string(kBrownian) + "[stages]\nmc = on\n");
  CHECK_THROWS_AS(require_seed(c), Error);
  c.mc.seed = 3;
  CHECK_NOTHROW(require_seed(c));
}

TEST_CASE("family parameter sets") {
  auto family = [](const std::string& body) {
    return parse_config("domain = [-1,1]\nx0 = 0\nA = 0.5\n" + body).triplet().family();
  };
  CHECK(family("family = poisson\n[params]\nrate = 2\njump = -0.5\n") == "poisson");
  CHECK(family("family = compound_poisson\n[params]\nrate = 1\nlaw = normal\nsd = 0.3\n") == "compound_poisson");
  CHECK(family("family = compound_poisson\n[params]\nrate = 1\nlaw = exponential\njump_rate = 2\nnegative = 1\n") ==
        "compound_poisson");
  CHECK(family("family = gamma\n[params]\nshape = 2\nrate = 3\n") == "gamma");
  CHECK(family("family = cgmy\n[params]\nC = 1\nG = 2\nM = 3\nY = 0.5\n") == "cgmy");
  CHECK(family("family = atoms\n[params]\npositions = -1, 0.5\nmasses = 1, 2\n") == "atoms");
  CHECK(config_error_kind("family = atoms\ndomain = [-1,1]\nx0 = 0\n[params]\npositions = -1, 0.5\nmasses = 1\n") ==
        ErrorKind::Config);

  // The tempered power-law density reproduces the CGMY symbol with C = G = M.
  const LevyTriplet density =
      parse_config("family = density\ndomain = [-1,1]\nx0 = 0\n[params]\nprofile = tempered_power\nC = 1\nalpha = 0.5\n"
                   "lambda = 5\n")
          .triplet();
  const LevyTriplet cgmy(0.0, 0.0, CgmyFamily{1.0, 5.0, 5.0, 0.5});
  CHECK(classify_type(density) == ProcessType::TypeII);
  for (double z : {0.5, 3.0}) {
    CHECK(std::abs(levy_symbol(density, z) - levy_symbol(cgmy, z)) <= 1e-7 * std::abs(levy_symbol(cgmy, z)));
  }
}

TEST_CASE("type I triplets are gated out of the spectral stages") {
  const fs::path out = scratch("gate");
  RunConfig c = parse_config("family = poisson\ndomain = [-0.5,1.5]\nx0 = 0\n");
  Pipeline p(c, out);
  CHECK(p.classify().type == ProcessType::TypeI);
  try {
    p.eigen();
    FAIL("expected the gate to reject a type I triplet");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Gate);
    CHECK(std::string(e.what()).find("type I process") != std::string::npos);
  }
}

TEST_CASE("comparison requires matching domains") {
  SpectralSide s{"aaaa", "k", 0.0, 1.0, 1.0, {-1.0, 1.0}, {1.0}};
  McSide m{"bbbb", "k", 0.0, 1000, RateFit{1.0, 0.1, 0.0, 0.1, 10}, {-1.0, 1.0}, {1.0}, {0.1}};
  CHECK_THROWS_AS(compare(s, m, Tolerances{}), Error);
  try {
    compare(s, m, Tolerances{});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Mismatch);
  }
  m.domain_hash = "aaaa";
  const auto r = compare(s, m, Tolerances{});
  REQUIRE(r.entries.size() == 3);
  CHECK(r.pass());
  m.fit.rate = 1.5;
  CHECK_FALSE(compare(s, m, Tolerances{}).pass());
}

TEST_CASE("Brownian reference run through the command line") {
  const fs::path dir = scratch("cli_brownian");
  const fs::path cfg = write_file(dir, "bm.ini", kBrownian);
  CHECK(run_cli("run --config " + cfg.string() + " --out " + (dir / "out").string()) == 0);
  std::ifstream in(dir / "out" / "summary.json");
  const auto j = nlohmann::json::parse(in);
  CHECK(j["eigen"]["lambda1"].get<double>() == doctest::Approx(0.81057).epsilon(1e-4));
  CHECK(j["status"] == 0);
  CHECK(j["mc"].is_null());
  for (const char* f : {"classify.json", "kernel_table.csv", "kernel.json", "assemble.json", "eigen.json",
                        "eigenfunctions.csv", "survival.csv", "laplace.csv", "manifest.json"}) {
    CAPTURE(f);
    CHECK(fs::exists(dir / "out" / f));
  }
  std::ifstream csv(dir / "out" / "survival.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "t,p");
}

TEST_CASE("command-line exit codes") {
  const fs::path dir = scratch("cli_codes");
  const fs::path out = dir / "out";
  const fs::path no_seed = write_file(dir, "noseed.ini", std::string(kBrownian) + "[stages]\nmc = on\n");
  CHECK(run_cli("run --config " + no_seed.string() + " --out " + out.string()) == 2);
  CHECK(run_cli("run --config " + (dir / "missing.ini").string() + " --out " + out.string()) == 2);
  CHECK(run_cli("frobnicate") == 2);

  const fs::path type1 = write_file(dir, "poisson.ini", "family = poisson\ndomain = [-0.5,1.5]\nx0 = 0\n");
  CHECK(run_cli("eigen --config " + type1.string() + " --out " + out.string()) == 1);
  std::ifstream in(out / "manifest.json");
  const auto manifest = nlohmann::json::parse(in);
  CHECK(manifest["error"].get<std::string>().find("type I process") != std::string::npos);
  CHECK(manifest["stages"]["classify"] == "ok");

  const fs::path cfg = write_file(dir, "bm.ini", kBrownian);
  CHECK(run_cli("classify --config " + cfg.string() + " --out " + out.string()) == 0);
  CHECK(run_cli("--threads 2 assemble --dump-matrices --config " + cfg.string() + " --out " + out.string()) == 0);
  CHECK(fs::exists(out / "B.csv"));
}

TEST_CASE("compare subcommand rejects artifacts from different domains") {
  const fs::path dir = scratch("cli_mismatch");
  const std::string common = "family = cauchy\nx0 = 0\nresolution = 50\n[mc]\npaths = 2000\ndt = 1e-3\nhorizon = 20\n";
  const fs::path a = write_file(dir, "a.ini", "domain = [-1,1]\n" + common);
  const fs::path b = write_file(dir, "b.ini", "domain = [-1,1.5]\n" + common);
  CHECK(run_cli("eigen --config " + a.string() + " --out " + (dir / "a").string()) == 0);
  CHECK(run_cli("mc-survival --seed 5 --config " + b.string() + " --out " + (dir / "b").string()) == 0);
  CHECK(run_cli("mc-survival --seed 5 --config " + a.string() + " --out " + (dir / "c").string()) == 0);
  const fs::path log = dir / "log.txt";
  CHECK(run_cli("compare --spectral " + (dir / "a" / "eigen.json").string() + " --mc " +
                    (dir / "b" / "mc.json").string(),
                log.string()) == 1);
  std::stringstream text;
  text << std::ifstream(log).rdbuf();
  CHECK(text.str().find("domain hash differs") != std::string::npos);
  run_cli("compare --spectral " + (dir / "a" / "eigen.json").string() + " --mc " + (dir / "c" / "mc.json").string(),
          log.string());
  std::stringstream matched;
  matched << std::ifstream(log).rdbuf();
  CHECK(matched.str().find("decay_rate") != std::string::npos);
  std::ifstream occ(dir / "c" / "mc_occupation.csv");
  std::string header;
  std::getline(occ, header);
  CHECK(header == "bin_left,bin_right,occ,ci");
}
