#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <doctest.h>

#include "nqdyn/config.hpp"
#include "nqdyn/errors.hpp"
#include "nqdyn/job.hpp"
#include "nqdyn/sha256.hpp"

using namespace nqdyn;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / "nqdyn_tests" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  os << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(NQDYN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

const char* kTinyTwopi =
    R"({"job":"twopi","label":"tiny","scheme":"second_order",
        "model":{"N":4,"I":2,"J":1.0,"U":0.5},
        "grid":{"dt":0.02,"n_steps":80}})";

}  // namespace

TEST_CASE("config parsing accepts a minimal job and applies defaults") {
  auto cfgs = parse_config(
      R"({"job":"exact","model":{"N":2,"I":2,"J":1.0,"U":0.0},
          "grid":{"dt":0.01,"n_steps":1000}})");
  REQUIRE(cfgs.size() == 1);
  CHECK(cfgs[0].kind == JobKind::Exact);
  CHECK(cfgs[0].bh.N == 2);
  CHECK(cfgs[0].bh.hbar == 1.0);
  CHECK(cfgs[0].bh_initial.kind == InitialKind::AllInOneWell);
}

TEST_CASE("config parsing rejects unknown keys and bad values by path") {
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"job":"exact","model":{"N":2,"I":2},"grid":{"dt":0.01,"n_steps":1},
                       "grids":{}})"),
      doctest::Contains("grids"), ValidationError);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"job":"exact","model":{"N":2,"I":2},
                       "grid":{"dt":-0.01,"n_steps":1}})"),
      doctest::Contains("dt"), ValidationError);
  CHECK_THROWS_AS(parse_config("{not json"), ValidationError);
}

TEST_CASE("sweep block expands with the interaction ratio held fixed") {
  auto cfgs = parse_config(
      R"({"job":"exact","label":"sweepy","model":{"N":20,"I":2,"J":1.0,"U":0.0},
          "grid":{"dt":0.01,"n_steps":10},
          "sweep":{"N":[20,40,80],"UN_over_J":4.0}})");
  REQUIRE(cfgs.size() == 3);
  CHECK(cfgs[0].bh.N == 20);
  CHECK(cfgs[0].bh.U == doctest::Approx(0.2));
  CHECK(cfgs[1].bh.N == 40);
  CHECK(cfgs[1].bh.U == doctest::Approx(0.1));
  CHECK(cfgs[2].bh.N == 80);
  CHECK(cfgs[2].bh.U == doctest::Approx(0.05));
  CHECK(cfgs[0].label != cfgs[1].label);
}

TEST_CASE("serialized config round-trips to a fixed point") {
  auto cfgs = parse_config(kTinyTwopi);
  REQUIRE(cfgs.size() == 1);
  std::string once = serialize_config(cfgs[0]);
  auto again = parse_config(once);
  REQUIRE(again.size() == 1);
  CHECK(serialize_config(again[0]) == once);
}

TEST_CASE("trajectory files round-trip at full precision") {
  Trajectory tr;
  tr.grid = TimeGrid(0.0, 0.1, 3);
  tr.t = {0.0, 0.1, 0.2, 0.30000000000000004};
  tr.column("a") = {1.0, 1.0 / 3.0, -2.5e-17, 4e300};
  tr.provenance["scheme"] = "demo";
  fs::path d = scratch_dir("roundtrip");
  std::string path = (d / "x.traj.txt").string();
  write_trajectory_file(tr, path);
  Trajectory rd = read_trajectory_file(path);
  CHECK(rd.t == tr.t);
  CHECK(rd.column("a") == tr.column("a"));
  CHECK(rd.provenance.at("scheme") == "demo");
  CHECK(rd.grid.dt() == tr.grid.dt());
}

TEST_CASE("job manifests reference every output by content hash") {
  fs::path d = scratch_dir("manifest");
  auto cfgs = parse_config(
      R"({"job":"exact","label":"mini","model":{"N":2,"I":2,"J":1.0,"U":0.0},
          "grid":{"dt":0.05,"n_steps":20}})");
  JobOptions opt;
  opt.out_dir = d.string();
  JobResult res = run_job(cfgs[0], opt);
  REQUIRE(res.outputs.size() == 1);
  std::string manifest = slurp(res.manifest_path);
  CHECK(manifest.find("\"status\": \"complete\"") != std::string::npos);
  CHECK(manifest.find(sha256_file_hex(res.outputs[0])) != std::string::npos);
}

TEST_CASE("interrupted jobs resume to a bit-identical trajectory") {
  auto cfgs = parse_config(kTinyTwopi);
  fs::path full_dir = scratch_dir("resume_full");
  fs::path cut_dir = scratch_dir("resume_cut");

  JobOptions full;
  full.out_dir = full_dir.string();
  JobResult ref = run_job(cfgs[0], full);

  JobOptions cut;
  cut.out_dir = cut_dir.string();
  cut.checkpoint_every = 25;
  cut.max_steps = 30;  // stop partway with a checkpoint, like a kill would
  JobResult part = run_job(cfgs[0], cut);
  CHECK(part.outputs.empty());
  CHECK(slurp(part.manifest_path).find("\"status\": \"incomplete\"") != std::string::npos);

  JobOptions rest;
  rest.out_dir = cut_dir.string();
  JobResult done = resume_job(part.manifest_path, rest);
  REQUIRE(done.outputs.size() == 1);
  CHECK(slurp(done.outputs[0]) == slurp(ref.outputs[0]));
}

TEST_CASE("comparing a trajectory with itself reports zero deviation") {
  fs::path d = scratch_dir("selfcmp");
  auto cfgs = parse_config(
      R"({"job":"exact","label":"self","model":{"N":8,"I":2,"J":1.0,"U":0.5},
          "grid":{"dt":0.02,"n_steps":300}})");
  JobOptions opt;
  opt.out_dir = d.string();
  JobResult res = run_job(cfgs[0], opt);
  std::string traj = res.outputs[0];

  std::string cmp_cfg =
      std::string(R"({"job":"compare","label":"selfcmp","compare":{"oracle":")") + traj +
      R"(","trajectories":[{"label":"same","path":")" + traj + R"("}]}})";
  auto ccfgs = parse_config(cmp_cfg);
  JobResult rep = run_job(ccfgs[0], opt);
  std::string report = slurp(rep.outputs[0]);
  CHECK(report.find("\"max_deviation\"") != std::string::npos);
  // Every reported deviation of the run against itself is exactly zero.
  std::size_t pos = 0;
  while ((pos = report.find("\"n_1\": ", pos)) != std::string::npos) {
    pos += 7;
    CHECK(std::stod(report.substr(pos)) == 0.0);
  }
}

TEST_CASE("command line runner maps errors to documented exit codes") {
  fs::path d = scratch_dir("cli");
  write_file(d / "good.json",
             R"({"job":"exact","label":"ok","model":{"N":2,"I":2,"J":1.0,"U":0.0},
                 "grid":{"dt":0.05,"n_steps":10}})");
  write_file(d / "bad.json", R"({"job":"exact","modell":{}})");
  write_file(d / "huge.json",
             R"({"job":"exact","label":"big","model":{"N":500,"I":6,"J":1.0,"U":0.0},
                 "grid":{"dt":0.05,"n_steps":1}})");

  CHECK(run_cli("exact --config " + (d / "good.json").string() +
                " --out " + (d / "out").string()) == 0);
  CHECK(run_cli("exact --config " + (d / "bad.json").string() +
                " --out " + (d / "out").string()) == 2);
  CHECK(run_cli("exact --config " + (d / "huge.json").string() +
                " --out " + (d / "out").string()) == 4);
}
