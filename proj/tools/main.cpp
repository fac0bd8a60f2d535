#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nqdyn/config.hpp"
#include "nqdyn/errors.hpp"
#include "nqdyn/job.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw nqdyn::ValidationError("cannot read config file " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::string resume_manifest;
  long checkpoint_every = 0;
  int threads = 1;
  bool verify = false;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool config_required) {
  auto* c = cmd->add_option("--config", a.config_path, "job config file (JSON)");
  if (config_required) c->check(CLI::ExistingFile);
  cmd->add_option("--out", a.out_dir, "output directory");
  cmd->add_option("--checkpoint-every", a.checkpoint_every,
                  "steps between checkpoints (0 disables)");
  cmd->add_option("--resume", a.resume_manifest, "resume from a manifest")
      ->check(CLI::ExistingFile);
  cmd->add_option("--threads", a.threads, "worker threads (speed only, never results)");
  cmd->add_flag("--verify", a.verify, "run the dt-halving self-convergence check");
}

int run_command(const CommonArgs& a, const std::string& expected_kind) {
  nqdyn::JobOptions opt;
  opt.out_dir = a.out_dir;
  opt.checkpoint_every = a.checkpoint_every;
  opt.threads = a.threads;

  if (!a.resume_manifest.empty()) {
    nqdyn::JobResult r = nqdyn::resume_job(a.resume_manifest, opt);
    std::cout << "resumed -> " << r.manifest_path << "\n";
    return nqdyn::exit_ok;
  }
  if (a.config_path.empty())
    throw nqdyn::ValidationError("either --config or --resume is required");
  std::vector<nqdyn::RunConfig> jobs = nqdyn::parse_config(read_file(a.config_path));
  for (nqdyn::RunConfig& cfg : jobs) {
    if (!expected_kind.empty() && nqdyn::to_string(cfg.kind) != expected_kind)
      throw nqdyn::ValidationError("config job kind '" + nqdyn::to_string(cfg.kind) +
                                   "' does not match subcommand '" + expected_kind + "'");
    if (a.verify) cfg.verify = true;
    nqdyn::JobResult r = nqdyn::run_job(cfg, opt);
    std::cout << cfg.label << " -> " << r.manifest_path << "\n";
    for (const auto& f : r.outputs) std::cout << "  " << f << "\n";
  }
  return nqdyn::exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonequilibrium quantum dynamics runner"};
  app.require_subcommand(1);

  const char* kinds[] = {"exact", "twopi", "qmon", "spectral", "compare"};
  std::vector<CommonArgs> args(6);
  std::vector<CLI::App*> cmds;
  for (int i = 0; i < 5; ++i) {
    CLI::App* c = app.add_subcommand(kinds[i], std::string("run ") + kinds[i] + " jobs from a config file");
    add_common(c, args[i], false);
    cmds.push_back(c);
  }
  // verify: run any job with the self-convergence check forced on.
  CLI::App* vc = app.add_subcommand("verify", "run a job with self-convergence checks");
  add_common(vc, args[5], false);
  cmds.push_back(vc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : nqdyn::exit_validation;
  }

  try {
    for (int i = 0; i < 6; ++i) {
      if (!cmds[i]->parsed()) continue;
      if (i == 5) args[i].verify = true;
      return run_command(args[i], i < 5 ? kinds[i] : "");
    }
    return nqdyn::exit_validation;
  } catch (const nqdyn::BlowupError& e) {
    std::cerr << "numerical blowup at step " << e.step << ": " << e.what() << "\n";
    return nqdyn::exit_blowup;
  } catch (const nqdyn::ResourceError& e) {
    std::cerr << "resource cap exceeded: " << e.what() << "\n";
    return nqdyn::exit_resource;
  } catch (const nqdyn::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return nqdyn::exit_validation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return nqdyn::exit_validation;
  }
}
