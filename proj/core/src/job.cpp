#include "nqdyn/job.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nqdyn/bose_hubbard.hpp"
#include "nqdyn/compare.hpp"
#include "nqdyn/errors.hpp"
#include "nqdyn/qmon.hpp"
#include "nqdyn/sha256.hpp"
#include "nqdyn/spectral.hpp"
#include "nqdyn/twopi_solver.hpp"

namespace nqdyn {

const char* kCodeVersion = "nqdyn 1.0.0";

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw ValidationError("cannot write " + tmp);
    os << text;
  }
  fs::rename(tmp, path);
}

std::string job_path(const JobOptions& opt, const std::string& label,
                     const std::string& suffix) {
  fs::create_directories(opt.out_dir);
  return (fs::path(opt.out_dir) / (label + suffix)).string();
}

}  // namespace

void write_trajectory_file(const Trajectory& traj, const std::string& path) {
  std::ostringstream os;
  os << "# trajectory\n";
  auto prov = traj.provenance;
  prov["grid_t0"] = fmt17(traj.grid.t0());
  prov["grid_dt"] = fmt17(traj.grid.dt());
  prov["grid_n_steps"] = std::to_string(traj.grid.n_steps());
  for (const auto& [k, v] : prov) os << "# " << k << " = " << v << "\n";
  os << "# units: t in hbar over the coupling energy unit; columns dimensionless\n";
  os << "t";
  for (const auto& c : traj.column_order) os << " " << c;
  os << "\n";
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    os << fmt17(traj.t[k]);
    for (const auto& c : traj.column_order) os << " " << fmt17(traj.series.at(c)[k]);
    os << "\n";
  }
  write_text_atomic(path, os.str());
}

Trajectory read_trajectory_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot read trajectory file " + path);
  Trajectory tr;
  std::string line;
  std::vector<std::string> cols;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto eq = line.find(" = ");
      if (eq != std::string::npos)
        tr.provenance[line.substr(2, eq - 2)] = line.substr(eq + 3);
      continue;
    }
    std::istringstream row(line);
    if (cols.empty()) {
      std::string name;
      while (row >> name) cols.push_back(name);
      if (cols.empty() || cols[0] != "t")
        throw ValidationError(path + ": malformed column header");
      for (std::size_t i = 1; i < cols.size(); ++i) tr.column(cols[i]);
      continue;
    }
    double v;
    if (!(row >> v)) throw ValidationError(path + ": malformed data row");
    tr.t.push_back(v);
    for (std::size_t i = 1; i < cols.size(); ++i) {
      if (!(row >> v)) throw ValidationError(path + ": short data row");
      tr.series[cols[i]].push_back(v);
    }
  }
  if (cols.empty()) throw ValidationError(path + ": empty trajectory file");
  auto p = tr.provenance;
  if (p.count("grid_t0") && p.count("grid_dt") && p.count("grid_n_steps"))
    tr.grid = TimeGrid(std::atof(p["grid_t0"].c_str()), std::atof(p["grid_dt"].c_str()),
                       std::atol(p["grid_n_steps"].c_str()));
  return tr;
}

namespace {

TimeGrid make_grid(const GridConfig& g) { return TimeGrid(g.t0, g.dt, g.n_steps); }

Trajectory run_exact(const RunConfig& cfg, int threads) {
  (void)threads;  // eigensolve parallelism only; results identical
  FockBasis basis(cfg.bh.N, cfg.bh.I, cfg.dim_cap);
  HamiltonianMatrix H = build_hamiltonian(basis, cfg.bh);
  Eigen::VectorXcd psi0 = initial_state(basis, cfg.bh_initial);
  return evolve_exact(basis, H, psi0, make_grid(cfg.grid)).traj;
}

Trajectory run_qmon_whole(const RunConfig& cfg, int threads) {
  TimeGrid grid = make_grid(cfg.grid);
  switch (cfg.qmon.order) {
    case QmonOrder::LO:
      return evolve_lo(cfg.qmon.params, cfg.qmon.init, grid);
    case QmonOrder::Radial:
      return evolve_exact_radial(cfg.qmon.params, cfg.qmon.init, grid, cfg.qmon.radial);
    case QmonOrder::NLO:
      return evolve_nlo(cfg.qmon.params, cfg.qmon.init, grid, cfg.budget_bytes, threads);
  }
  throw ValidationError("unknown qmon order");
}

TwopiOptions twopi_options(const RunConfig& cfg, int threads) {
  TwopiOptions o;
  o.budget_bytes = cfg.budget_bytes;
  o.threads = threads;
  o.force_two_time = cfg.force_two_time;
  return o;
}

// Runs the whole job in memory (no checkpointing) on the given grid; used for
// the dt-halving self-convergence check and by checkpoint-free kinds.
Trajectory run_whole(const RunConfig& cfg, const GridConfig& grid, int threads) {
  RunConfig c = cfg;
  c.grid = grid;
  switch (c.kind) {
    case JobKind::Exact: return run_exact(c, threads);
    case JobKind::Twopi:
      return evolve_twopi(c.bh, c.scheme, make_grid(c.grid), twopi_options(c, threads));
    case JobKind::Qmon: return run_qmon_whole(c, threads);
    default: throw ValidationError("job kind has no trajectory");
  }
}

double self_convergence(const RunConfig& cfg, const Trajectory& coarse, int threads) {
  GridConfig fine = cfg.grid;
  fine.dt /= 2.0;
  fine.n_steps *= 2;
  Trajectory f = run_whole(cfg, fine, threads);
  double dev = 0.0;
  for (const auto& col : coarse.column_order) {
    if (!f.has(col)) continue;
    const auto& a = coarse.series.at(col);
    const auto& b = f.series.at(col);
    for (std::size_t k = 0; k < a.size(); ++k)
      dev = std::max(dev, std::abs(a[k] - b[2 * k]));
  }
  return dev;
}

std::string h_theorem_verdict(const Trajectory& tr) {
  if (!tr.has("entropy")) return "";
  const auto& s = tr.column("entropy");
  for (std::size_t k = 1; k < s.size(); ++k)
    if (s[k] < s[k - 1] - 1e-8) return "violated";
  return "nondecreasing";
}

struct ManifestWriter {
  const RunConfig& cfg;
  const JobOptions& opt;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::string path;

  explicit ManifestWriter(const RunConfig& c, const JobOptions& o) : cfg(c), opt(o) {
    path = job_path(opt, cfg.label, ".manifest.json");
  }

  json base(const std::string& status) const {
    json m;
    m["kind"] = to_string(cfg.kind);
    m["label"] = cfg.label;
    m["code_version"] = kCodeVersion;
    m["status"] = status;
    m["config"] = json::parse(serialize_config(cfg));
    auto dt = std::chrono::steady_clock::now() - start;
    m["wall_time_seconds"] = std::chrono::duration<double>(dt).count();
    return m;
  }

  void write_incomplete(const std::string& ckpt_path, long step) const {
    json m = base("incomplete");
    m["checkpoint"] = {{"path", ckpt_path}, {"step", step}};
    write_text_atomic(path, m.dump(2) + "\n");
  }

  void write_complete(json m, const std::vector<std::string>& outputs) const {
    json arr = json::array();
    for (const auto& f : outputs)
      arr.push_back({{"path", f}, {"sha256", sha256_file_hex(f)}});
    m["outputs"] = arr;
    write_text_atomic(path, m.dump(2) + "\n");
  }
};

// Drives a stepwise evolution (twopi or qmon NLO) with periodic bit-exact
// snapshots; `resume_from` (optional) is a checkpoint file to restore first.
// Returns false when opt.max_steps cut the run short (checkpoint written).
template <class Evolution>
bool drive(Evolution& ev, const ManifestWriter& mw, const std::string& ckpt_path,
           const JobOptions& opt, const std::string& resume_from) {
  if (!resume_from.empty()) {
    std::ifstream is(resume_from, std::ios::binary);
    if (!is) throw ValidationError("cannot read checkpoint " + resume_from);
    ev.deserialize(is);
  }
  auto snapshot = [&]() {
    std::string tmp = ckpt_path + ".tmp";
    {
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      if (!os) throw ValidationError("cannot write checkpoint " + tmp);
      ev.serialize(os);
    }
    fs::rename(tmp, ckpt_path);
    mw.write_incomplete(ckpt_path, ev.steps_done());
  };
  long since = 0;
  while (ev.advance()) {
    const bool final_step = ev.steps_done() >= ev.total_steps();
    if (opt.checkpoint_every > 0 && ++since >= opt.checkpoint_every && !final_step) {
      since = 0;
      snapshot();
    }
    if (opt.max_steps > 0 && ev.steps_done() >= opt.max_steps && !final_step) {
      snapshot();
      return false;
    }
  }
  return true;
}

JobResult run_trajectory_job(const RunConfig& cfg, const JobOptions& opt,
                             const std::string& resume_from) {
  ManifestWriter mw(cfg, opt);
  std::string traj_path = job_path(opt, cfg.label, ".traj.txt");
  std::string ckpt_path = job_path(opt, cfg.label, ".ckpt");

  Trajectory tr;
  const bool stepwise_twopi = cfg.kind == JobKind::Twopi;
  const bool stepwise_qmon = cfg.kind == JobKind::Qmon && cfg.qmon.order == QmonOrder::NLO;
  if (stepwise_twopi) {
    TwopiEvolution ev(cfg.bh, cfg.scheme, make_grid(cfg.grid),
                      twopi_options(cfg, opt.threads));
    if (!drive(ev, mw, ckpt_path, opt, resume_from)) return {mw.path, {}};
    tr = ev.trajectory();
  } else if (stepwise_qmon) {
    QmonNloEvolution ev(cfg.qmon.params, cfg.qmon.init, make_grid(cfg.grid),
                        cfg.budget_bytes, opt.threads);
    if (!drive(ev, mw, ckpt_path, opt, resume_from)) return {mw.path, {}};
    tr = ev.trajectory();
  } else {
    // Deterministic and cheap: resume recomputes from scratch, bit-identical.
    tr = run_whole(cfg, cfg.grid, opt.threads);
  }
  tr.provenance["label"] = cfg.label;
  tr.provenance["code_version"] = kCodeVersion;
  write_trajectory_file(tr, traj_path);

  json m;
  {
    json extras;
    std::string h = h_theorem_verdict(tr);
    if (cfg.kind == JobKind::Qmon && !h.empty()) extras["h_theorem"] = h;
    if (cfg.verify)
      extras["self_convergence"] = {{"dt", cfg.grid.dt},
                                    {"dt_half_max_deviation",
                                     self_convergence(cfg, tr, opt.threads)}};
    m = mw.base("complete");
    for (auto it = extras.begin(); it != extras.end(); ++it) m[it.key()] = it.value();
  }
  mw.write_complete(m, {traj_path});
  return {mw.path, {traj_path}};
}

JobResult run_spectral_job(const RunConfig& cfg, const JobOptions& opt) {
  ManifestWriter mw(cfg, opt);
  const SpectralConfig& s = cfg.spectral;
  BandSpectrum spec = product_spectrum(s.a1, s.a2, s.M2sq, s.Lambda);

  std::string levels_path = job_path(opt, cfg.label, ".levels.txt");
  {
    std::ostringstream os;
    os << "# spectrum " << spec.geometry << " a1 = " << fmt17(spec.a1)
       << " a2 = " << fmt17(spec.a2) << " M2sq = " << fmt17(spec.M2sq)
       << " lambda_max = " << fmt17(spec.Lambda) << "\n";
    os << "lambda degeneracy l n\n";
    for (const auto& lv : spec.levels)
      os << fmt17(lv.lambda) << " " << lv.degeneracy << " " << lv.l << " " << lv.n << "\n";
    write_text_atomic(levels_path, os.str());
  }

  json m = mw.base("complete");
  m["total_count"] = spec.total_count();
  if (s.zeta) {
    ZetaPartial z = zeta_partial(spec, s.zeta_nu, s.zeta_mu, s.zeta_allow_formal);
    m["zeta"] = {{"value", z.value}, {"tail_bound", z.tail_bound}};
  }
  if (s.eird) {
    EirdReport e = eird_classify(s.M_eff, s.scales, s.noncompact_dims, s.eird_opt);
    json eta = json::array();
    json frozen = json::array();
    for (double v : e.eta) eta.push_back(v);
    for (std::size_t i = 0; i < e.frozen.size(); ++i)
      frozen.push_back(static_cast<bool>(e.frozen[i]));
    m["eird"] = {{"value", e.eird}, {"xi", e.xi}, {"eta", eta}, {"frozen", frozen}};
  }
  mw.write_complete(m, {levels_path});
  return {mw.path, {levels_path}};
}

JobResult run_compare_job(const RunConfig& cfg, const JobOptions& opt) {
  ManifestWriter mw(cfg, opt);
  const CompareConfig& c = cfg.compare;
  Trajectory oracle;
  std::string oracle_hash;
  bool has_oracle = !c.oracle_path.empty();
  if (has_oracle) {
    oracle = read_trajectory_file(c.oracle_path);
    oracle_hash = sha256_file_hex(c.oracle_path);
  }
  std::vector<std::pair<std::string, Trajectory>> runs;
  std::vector<std::string> hashes;
  for (std::size_t i = 0; i < c.paths.size(); ++i) {
    runs.emplace_back(c.labels[i], read_trajectory_file(c.paths[i]));
    hashes.push_back(sha256_file_hex(c.paths[i]));
  }
  ComparisonReport rep =
      compare_trajectories(has_oracle ? &oracle : nullptr, oracle_hash, runs, hashes, c);

  std::string report_path = job_path(opt, cfg.label, ".report.json");
  write_text_atomic(report_path, rep.to_json() + "\n");
  mw.write_complete(mw.base("complete"), {report_path});
  return {mw.path, {report_path}};
}

}  // namespace

JobResult run_job(const RunConfig& cfg, const JobOptions& opt) {
  switch (cfg.kind) {
    case JobKind::Spectral: return run_spectral_job(cfg, opt);
    case JobKind::Compare: return run_compare_job(cfg, opt);
    default: return run_trajectory_job(cfg, opt, "");
  }
}

JobResult resume_job(const std::string& manifest_path, const JobOptions& opt) {
  std::ifstream is(manifest_path);
  if (!is) throw ValidationError("cannot read manifest " + manifest_path);
  json m;
  try {
    m = json::parse(is);
  } catch (const json::exception& e) {
    throw ValidationError("manifest " + manifest_path + ": " + e.what());
  }
  if (!m.contains("config")) throw ValidationError("manifest has no config echo");
  std::vector<RunConfig> cfgs = parse_config(m.at("config").dump());
  if (cfgs.size() != 1) throw ValidationError("manifest config echo is not a single job");
  const RunConfig& cfg = cfgs.front();

  JobOptions o = opt;
  if (o.out_dir == ".")
    o.out_dir = fs::path(manifest_path).parent_path().string();
  if (o.out_dir.empty()) o.out_dir = ".";

  std::string ckpt;
  if (m.contains("checkpoint") && m.at("status") == "incomplete") {
    ckpt = m.at("checkpoint").at("path").get<std::string>();
    if (!fs::exists(ckpt)) throw ValidationError("checkpoint file missing: " + ckpt);
  }
  switch (cfg.kind) {
    case JobKind::Spectral: return run_spectral_job(cfg, o);
    case JobKind::Compare: return run_compare_job(cfg, o);
    default: return run_trajectory_job(cfg, o, ckpt);
  }
}

}  // namespace nqdyn
