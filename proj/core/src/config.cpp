#include "nqdyn/config.hpp"

#include <json.hpp>

#include "nqdyn/errors.hpp"

namespace nqdyn {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ValidationError("config: " + path + ": " + what);
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) { ok = true; break; }
    if (!ok) fail(path + "." + it.key(), "unknown key");
  }
}

double get_num(const json& j, const std::string& path, const char* key,
               double def, bool required = false) {
  if (!j.contains(key)) {
    if (required) fail(path + "." + key, "missing required key");
    return def;
  }
  const json& v = j.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

long get_int(const json& j, const std::string& path, const char* key, long def,
             bool required = false) {
  if (!j.contains(key)) {
    if (required) fail(path + "." + key, "missing required key");
    return def;
  }
  const json& v = j.at(key);
  if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  return v.get<long>();
}

bool get_bool(const json& j, const std::string& path, const char* key, bool def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_boolean()) fail(path + "." + key, "expected a boolean");
  return v.get<bool>();
}

std::string get_str(const json& j, const std::string& path, const char* key,
                    const std::string& def, bool required = false) {
  if (!j.contains(key)) {
    if (required) fail(path + "." + key, "missing required key");
    return def;
  }
  const json& v = j.at(key);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

GridConfig parse_grid(const json& j, const std::string& path) {
  check_keys(j, path, {"t0", "dt", "n_steps"});
  GridConfig g;
  g.t0 = get_num(j, path, "t0", 0.0);
  g.dt = get_num(j, path, "dt", 0.0, true);
  g.n_steps = get_int(j, path, "n_steps", 0, true);
  if (!(g.dt > 0.0)) fail(path + ".dt", "must be positive");
  if (g.n_steps < 1) fail(path + ".n_steps", "must be >= 1");
  return g;
}

BoseHubbardParams parse_model(const json& j, const std::string& path) {
  check_keys(j, path, {"N", "I", "J", "U", "eps", "periodic", "double_link", "hbar"});
  BoseHubbardParams p;
  p.N = static_cast<int>(get_int(j, path, "N", 1, true));
  p.I = static_cast<int>(get_int(j, path, "I", 2));
  p.J = get_num(j, path, "J", 1.0);
  p.U = get_num(j, path, "U", 0.0);
  p.periodic = get_bool(j, path, "periodic", false);
  p.double_link = get_bool(j, path, "double_link", false);
  p.hbar = get_num(j, path, "hbar", 1.0);
  if (p.N < 0) fail(path + ".N", "must be >= 0");
  if (p.I < 1) fail(path + ".I", "must be >= 1");
  if (p.hbar <= 0) fail(path + ".hbar", "must be positive");
  if (j.contains("eps")) {
    const json& e = j.at("eps");
    if (!e.is_array()) fail(path + ".eps", "expected an array");
    for (const auto& v : e) {
      if (!v.is_number()) fail(path + ".eps", "expected numbers");
      p.eps.push_back(v.get<double>());
    }
    if (static_cast<int>(p.eps.size()) != p.I)
      fail(path + ".eps", "must have one entry per site");
  }
  return p;
}

InitialStateSpec parse_initial(const json& j, const std::string& path) {
  check_keys(j, path, {"kind", "occupations", "amplitudes"});
  InitialStateSpec s;
  std::string kind = get_str(j, path, "kind", "all_in_one_well");
  if (kind == "all_in_one_well") s.kind = InitialKind::AllInOneWell;
  else if (kind == "fock") s.kind = InitialKind::FockVector;
  else if (kind == "coherent") s.kind = InitialKind::CoherentProjection;
  else fail(path + ".kind", "unknown initial state kind '" + kind + "'");
  if (j.contains("occupations")) {
    for (const auto& v : j.at("occupations")) {
      if (!v.is_number_integer()) fail(path + ".occupations", "expected integers");
      s.occupations.push_back(v.get<int>());
    }
  }
  if (j.contains("amplitudes")) {
    for (const auto& v : j.at("amplitudes")) {
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        fail(path + ".amplitudes", "expected [re, im] pairs");
      s.amplitudes.emplace_back(v[0].get<double>(), v[1].get<double>());
    }
  }
  return s;
}

QmonConfig parse_qmon(const json& j, const std::string& path) {
  check_keys(j, path, {"N", "M2", "lambda", "hbar", "M2_initial", "f_perturbation",
                       "order", "r_max", "n_r", "reflect_tol"});
  QmonConfig q;
  q.params.N = static_cast<int>(get_int(j, path, "N", 20, true));
  q.params.M2 = get_num(j, path, "M2", 1.0);
  q.params.lambda = get_num(j, path, "lambda", 1.0);
  q.params.hbar = get_num(j, path, "hbar", 1.0);
  q.init.M2_initial = get_num(j, path, "M2_initial", q.params.M2);
  q.init.f_perturbation = get_num(j, path, "f_perturbation", 0.0);
  std::string order = get_str(j, path, "order", "nlo");
  if (order == "lo") q.order = QmonOrder::LO;
  else if (order == "nlo") q.order = QmonOrder::NLO;
  else if (order == "radial") q.order = QmonOrder::Radial;
  else fail(path + ".order", "expected lo, nlo, or radial");
  q.radial.r_max = get_num(j, path, "r_max", 0.0);
  q.radial.n_r = static_cast<int>(get_int(j, path, "n_r", q.radial.n_r));
  q.radial.reflect_tol = get_num(j, path, "reflect_tol", q.radial.reflect_tol);
  if (q.params.N < 1) fail(path + ".N", "must be >= 1");
  if (q.params.lambda < 0) fail(path + ".lambda", "must be >= 0");
  return q;
}

SpectralConfig parse_spectral(const json& j, const std::string& path) {
  check_keys(j, path, {"a1", "a2", "M2sq", "lambda_max", "zeta", "eird"});
  SpectralConfig s;
  s.a1 = get_num(j, path, "a1", 1.0);
  s.a2 = get_num(j, path, "a2", 1.0);
  s.M2sq = get_num(j, path, "M2sq", 0.0);
  s.Lambda = get_num(j, path, "lambda_max", 10.0, true);
  if (s.a1 <= 0 || s.a2 <= 0) fail(path, "radii must be positive");
  if (j.contains("zeta")) {
    const json& z = j.at("zeta");
    check_keys(z, path + ".zeta", {"nu", "mu", "allow_formal"});
    s.zeta = true;
    s.zeta_nu = get_num(z, path + ".zeta", "nu", 2.0, true);
    s.zeta_mu = get_num(z, path + ".zeta", "mu", 1.0);
    s.zeta_allow_formal = get_bool(z, path + ".zeta", "allow_formal", false);
  }
  if (j.contains("eird")) {
    const json& e = j.at("eird");
    check_keys(e, path + ".eird",
               {"M_eff", "noncompact_dims", "scales", "eta_threshold", "gap_ratio"});
    s.eird = true;
    s.M_eff = get_num(e, path + ".eird", "M_eff", 1.0, true);
    s.noncompact_dims = static_cast<int>(get_int(e, path + ".eird", "noncompact_dims", 0));
    s.eird_opt.eta_threshold = get_num(e, path + ".eird", "eta_threshold", 10.0);
    s.eird_opt.gap_ratio = get_num(e, path + ".eird", "gap_ratio", 10.0);
    if (e.contains("scales")) {
      for (const auto& sc : e.at("scales")) {
        check_keys(sc, path + ".eird.scales[]", {"L", "dims", "band_gap"});
        CompactScale c;
        c.L = get_num(sc, path + ".eird.scales[]", "L", 0.0, true);
        c.dims = static_cast<int>(get_int(sc, path + ".eird.scales[]", "dims", 1));
        c.band_gap = get_num(sc, path + ".eird.scales[]", "band_gap", 0.0, true);
        s.scales.push_back(c);
      }
    }
  }
  return s;
}

CompareConfig parse_compare(const json& j, const std::string& path) {
  check_keys(j, path, {"oracle", "trajectories", "observable", "norm_N"});
  CompareConfig c;
  c.oracle_path = get_str(j, path, "oracle", "");
  c.observable = get_str(j, path, "observable", "n_1");
  c.norm_N = get_num(j, path, "norm_N", 0.0);
  if (!j.contains("trajectories")) fail(path + ".trajectories", "missing required key");
  for (const auto& e : j.at("trajectories")) {
    check_keys(e, path + ".trajectories[]", {"label", "path"});
    c.labels.push_back(get_str(e, path + ".trajectories[]", "label", "", true));
    c.paths.push_back(get_str(e, path + ".trajectories[]", "path", "", true));
  }
  if (c.paths.empty()) fail(path + ".trajectories", "must not be empty");
  return c;
}

RunConfig parse_single(const json& j) {
  check_keys(j, "$",
             {"job", "label", "model", "scheme", "force_two_time", "initial", "qmon",
              "spectral", "compare", "grid", "budget_bytes", "dim_cap", "verify",
              "sweep"});
  RunConfig cfg;
  cfg.kind = job_kind_from_string(get_str(j, "$", "job", "", true));
  cfg.label = get_str(j, "$", "label", to_string(cfg.kind));
  cfg.verify = get_bool(j, "$", "verify", false);
  if (j.contains("budget_bytes")) {
    double b = get_num(j, "$", "budget_bytes", 0.0);
    if (b <= 0) fail("$.budget_bytes", "must be positive");
    cfg.budget_bytes = static_cast<std::size_t>(b);
  }
  if (j.contains("dim_cap")) {
    long d = get_int(j, "$", "dim_cap", 0);
    if (d <= 0) fail("$.dim_cap", "must be positive");
    cfg.dim_cap = static_cast<std::size_t>(d);
  }

  const bool needs_grid = cfg.kind == JobKind::Exact || cfg.kind == JobKind::Twopi ||
                          cfg.kind == JobKind::Qmon;
  if (needs_grid) {
    if (!j.contains("grid")) fail("$.grid", "missing required key");
    cfg.grid = parse_grid(j.at("grid"), "$.grid");
  } else if (j.contains("grid")) {
    cfg.grid = parse_grid(j.at("grid"), "$.grid");
  }

  switch (cfg.kind) {
    case JobKind::Exact:
    case JobKind::Twopi:
      if (!j.contains("model")) fail("$.model", "missing required key");
      cfg.bh = parse_model(j.at("model"), "$.model");
      if (j.contains("initial")) cfg.bh_initial = parse_initial(j.at("initial"), "$.initial");
      if (cfg.kind == JobKind::Twopi) {
        cfg.scheme = twopi_scheme_from_string(get_str(j, "$", "scheme", "", true));
        cfg.force_two_time = get_bool(j, "$", "force_two_time", false);
      }
      break;
    case JobKind::Qmon:
      if (!j.contains("qmon")) fail("$.qmon", "missing required key");
      cfg.qmon = parse_qmon(j.at("qmon"), "$.qmon");
      break;
    case JobKind::Spectral:
      if (!j.contains("spectral")) fail("$.spectral", "missing required key");
      cfg.spectral = parse_spectral(j.at("spectral"), "$.spectral");
      break;
    case JobKind::Compare:
      if (!j.contains("compare")) fail("$.compare", "missing required key");
      cfg.compare = parse_compare(j.at("compare"), "$.compare");
      break;
  }
  return cfg;
}

}  // namespace

std::string to_string(JobKind k) {
  switch (k) {
    case JobKind::Exact: return "exact";
    case JobKind::Twopi: return "twopi";
    case JobKind::Qmon: return "qmon";
    case JobKind::Spectral: return "spectral";
    case JobKind::Compare: return "compare";
  }
  return "?";
}

JobKind job_kind_from_string(const std::string& s) {
  if (s == "exact") return JobKind::Exact;
  if (s == "twopi") return JobKind::Twopi;
  if (s == "qmon") return JobKind::Qmon;
  if (s == "spectral") return JobKind::Spectral;
  if (s == "compare") return JobKind::Compare;
  throw ValidationError("config: $.job: unknown job kind '" + s + "'");
}

std::vector<RunConfig> parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: JSON parse error: ") + e.what());
  }
  RunConfig base = parse_single(j);

  std::vector<RunConfig> jobs;
  if (!j.contains("sweep")) {
    jobs.push_back(base);
    return jobs;
  }
  if (base.kind != JobKind::Exact && base.kind != JobKind::Twopi)
    fail("$.sweep", "sweeps are supported for exact and twopi jobs");
  const json& sw = j.at("sweep");
  check_keys(sw, "$.sweep", {"N", "UN_over_J"});
  if (!sw.contains("N")) fail("$.sweep.N", "missing required key");
  double ratio = get_num(sw, "$.sweep", "UN_over_J", 0.0, true);
  for (const auto& v : sw.at("N")) {
    if (!v.is_number_integer()) fail("$.sweep.N", "expected integers");
    RunConfig c = base;
    c.bh.N = v.get<int>();
    if (c.bh.N < 1) fail("$.sweep.N", "entries must be >= 1");
    // Fixed interaction ratio U N / J: recompute U per sweep entry.
    c.bh.U = ratio * c.bh.J / static_cast<double>(c.bh.N);
    c.label = base.label + "_N" + std::to_string(c.bh.N);
    jobs.push_back(c);
  }
  return jobs;
}

std::string serialize_config(const RunConfig& cfg) {
  json j;
  j["job"] = to_string(cfg.kind);
  j["label"] = cfg.label;
  j["verify"] = cfg.verify;
  j["budget_bytes"] = static_cast<double>(cfg.budget_bytes);
  j["dim_cap"] = static_cast<long>(cfg.dim_cap);
  if (cfg.kind == JobKind::Exact || cfg.kind == JobKind::Twopi ||
      cfg.kind == JobKind::Qmon) {
    j["grid"] = {{"t0", cfg.grid.t0}, {"dt", cfg.grid.dt}, {"n_steps", cfg.grid.n_steps}};
  }
  if (cfg.kind == JobKind::Exact || cfg.kind == JobKind::Twopi) {
    json m;
    m["N"] = cfg.bh.N;
    m["I"] = cfg.bh.I;
    m["J"] = cfg.bh.J;
    m["U"] = cfg.bh.U;
    if (!cfg.bh.eps.empty()) m["eps"] = cfg.bh.eps;
    m["periodic"] = cfg.bh.periodic;
    m["double_link"] = cfg.bh.double_link;
    m["hbar"] = cfg.bh.hbar;
    j["model"] = m;
    json ini;
    switch (cfg.bh_initial.kind) {
      case InitialKind::AllInOneWell: ini["kind"] = "all_in_one_well"; break;
      case InitialKind::FockVector: ini["kind"] = "fock"; break;
      case InitialKind::CoherentProjection: ini["kind"] = "coherent"; break;
    }
    if (!cfg.bh_initial.occupations.empty()) ini["occupations"] = cfg.bh_initial.occupations;
    if (!cfg.bh_initial.amplitudes.empty()) {
      json arr = json::array();
      for (const auto& a : cfg.bh_initial.amplitudes) arr.push_back({a.real(), a.imag()});
      ini["amplitudes"] = arr;
    }
    j["initial"] = ini;
    if (cfg.kind == JobKind::Twopi) {
      j["scheme"] = to_string(cfg.scheme);
      j["force_two_time"] = cfg.force_two_time;
    }
  }
  if (cfg.kind == JobKind::Qmon) {
    json q;
    q["N"] = cfg.qmon.params.N;
    q["M2"] = cfg.qmon.params.M2;
    q["lambda"] = cfg.qmon.params.lambda;
    q["hbar"] = cfg.qmon.params.hbar;
    q["M2_initial"] = cfg.qmon.init.M2_initial;
    q["f_perturbation"] = cfg.qmon.init.f_perturbation;
    q["order"] = cfg.qmon.order == QmonOrder::LO
                     ? "lo"
                     : (cfg.qmon.order == QmonOrder::NLO ? "nlo" : "radial");
    q["r_max"] = cfg.qmon.radial.r_max;
    q["n_r"] = cfg.qmon.radial.n_r;
    q["reflect_tol"] = cfg.qmon.radial.reflect_tol;
    j["qmon"] = q;
  }
  if (cfg.kind == JobKind::Spectral) {
    json s;
    s["a1"] = cfg.spectral.a1;
    s["a2"] = cfg.spectral.a2;
    s["M2sq"] = cfg.spectral.M2sq;
    s["lambda_max"] = cfg.spectral.Lambda;
    if (cfg.spectral.zeta) {
      s["zeta"] = {{"nu", cfg.spectral.zeta_nu},
                   {"mu", cfg.spectral.zeta_mu},
                   {"allow_formal", cfg.spectral.zeta_allow_formal}};
    }
    if (cfg.spectral.eird) {
      json e;
      e["M_eff"] = cfg.spectral.M_eff;
      e["noncompact_dims"] = cfg.spectral.noncompact_dims;
      e["eta_threshold"] = cfg.spectral.eird_opt.eta_threshold;
      e["gap_ratio"] = cfg.spectral.eird_opt.gap_ratio;
      json arr = json::array();
      for (const auto& sc : cfg.spectral.scales)
        arr.push_back({{"L", sc.L}, {"dims", sc.dims}, {"band_gap", sc.band_gap}});
      e["scales"] = arr;
      s["eird"] = e;
    }
    j["spectral"] = s;
  }
  if (cfg.kind == JobKind::Compare) {
    json c;
    if (!cfg.compare.oracle_path.empty()) c["oracle"] = cfg.compare.oracle_path;
    c["observable"] = cfg.compare.observable;
    c["norm_N"] = cfg.compare.norm_N;
    json arr = json::array();
    for (std::size_t i = 0; i < cfg.compare.paths.size(); ++i)
      arr.push_back({{"label", cfg.compare.labels[i]}, {"path", cfg.compare.paths[i]}});
    c["trajectories"] = arr;
    j["compare"] = c;
  }
  return j.dump(2);
}

}  // namespace nqdyn
