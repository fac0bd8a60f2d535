#include "nqdyn/compare.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <json.hpp>

#include "nqdyn/errors.hpp"

namespace nqdyn {

namespace {

using json = nlohmann::json;

void require_same_grid(const Trajectory& a, const Trajectory& b, const std::string& who) {
  if (a.t.size() != b.t.size())
    throw ValidationError("compare: grid mismatch for " + who + ": " +
                          std::to_string(a.t.size()) + " vs " + std::to_string(b.t.size()) +
                          " points");
  for (std::size_t k = 0; k < a.t.size(); ++k)
    if (std::abs(a.t[k] - b.t[k]) > 1e-12 * (1.0 + std::abs(a.t[k])))
      throw ValidationError("compare: grid mismatch for " + who + " at point " +
                            std::to_string(k));
}

double norm_for(const Trajectory& tr, const CompareConfig& cfg) {
  if (cfg.norm_N > 0.0) return cfg.norm_N;
  auto it = tr.provenance.find("N");
  if (it != tr.provenance.end()) {
    double n = std::atof(it->second.c_str());
    if (n > 0.0) return n;
  }
  return 1.0;
}

std::vector<double> normalized(const Trajectory& tr, const std::string& col, double n) {
  std::vector<double> s = tr.column(col);
  for (double& v : s) v /= n;
  return s;
}

SchemeReport summarize(const std::string& label, const std::string& hash,
                       const Trajectory& tr, const CompareConfig& cfg) {
  SchemeReport r;
  r.label = label;
  r.file_hash = hash;
  r.norm_N = norm_for(tr, cfg);
  if (tr.has(cfg.observable)) {
    try {
      EnvelopeFit fit = fit_collapse_time(tr.t, normalized(tr, cfg.observable, r.norm_N));
      r.rate = fit.rate;
      r.t_coll = fit.t_coll;
      r.n_extrema = fit.n_extrema;
      r.envelope_ok = true;
    } catch (const ValidationError&) {
      r.envelope_ok = false;
    }
  }
  ConservationReport cons = conservation_monitor(tr);
  r.number_drift = cons.number_drift;
  r.energy_drift = cons.energy_drift;
  if (tr.has("entropy")) {
    const auto& s = tr.column("entropy");
    bool ok = true;
    for (std::size_t k = 1; k < s.size(); ++k)
      if (s[k] < s[k - 1] - 1e-8) { ok = false; break; }
    r.h_theorem = ok ? "nondecreasing" : "violated";
  }
  return r;
}

json to_json_entry(const SchemeReport& r) {
  json j;
  j["label"] = r.label;
  if (!r.file_hash.empty()) j["file_sha256"] = r.file_hash;
  j["norm_N"] = r.norm_N;
  if (r.envelope_ok) {
    j["damping_rate"] = r.rate;
    j["t_coll"] = r.t_coll;
    j["n_extrema"] = r.n_extrema;
  }
  if (!r.max_deviation.empty()) {
    json d;
    for (const auto& [col, v] : r.max_deviation) d[col] = v;
    j["max_deviation"] = d;
  }
  j["number_drift"] = r.number_drift;
  j["energy_drift"] = r.energy_drift;
  if (!r.damping_verdict.empty()) j["damping_verdict"] = r.damping_verdict;
  if (!r.h_theorem.empty()) j["h_theorem"] = r.h_theorem;
  return j;
}

}  // namespace

ComparisonReport compare_trajectories(
    const Trajectory* oracle, const std::string& oracle_hash,
    const std::vector<std::pair<std::string, Trajectory>>& runs,
    const std::vector<std::string>& run_hashes, const CompareConfig& cfg) {
  if (runs.empty()) throw ValidationError("compare: no trajectories given");
  if (!run_hashes.empty() && run_hashes.size() != runs.size())
    throw ValidationError("compare: hash list does not match trajectory list");

  ComparisonReport rep;
  rep.observable = cfg.observable;
  const Trajectory& ref = oracle ? *oracle : runs.front().second;
  for (const auto& [label, tr] : runs) require_same_grid(ref, tr, label);

  if (oracle) {
    rep.has_oracle = true;
    rep.oracle = summarize("oracle", oracle_hash, *oracle, cfg);
  }

  std::vector<double> log_n, log_tcoll;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& [label, tr] = runs[i];
    SchemeReport r = summarize(label, run_hashes.empty() ? "" : run_hashes[i], tr, cfg);
    if (oracle) {
      double no = rep.oracle.norm_N;
      for (const std::string& col : oracle->column_order) {
        if (col == "t" || !tr.has(col)) continue;
        const auto a = normalized(*oracle, col, no);
        const auto b = normalized(tr, col, r.norm_N);
        double dev = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k)
          dev = std::max(dev, std::abs(a[k] - b[k]));
        r.max_deviation[col] = dev;
      }
      if (r.envelope_ok && rep.oracle.envelope_ok) {
        // 5% band around the oracle rate counts as matched.
        double lo = rep.oracle.rate * 0.95, hi = rep.oracle.rate * 1.05;
        r.damping_verdict = r.rate < lo ? "underdamping"
                                        : (r.rate > hi ? "overdamping" : "matched");
      }
    }
    if (r.envelope_ok && r.norm_N > 1.0 && r.t_coll > 0.0 && r.t_coll < 1e8) {
      log_n.push_back(std::log(r.norm_N));
      log_tcoll.push_back(std::log(r.t_coll));
    }
    rep.entries.push_back(std::move(r));
  }

  if (log_n.size() >= 2 && log_n.front() != log_n.back()) {
    rep.has_collapse_slope = true;
    rep.collapse_log_slope = linfit_slope(log_n, log_tcoll);
  }
  return rep;
}

std::string ComparisonReport::to_json() const {
  json j;
  j["observable"] = observable;
  if (has_oracle) j["oracle"] = to_json_entry(oracle);
  json arr = json::array();
  for (const auto& e : entries) arr.push_back(to_json_entry(e));
  j["trajectories"] = arr;
  if (has_collapse_slope) j["t_coll_logN_slope"] = collapse_log_slope;
  return j.dump(2);
}

}  // namespace nqdyn
