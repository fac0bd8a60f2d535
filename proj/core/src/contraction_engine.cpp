#include "nqdyn/contraction_engine.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <tuple>

namespace nqdyn {

namespace {

using cplx = std::complex<double>;

// Monomial of the two-vertex Gamma_2 density W(x,y) before differentiation.
struct WMonomial {
  cplx coeff;
  int phi_x = -1, phi_y = -1;
  GFactor g[4];
  int ng = 0;
  int npower = 0;
};

struct UnionFind {
  std::array<int, 16> p{};
  void init(int n) { for (int i = 0; i < n; ++i) p[i] = i; }
  int find(int i) { while (p[i] != i) i = p[i] = p[p[i]]; return i; }
  void join(int i, int j) { p[find(i)] = find(j); }
};

// Loop power of a pairing graph.  Nodes are field slots; sigma lines and
// contraction edges each contribute degree one per endpoint.  phi slots have
// degree one, so they terminate an open chain; a closed index cycle counts a
// factor Nc, the open chain through the two condensate insertions counts one
// factor (phi.phi ~ Nc), and each vertex costs 1/Nc.
int loop_power(int n_nodes, const std::vector<std::pair<int, int>>& edges,
               const std::vector<int>& phi_nodes, int n_vertices) {
  UnionFind uf;
  uf.init(n_nodes);
  for (auto& e : edges) uf.join(e.first, e.second);
  std::array<bool, 16> open{};
  for (int n : phi_nodes) open[uf.find(n)] = true;
  int cycles = 0;
  for (int i = 0; i < n_nodes; ++i)
    if (uf.find(i) == i && !open[i]) ++cycles;
  int chain = phi_nodes.empty() ? 0 : 1;
  return cycles + chain - n_vertices;
}

const std::array<std::array<int, 3>, 6> kPerm3 = {{
    {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};

std::vector<std::array<int, 4>> perms4() {
  std::array<int, 4> p = {0, 1, 2, 3};
  std::vector<std::array<int, 4>> out;
  do { out.push_back(p); } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

// Setting sun: W(x,y) = c * sigma_{a b0} sigma_{b1 b2} sigma_{e t0}
// sigma_{t1 t2} phi^a(x) phi^e(y) C^{b_m t_{perm(m)}}(x,y).
void build_setting_sun(cplx c, std::vector<WMonomial>& out, DiagramStats& st,
                       bool leading_only) {
  // Nodes: 0 = phi_x, 1..3 = x slots, 4 = phi_y, 5..7 = y slots.
  st = {};
  st.max_power = -100;
  std::vector<std::pair<int, int>> base = {{0, 1}, {2, 3}, {4, 5}, {6, 7}};
  for (auto& pm : kPerm3) {
    auto edges = base;
    for (int m = 0; m < 3; ++m) edges.push_back({1 + m, 5 + pm[m]});
    int pw = loop_power(8, edges, {0, 4}, 2);
    st.pairings += 1;
    st.max_power = std::max(st.max_power, pw);
  }
  for (auto& pm : kPerm3) {
    auto edges = base;
    for (int m = 0; m < 3; ++m) edges.push_back({1 + m, 5 + pm[m]});
    int pw = loop_power(8, edges, {0, 4}, 2);
    if (pw == st.max_power) st.leading_pairings += 1;
    if (leading_only && pw != st.max_power) continue;
    for (int a = 0; a < 2; ++a)
      for (int b1 = 0; b1 < 2; ++b1)
        for (int e = 0; e < 2; ++e)
          for (int t1 = 0; t1 < 2; ++t1) {
            const int xs[3] = {1 - a, b1, 1 - b1};   // slot indices at x
            const int ys[3] = {1 - e, t1, 1 - t1};   // at y
            WMonomial w;
            w.coeff = c;
            w.phi_x = a;
            w.phi_y = e;
            w.ng = 3;
            for (int m = 0; m < 3; ++m) w.g[m] = {xs[m], ys[pm[m]]};
            w.npower = pw;
            out.push_back(w);
          }
  }
}

// Basketball: W(x,y) = c * sigma_{s0 s1} sigma_{s2 s3} sigma_{t0 t1}
// sigma_{t2 t3} C^{s_m t_{perm(m)}}(x,y).
void build_basketball(cplx c, std::vector<WMonomial>& out, DiagramStats& st,
                      bool leading_only) {
  st = {};
  st.max_power = -100;
  auto pms = perms4();
  std::vector<std::pair<int, int>> base = {{0, 1}, {2, 3}, {4, 5}, {6, 7}};
  std::vector<int> powers;
  for (auto& pm : pms) {
    auto edges = base;
    for (int m = 0; m < 4; ++m) edges.push_back({m, 4 + pm[m]});
    int pw = loop_power(8, edges, {}, 2);
    powers.push_back(pw);
    st.pairings += 1;
    st.max_power = std::max(st.max_power, pw);
  }
  for (std::size_t k = 0; k < pms.size(); ++k) {
    int pw = powers[k];
    if (pw == st.max_power) st.leading_pairings += 1;
    if (leading_only && pw != st.max_power) continue;
    auto& pm = pms[k];
    for (int s0 = 0; s0 < 2; ++s0)
      for (int s2 = 0; s2 < 2; ++s2)
        for (int t0 = 0; t0 < 2; ++t0)
          for (int t2 = 0; t2 < 2; ++t2) {
            const int xs[4] = {s0, 1 - s0, s2, 1 - s2};
            const int ys[4] = {t0, 1 - t0, t2, 1 - t2};
            WMonomial w;
            w.coeff = c;
            w.ng = 4;
            for (int m = 0; m < 4; ++m) w.g[m] = {xs[m], ys[pm[m]]};
            w.npower = pw;
            out.push_back(w);
          }
  }
}

using SigmaKey = std::tuple<int, int, int, int, std::array<int, 6>, int>;

SigmaKey sigma_key(const SigmaMonomial& m) {
  std::array<std::pair<int, int>, 3> gs{};
  for (int i = 0; i < m.ng; ++i) gs[i] = {m.g[i].s, m.g[i].t};
  std::sort(gs.begin(), gs.begin() + m.ng);
  std::array<int, 6> flat{};
  for (int i = 0; i < m.ng; ++i) { flat[2 * i] = gs[i].first; flat[2 * i + 1] = gs[i].second; }
  return {m.a, m.b, m.phi_x, m.phi_y, flat, m.ng};
}

}  // namespace

ContractionEngine::ContractionEngine(double U, double hbar, double Nc,
                                     bool nlo_only) {
  const cplx i_unit(0.0, 1.0);

  // --- Double bubble: Gamma_DB density = -(U/4Nc) sigma_{s0 s1} sigma_{s2 s3}
  // * sum over the 3 pairings of the four slots, C factors at equal points.
  // The raised local self-energy entering the kernel equation is
  // Sigma_hat^{a}{}_{c} = -sigma^{a e} d(density)/dC^{e c}.
  {
    db_ = {};
    db_.max_power = -100;
    const std::array<std::array<int, 4>, 3> match = {{
        {0, 1, 2, 3}, {0, 2, 1, 3}, {0, 3, 1, 2}}};
    std::map<std::tuple<int, int, int, int>, cplx> acc;
    for (auto& mt : match) {
      std::vector<std::pair<int, int>> edges = {{0, 1}, {2, 3},
                                                {mt[0], mt[1]}, {mt[2], mt[3]}};
      int pw = loop_power(4, edges, {}, 1);
      db_.pairings += 1;
      db_.max_power = std::max(db_.max_power, pw);
    }
    for (auto& mt : match) {
      std::vector<std::pair<int, int>> edges = {{0, 1}, {2, 3},
                                                {mt[0], mt[1]}, {mt[2], mt[3]}};
      int pw = loop_power(4, edges, {}, 1);
      if (pw == db_.max_power) db_.leading_pairings += 1;
      for (int s0 = 0; s0 < 2; ++s0)
        for (int s2 = 0; s2 < 2; ++s2) {
          const int idx[4] = {s0, 1 - s0, s2, 1 - s2};
          const cplx c = cplx(-U / (4.0 * Nc), 0.0);
          // Two C factors (p0,p1) and (p2,p3); differentiate each with both
          // orientations, the other factor stays.
          const std::pair<int, int> f0 = {idx[mt[0]], idx[mt[1]]};
          const std::pair<int, int> f1 = {idx[mt[2]], idx[mt[3]]};
          auto add = [&](std::pair<int, int> der, std::pair<int, int> rest) {
            acc[{der.first, der.second, rest.first, rest.second}] += c;
            acc[{der.second, der.first, rest.first, rest.second}] += c;
          };
          add(f0, f1);
          add(f1, f0);
        }
    }
    for (auto& [k, v] : acc) {
      auto [e, cc, s, t] = k;
      if (std::abs(v) < 1e-15) continue;
      LocalSigmaTerm term;
      term.a = 1 - e;  // raise with sigma
      term.c = cc;
      term.s = s;
      term.t = t;
      term.coeff = -v;
      local_.push_back(term);
    }
  }

  // --- Two-vertex diagrams.
  std::vector<WMonomial> wss, wbb;
  const cplx c_ss = (i_unit / (2.0 * hbar)) * (U * U / (Nc * Nc));
  const cplx c_bb = (i_unit / (2.0 * hbar)) * (U * U / (16.0 * Nc * Nc));
  build_setting_sun(c_ss, wss, ss_, nlo_only);
  build_basketball(c_bb, wbb, bb_, nlo_only);

  // Sigma_{ab}(u,v) = 2i hbar dW-sum/dC^{ab}(u,v), two orientations; the
  // second orientation swaps the roles of the arguments and is canonicalized
  // back via C^{st}(v,u) = C^{ts}(u,v) and the phi factors changing slots.
  std::map<SigmaKey, SigmaMonomial> merged;
  auto differentiate = [&](const std::vector<WMonomial>& ws) {
    for (auto& w : ws) {
      for (int m = 0; m < w.ng; ++m) {
        SigmaMonomial s1;
        s1.coeff = 2.0 * i_unit * hbar * w.coeff;
        s1.a = w.g[m].s;
        s1.b = w.g[m].t;
        s1.phi_x = w.phi_x;
        s1.phi_y = w.phi_y;
        s1.ng = 0;
        for (int j = 0; j < w.ng; ++j)
          if (j != m) s1.g[s1.ng++] = w.g[j];
        s1.npower = w.npower;

        SigmaMonomial s2;
        s2.coeff = s1.coeff;
        s2.a = w.g[m].t;
        s2.b = w.g[m].s;
        s2.phi_x = w.phi_y;
        s2.phi_y = w.phi_x;
        s2.ng = 0;
        for (int j = 0; j < w.ng; ++j)
          if (j != m) s2.g[s2.ng++] = {w.g[j].t, w.g[j].s};
        s2.npower = w.npower;

        for (auto& s : {s1, s2}) {
          auto key = sigma_key(s);
          auto it = merged.find(key);
          if (it == merged.end()) merged.emplace(key, s);
          else it->second.coeff += s.coeff;
        }
      }
    }
  };
  differentiate(wss);
  differentiate(wbb);
  for (auto& [k, v] : merged)
    if (std::abs(v.coeff) > 1e-15) sigma_.push_back(v);

  // Mean-field memory force: Y_a(x;y) = 2 dW/dphi^a(x) (factor 2 from the
  // x<->y symmetry of the double contour integral); only the setting sun
  // carries condensate insertions.
  std::map<std::tuple<int, int, std::array<int, 6>>, PhiForceMonomial> fmerged;
  for (auto& w : wss) {
    if (w.phi_x < 0) continue;
    PhiForceMonomial f;
    f.coeff = 2.0 * w.coeff;
    f.a = w.phi_x;
    f.phi_y = w.phi_y;
    f.ng = w.ng;
    for (int j = 0; j < w.ng; ++j) f.g[j] = w.g[j];
    f.npower = w.npower;
    std::array<std::pair<int, int>, 3> gs{};
    for (int i = 0; i < f.ng; ++i) gs[i] = {f.g[i].s, f.g[i].t};
    std::sort(gs.begin(), gs.begin() + f.ng);
    std::array<int, 6> flat{};
    for (int i = 0; i < f.ng; ++i) { flat[2 * i] = gs[i].first; flat[2 * i + 1] = gs[i].second; }
    auto key = std::make_tuple(f.a, f.phi_y, flat);
    auto it = fmerged.find(key);
    if (it == fmerged.end()) fmerged.emplace(key, f);
    else it->second.coeff += f.coeff;
  }
  for (auto& [k, v] : fmerged)
    if (std::abs(v.coeff) > 1e-15) force_.push_back(v);
}

}  // namespace nqdyn
