#include "approxsat/lambda.hpp"

#include <algorithm>
#include <atomic>
#include <deque>
#include <future>
#include <set>

namespace approxsat {

namespace {

const Rat kTinyPrec = pow2_inv(40);

// ---------------------------------------------------------------------------
// Branch-and-bound core

struct SupProblem {
  const Carrier* carrier = nullptr;  // domain of every variable slot
  int nvars = 0;
  // Metric comparison key of the objective distance at a point tuple.
  std::function<Rat(const std::vector<Point>&)> key_of;
  const Metric* value_metric = nullptr;
  std::vector<Rat> sensitivity;  // per slot
};

struct FactorCell {
  std::vector<Point> verts;
  Point center;
  Rat radius_hi = Rat(0);
};

struct ProductCell {
  std::vector<FactorCell> factors;
  Rat val_lo, val_hi;
  Rat bound;
  long id = 0;
};

FactorCell make_factor(const Carrier& c, std::vector<Point> verts, const Rat& prec) {
  FactorCell f;
  f.verts = std::move(verts);
  f.center = Point::centroid(f.verts);
  const Metric& m = c.metric();
  Rat worst(0);
  for (const auto& v : f.verts) worst = std::max(worst, m.cmp(f.center, v));
  f.radius_hi = m.key_to_interval(worst, prec).hi;
  return f;
}

class BnbState {
 public:
  BnbState(const SupProblem& p, Rat tol, const BnbOptions& opts)
      : p_(p), tol_(std::move(tol)), opts_(opts) {
    prec_ = std::min(Rat(tol_ / 8), Rat(kTinyPrec * 1024));
    if (prec_ <= 0) prec_ = kTinyPrec;
  }

  SupInterval run() {
    seed_cells();
    long iters = 0;
    while (!heap_.empty()) {
      auto top = *heap_.begin();
      Rat hi_now = std::max(lo_, top.bound);
      if (opts_.stop_lo_above && lo_ > *opts_.stop_lo_above) return finish(hi_now, false);
      if (opts_.stop_hi_below && hi_now < *opts_.stop_hi_below) return finish(hi_now, false);
      if (top.bound <= lo_ + tol_) return finish(hi_now, false);
      if (++iters > opts_.max_iterations) return finish(hi_now, true);
      heap_.erase(heap_.begin());
      split(cells_[top.idx]);
    }
    return finish(lo_, false);
  }

 private:
  struct HeapKey {
    Rat bound;
    long id;
    size_t idx;
    bool operator<(const HeapKey& o) const {
      if (bound != o.bound) return bound > o.bound;  // max first
      return id < o.id;
    }
  };

  SupInterval finish(Rat hi, bool capped) {
    SupInterval out;
    out.lo = lo_;
    out.hi = std::max(lo_, hi);
    out.capped = capped;
    out.cells = static_cast<long>(cells_.size());
    return out;
  }

  void eval_cell(ProductCell& cell) {
    std::vector<Point> pts;
    pts.reserve(cell.factors.size());
    for (const auto& f : cell.factors) pts.push_back(f.center);
    Interval v = p_.value_metric->key_to_interval(p_.key_of(pts), prec_);
    cell.val_lo = v.lo;
    cell.val_hi = v.hi;
    cell.bound = v.hi;
    for (int j = 0; j < p_.nvars; ++j)
      cell.bound += p_.sensitivity[j] * cell.factors[j].radius_hi;
    lo_ = std::max(lo_, v.lo);
  }

  void push_cell(ProductCell cell) {
    cell.id = next_id_++;
    eval_cell(cell);
    if (cell.bound <= lo_) return;  // cannot raise the sup beyond lo
    size_t idx = cells_.size();
    cells_.push_back(std::move(cell));
    heap_.insert({cells_[idx].bound, cells_[idx].id, idx});
  }

  void seed_cells() {
    const Complex& k = p_.carrier->complex();
    const auto& tops = k.top_simplices();
    // Cheap exact lower bounds first: evaluate at all vertex tuples when
    // the tuple space is small.
    double combos = 1;
    for (int j = 0; j < p_.nvars; ++j) combos *= k.vertex_count();
    if (p_.nvars > 0 && combos <= 4096) {
      std::vector<int> vo(p_.nvars, 0);
      for (;;) {
        std::vector<Point> pts;
        for (int j = 0; j < p_.nvars; ++j) pts.push_back(Point::vertex(vo[j]));
        lo_ = std::max(lo_, p_.value_metric->key_to_interval(p_.key_of(pts), prec_).lo);
        int j = 0;
        for (; j < p_.nvars; ++j) {
          if (++vo[j] < k.vertex_count()) break;
          vo[j] = 0;
        }
        if (j == p_.nvars) break;
      }
    }
    std::vector<int> odo(p_.nvars, 0);
    for (;;) {
      ProductCell cell;
      for (int j = 0; j < p_.nvars; ++j) {
        std::vector<Point> verts;
        for (VertexId v : tops[odo[j]]) verts.push_back(Point::vertex(v));
        cell.factors.push_back(make_factor(*p_.carrier, std::move(verts), prec_));
      }
      push_cell(std::move(cell));
      if (p_.nvars == 0) break;
      int j = 0;
      for (; j < p_.nvars; ++j) {
        if (++odo[j] < static_cast<int>(tops.size())) break;
        odo[j] = 0;
      }
      if (j == p_.nvars) break;
    }
  }

  void split(const ProductCell& cell) {
    // Factor with the largest radius; within it, bisect the longest edge.
    int jbest = 0;
    for (int j = 1; j < p_.nvars; ++j)
      if (cell.factors[j].radius_hi > cell.factors[jbest].radius_hi) jbest = j;
    const FactorCell& f = cell.factors[jbest];
    if (f.verts.size() < 2 || f.radius_hi == 0) return;  // point cell
    const Metric& m = p_.carrier->metric();
    size_t ia = 0, ib = 1;
    Rat best(-1);
    for (size_t a = 0; a < f.verts.size(); ++a)
      for (size_t b = a + 1; b < f.verts.size(); ++b) {
        Rat key = m.cmp(f.verts[a], f.verts[b]);
        if (key > best) {
          best = key;
          ia = a;
          ib = b;
        }
      }
    Point mid = Point::midpoint(f.verts[ia], f.verts[ib]);
    for (size_t drop : {ia, ib}) {
      ProductCell child;
      child.factors = cell.factors;
      std::vector<Point> verts = f.verts;
      verts[drop] = mid;
      child.factors[jbest] = make_factor(*p_.carrier, std::move(verts), prec_);
      push_cell(std::move(child));
    }
  }

  const SupProblem& p_;
  Rat tol_;
  BnbOptions opts_;
  Rat prec_;
  Rat lo_ = Rat(0);
  std::deque<ProductCell> cells_;
  std::set<HeapKey> heap_;
  long next_id_ = 0;
};

// ---------------------------------------------------------------------------
// Exact fast paths

bool term_all_affine(const Algebra& a, const Term& t) {
  if (t.is_var()) return true;
  if (!a.op(t.symbol()).affine()) return false;
  for (const auto& s : t.args())
    if (!term_all_affine(a, s)) return false;
  return true;
}

// Exact sup for affine term pairs: the objective is convex over the convex
// hulls of the variables' vertex embeddings, so the sup over |K|^v equals
// the max over vertex tuples (all of which lie in |K|^v).
std::optional<SupInterval> affine_exact_sup(const Algebra& a, const Term& lhs,
                                            const Term& rhs, const std::vector<int>& vars,
                                            const Rat& tol) {
  if (!term_all_affine(a, lhs) || !term_all_affine(a, rhs)) return std::nullopt;
  const Complex& k = a.carrier->complex();
  const Metric& m = a.carrier->metric();
  double combos = 1;
  for (size_t j = 0; j < vars.size(); ++j) combos *= k.vertex_count();
  if (combos > 200000) return std::nullopt;
  std::vector<int> odo(vars.size(), 0);
  Rat best(0);
  bool first = true;
  for (;;) {
    Env env;
    for (size_t j = 0; j < vars.size(); ++j) env[vars[j]] = Point::vertex(odo[j]);
    Rat key = m.cmp(term_evaluate(a, lhs, env), term_evaluate(a, rhs, env));
    if (first || key > best) best = key;
    first = false;
    size_t j = 0;
    for (; j < vars.size(); ++j) {
      if (++odo[j] < k.vertex_count()) break;
      odo[j] = 0;
    }
    if (j == vars.size()) break;
  }
  Interval iv = m.key_to_interval(best, std::min(Rat(tol / 4), Rat(kTinyPrec * 1024)));
  SupInterval out;
  out.lo = iv.lo;
  out.hi = iv.hi;
  out.exact = true;
  return out;
}

// Zero certificate for min/max terms over a 1-d carrier: every feasible
// weak ordering of the leaves must collapse both sides to leaves the
// ordering makes equal.
struct ChainLeaf {
  bool is_var = false;
  int var = -1;
  Rat value;  // constants
};

struct ChainNode {
  int leaf = -1;  // >= 0: leaf index
  int kind = 0;   // -1 min, +1 max for internal nodes
  int left = -1, right = -1;
};

class ChainZeroChecker {
 public:
  explicit ChainZeroChecker(const Algebra& a) : a_(a) {}

  bool certify(const Term& lhs, const Term& rhs) {
    if (a_.carrier->metric().dim() != 1) return false;
    int l = build(lhs);
    int r = build(rhs);
    if (l < 0 || r < 0 || leaves_.size() > 6) return false;
    const Metric& m = a_.carrier->metric();
    Rat dmin = m.vertex_embedding(0)[0], dmax = dmin;
    for (VertexId v = 1; v < a_.carrier->complex().vertex_count(); ++v) {
      Rat e = m.vertex_embedding(v)[0];
      dmin = std::min(dmin, e);
      dmax = std::max(dmax, e);
    }
    std::vector<int> rank(leaves_.size(), -1);
    return all_orders_ok(rank, 0, l, r, dmin, dmax);
  }

 private:
  int build(const Term& t) {
    if (t.is_var()) return leaf_node(ChainLeaf{true, t.var_index(), Rat(0)});
    const Operation& op = a_.op(t.symbol());
    if (op.arity() == 0) {
      Point val = op.evaluate({});
      return leaf_node(ChainLeaf{false, -1, a_.carrier->embed(val)[0]});
    }
    if (op.chain_lattice() == 0 || op.arity() != 2) return -1;
    int l = build(t.args()[0]);
    int r = build(t.args()[1]);
    if (l < 0 || r < 0) return -1;
    nodes_.push_back({-1, op.chain_lattice(), l, r});
    return static_cast<int>(nodes_.size()) - 1;
  }

  int leaf_node(ChainLeaf leaf) {
    int idx = -1;
    for (size_t i = 0; i < leaves_.size(); ++i) {
      if (leaves_[i].is_var == leaf.is_var && leaves_[i].var == leaf.var &&
          (leaf.is_var || leaves_[i].value == leaf.value))
        idx = static_cast<int>(i);
    }
    if (idx < 0) {
      leaves_.push_back(leaf);
      idx = static_cast<int>(leaves_.size()) - 1;
    }
    nodes_.push_back({idx, 0, -1, -1});
    return static_cast<int>(nodes_.size()) - 1;
  }

  bool all_orders_ok(std::vector<int>& rank, size_t i, int l, int r, const Rat& dmin,
                     const Rat& dmax) {
    if (i == rank.size()) {
      if (!feasible(rank, dmin, dmax)) return true;  // vacuous
      int ll = simplify(l, rank);
      int rl = simplify(r, rank);
      return rank[ll] == rank[rl];
    }
    for (int v = 0; v < static_cast<int>(rank.size()); ++v) {
      rank[i] = v;
      if (!all_orders_ok(rank, i + 1, l, r, dmin, dmax)) return false;
    }
    rank[i] = -1;
    return true;
  }

  bool feasible(const std::vector<int>& rank, const Rat& dmin, const Rat& dmax) const {
    for (size_t i = 0; i < leaves_.size(); ++i)
      for (size_t j = i + 1; j < leaves_.size(); ++j) {
        int rel = rank[i] < rank[j] ? -1 : (rank[i] > rank[j] ? 1 : 0);
        const ChainLeaf& a = leaves_[i];
        const ChainLeaf& b = leaves_[j];
        if (!a.is_var && !b.is_var) {
          int actual = a.value < b.value ? -1 : (a.value > b.value ? 1 : 0);
          if (rel != actual) return false;
        } else if (a.is_var != b.is_var) {
          const Rat& c = a.is_var ? b.value : a.value;
          int vrel = a.is_var ? rel : -rel;  // the variable relative to c
          if (vrel < 0 && !(dmin < c)) return false;
          if (vrel > 0 && !(dmax > c)) return false;
          if (vrel == 0 && !(dmin <= c && c <= dmax)) return false;
        }
      }
    return true;
  }

  int simplify(int node, const std::vector<int>& rank) const {
    const ChainNode& n = nodes_[node];
    if (n.leaf >= 0) return n.leaf;
    int l = simplify(n.left, rank);
    int r = simplify(n.right, rank);
    if (n.kind < 0) return rank[l] <= rank[r] ? l : r;
    return rank[l] >= rank[r] ? l : r;
  }

  const Algebra& a_;
  std::vector<ChainLeaf> leaves_;
  std::vector<ChainNode> nodes_;
};

std::vector<int> equation_vars(const Equation& e) {
  auto lv = e.lhs.variables();
  auto rv = e.rhs.variables();
  std::set<int> s(lv.begin(), lv.end());
  s.insert(rv.begin(), rv.end());
  return {s.begin(), s.end()};
}

}  // namespace

// ---------------------------------------------------------------------------
// sup_equation / lambda_algebra / sup_op_distance

SupInterval sup_equation(const Algebra& a, const Equation& e, const Rat& tol,
                         const BnbOptions& opts) {
  if (tol <= 0) throw std::invalid_argument("tolerance must be positive");
  if (e.lhs == e.rhs) {
    SupInterval out;
    out.exact = true;
    return out;
  }
  std::vector<int> vars = equation_vars(e);
  const Metric& m = a.carrier->metric();
  if (vars.empty()) {
    Env env;
    Interval v = m.key_to_interval(
        m.cmp(term_evaluate(a, e.lhs, env), term_evaluate(a, e.rhs, env)),
        std::min(Rat(tol / 4), Rat(kTinyPrec * 1024)));
    SupInterval out;
    out.lo = v.lo;
    out.hi = v.hi;
    out.exact = true;
    return out;
  }
  {
    ChainZeroChecker chain(a);
    if (chain.certify(e.lhs, e.rhs)) {
      SupInterval out;
      out.exact = true;
      return out;
    }
  }
  if (auto exact = affine_exact_sup(a, e.lhs, e.rhs, vars, tol)) return *exact;

  SupProblem p;
  p.carrier = a.carrier.get();
  p.nvars = static_cast<int>(vars.size());
  p.value_metric = &m;
  auto slhs = term_sensitivity(a, e.lhs);
  auto srhs = term_sensitivity(a, e.rhs);
  for (int v : vars) {
    Rat s(0);
    if (auto it = slhs.find(v); it != slhs.end()) s += it->second;
    if (auto it = srhs.find(v); it != srhs.end()) s += it->second;
    p.sensitivity.push_back(s);
  }
  p.key_of = [&a, &e, &vars, &m](const std::vector<Point>& pts) {
    Env env;
    for (size_t j = 0; j < vars.size(); ++j) env[vars[j]] = pts[j];
    return m.cmp(term_evaluate(a, e.lhs, env), term_evaluate(a, e.rhs, env));
  };
  return BnbState(p, tol, opts).run();
}

SupInterval lambda_algebra(const Algebra& a, const Theory& sigma, const Rat& tol,
                           const BnbOptions& opts) {
  SupInterval out;
  out.exact = true;
  for (const auto& e : sigma.equations) {
    SupInterval s = sup_equation(a, e, tol, opts);
    out.lo = std::max(out.lo, s.lo);
    out.hi = std::max(out.hi, s.hi);
    out.exact = out.exact && s.exact;
    out.capped = out.capped || s.capped;
    out.cells += s.cells;
    if (opts.stop_lo_above && out.lo > *opts.stop_lo_above) return out;
  }
  return out;
}

SupInterval sup_op_distance(const Operation& f, const Operation& g, const Rat& tol,
                            const BnbOptions& opts) {
  if (f.arity() != g.arity()) throw std::invalid_argument("arity mismatch");
  const Carrier& c = *f.carrier();
  const Metric& m = c.metric();
  int n = f.arity();
  if (n == 0) {
    Interval v = m.key_to_interval(m.cmp(f.evaluate({}), g.evaluate({})),
                                   std::min(Rat(tol / 4), Rat(kTinyPrec * 1024)));
    SupInterval out;
    out.lo = v.lo;
    out.hi = v.hi;
    out.exact = true;
    return out;
  }
  if (f.affine() && g.affine()) {
    const Complex& k = c.complex();
    double combos = 1;
    for (int j = 0; j < n; ++j) combos *= k.vertex_count();
    if (combos <= 200000) {
      std::vector<int> odo(n, 0);
      Rat best(0);
      bool first = true;
      for (;;) {
        std::vector<Point> pts;
        for (int j = 0; j < n; ++j) pts.push_back(Point::vertex(odo[j]));
        Rat key = m.cmp(f.evaluate(pts), g.evaluate(pts));
        if (first || key > best) best = key;
        first = false;
        int j = 0;
        for (; j < n; ++j) {
          if (++odo[j] < k.vertex_count()) break;
          odo[j] = 0;
        }
        if (j == n) break;
      }
      Interval iv = m.key_to_interval(best, std::min(Rat(tol / 4), Rat(kTinyPrec * 1024)));
      SupInterval out;
      out.lo = iv.lo;
      out.hi = iv.hi;
      out.exact = true;
      return out;
    }
  }
  SupProblem p;
  p.carrier = &c;
  p.nvars = n;
  p.value_metric = &m;
  for (int j = 0; j < n; ++j) p.sensitivity.push_back(f.lip_args()[j] + g.lip_args()[j]);
  p.key_of = [&f, &g, &m](const std::vector<Point>& pts) {
    return m.cmp(f.evaluate(pts), g.evaluate(pts));
  };
  return BnbState(p, tol, opts).run();
}

// ---------------------------------------------------------------------------
// decide_within

namespace {

// All simplicial vertex maps from dom into cod, enumerated lexicographically
// by image tuple; capped.
std::vector<std::vector<VertexId>> enumerate_simplicial_maps(const Complex& dom,
                                                             const Complex& cod,
                                                             long cap) {
  int nv = dom.vertex_count();
  int w = cod.vertex_count();
  std::vector<std::vector<const Simplex*>> by_max(nv);
  for (const auto& s : dom.simplices())
    if (s.size() > 1) by_max[s.back()].push_back(&s);

  std::vector<std::vector<VertexId>> out;
  std::vector<VertexId> cur(nv, -1);
  std::function<void(int)> rec = [&](int v) {
    if (static_cast<long>(out.size()) > cap) return;
    if (v == nv) {
      out.push_back(cur);
      return;
    }
    for (VertexId img = 0; img < w; ++img) {
      cur[v] = img;
      bool ok = true;
      for (const Simplex* s : by_max[v]) {
        Simplex image;
        for (VertexId u : *s) image.push_back(cur[u]);
        std::sort(image.begin(), image.end());
        image.erase(std::unique(image.begin(), image.end()), image.end());
        if (!cod.contains(image)) {
          ok = false;
          break;
        }
      }
      if (ok) rec(v + 1);
      if (static_cast<long>(out.size()) > cap) return;
    }
    cur[v] = -1;
  };
  rec(0);
  return out;
}

// Per-cell barycentric-coordinate Lipschitz data, reusable across all
// vertex maps with the same (carrier, arity, M).
struct CellGeometry {
  Simplex cell;
  std::vector<Rat> coord_lip;  // for vertices 1..k of the cell
};

std::vector<Rat> solve_square(std::vector<std::vector<Rat>> a, std::vector<Rat> b) {
  int k = static_cast<int>(b.size());
  for (int col = 0; col < k; ++col) {
    int piv = -1;
    for (int r = col; r < k; ++r)
      if (a[r][col] != 0) {
        piv = r;
        break;
      }
    if (piv < 0) throw std::domain_error("degenerate simplex");
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (int r = 0; r < k; ++r) {
      if (r == col || a[r][col] == 0) continue;
      Rat f = a[r][col] / a[col][col];
      for (int c2 = col; c2 < k; ++c2) a[r][c2] -= f * a[col][c2];
      b[r] -= f * b[col];
    }
  }
  std::vector<Rat> x(k);
  for (int c = 0; c < k; ++c) x[c] = b[c] / a[c][c];
  return x;
}

std::vector<CellGeometry> domain_geometry(const Carrier& carrier, int arity, int M) {
  const PowerData& pd = carrier.power(std::max(1, arity));
  pd.tower->ensure(M);
  const Complex& dom = pd.tower->complex_at(M);
  const Metric& dm = *pd.metric;
  std::vector<std::vector<Rat>> dome(dom.vertex_count());
  for (VertexId v = 0; v < dom.vertex_count(); ++v)
    dome[v] = dm.embed(pd.tower->vertex_base_point(M, v));
  std::vector<CellGeometry> out;
  for (const auto& cell : dom.top_simplices()) {
    int k = static_cast<int>(cell.size()) - 1;
    CellGeometry g;
    g.cell = cell;
    if (k > 0) {
      std::vector<std::vector<Rat>> edges(k, std::vector<Rat>(dm.dim()));
      for (int i = 1; i <= k; ++i)
        for (int c = 0; c < dm.dim(); ++c)
          edges[i - 1][c] = dome[cell[i]][c] - dome[cell[0]][c];
      std::vector<std::vector<Rat>> gram(k, std::vector<Rat>(k, Rat(0)));
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
          for (int c = 0; c < dm.dim(); ++c) gram[i][j] += edges[i][c] * edges[j][c];
      for (int i = 1; i <= k; ++i) {
        std::vector<Rat> e(k, Rat(0));
        e[i - 1] = Rat(1);
        std::vector<Rat> x = solve_square(gram, e);
        std::vector<Rat> grad(dm.dim(), Rat(0));
        for (int r = 0; r < k; ++r)
          for (int c = 0; c < dm.dim(); ++c) grad[c] += x[r] * edges[r][c];
        g.coord_lip.push_back(dm.dual_norm_upper(grad, kTinyPrec));
      }
    }
    out.push_back(std::move(g));
  }
  return out;
}

Rat lipschitz_from_geometry(const Carrier& carrier,
                            const std::vector<CellGeometry>& geom,
                            const std::vector<std::vector<Rat>>& image_embed,
                            const std::vector<VertexId>& vmap) {
  const Metric& cm = carrier.metric();
  Rat best(0);
  for (const auto& g : geom) {
    Rat cell_bound(0);
    for (size_t i = 1; i < g.cell.size(); ++i) {
      Rat step =
          cm.key_to_interval(cm.cmp_embedded(image_embed[vmap[g.cell[i]]],
                                             image_embed[vmap[g.cell[0]]]),
                             kTinyPrec)
              .hi;
      cell_bound += step * g.coord_lip[i - 1];
    }
    best = std::max(best, cell_bound);
  }
  return best * carrier.geodesic_distortion();
}

struct TupleVerdict {
  enum Kind { Pass, Reject, Straddle, Budget } kind = Budget;
  Rat gap = Rat(0);
  long cells = 0;
};

}  // namespace

Decision decide_within(const CarrierPtr& k, const Theory& sigma, int M, int N,
                       const Rat& q, const Rat& tol, const DecideOptions& opts) {
  if (q <= 0) throw std::invalid_argument("threshold q must be positive");
  Decision dec;

  // Size guard: refuse to build towers past a fixed complexity.
  auto try_ensure = [](Tower& tw, int target) -> bool {
    for (int lvl = 1; lvl <= target; ++lvl) {
      if (tw.complex_at(lvl - 1).simplices().size() > 3000) return false;
      tw.ensure(lvl);
    }
    return true;
  };
  if (!try_ensure(k->tower(), N)) {
    dec.budget_exhausted = true;
    return dec;
  }
  const Complex& cod = k->tower().complex_at(N);

  struct SymbolData {
    std::string name;
    int arity;
    std::vector<std::vector<VertexId>> maps;
    std::vector<CellGeometry> geom;  // arity >= 1
  };
  std::vector<SymbolData> symbols;
  long cap = opts.max_tuples < 0 ? (1L << 40) : opts.max_tuples;
  std::vector<std::vector<Rat>> image_embed(cod.vertex_count());
  for (VertexId w = 0; w < cod.vertex_count(); ++w)
    image_embed[w] = k->metric().embed(k->tower().vertex_base_point(N, w));

  for (const auto& s : sigma.type.symbols) {
    SymbolData sd;
    sd.name = s.name;
    sd.arity = s.arity;
    if (s.arity == 0) {
      for (VertexId w = 0; w < cod.vertex_count(); ++w) sd.maps.push_back({w});
    } else {
      const PowerData& pd = k->power(s.arity);
      if (!try_ensure(*pd.tower, M)) {
        dec.budget_exhausted = true;
        return dec;
      }
      sd.maps = enumerate_simplicial_maps(pd.tower->complex_at(M), cod, cap + 1);
      sd.geom = domain_geometry(*k, s.arity, M);
    }
    symbols.push_back(std::move(sd));
  }

  double total = 1;
  for (const auto& sd : symbols) total *= static_cast<double>(sd.maps.size());
  dec.tuples_total = total > 1e15 ? -1 : static_cast<long>(total);
  long examine = dec.tuples_total;
  if (opts.max_tuples >= 0 && (dec.tuples_total < 0 || dec.tuples_total > opts.max_tuples)) {
    examine = opts.max_tuples;
    dec.budget_exhausted = true;
  }

  // Grid sample points: complex vertices plus top-cell centroids.
  std::vector<Point> grid;
  for (VertexId v = 0; v < k->complex().vertex_count(); ++v) grid.push_back(Point::vertex(v));
  for (const auto& t : k->complex().top_simplices()) {
    std::vector<Point> verts;
    for (VertexId v : t) verts.push_back(Point::vertex(v));
    grid.push_back(Point::centroid(verts));
  }
  const Metric& m = k->metric();
  Rat q_key = m.mode() == Metric::Mode::Squared ? Rat(q * q) : q;

  auto build_algebra = [&](long index) {
    std::vector<long> digit(symbols.size());
    long rest = index;
    for (int i = static_cast<int>(symbols.size()) - 1; i >= 0; --i) {
      digit[i] = rest % static_cast<long>(symbols[i].maps.size());
      rest /= static_cast<long>(symbols[i].maps.size());
    }
    Algebra alg;
    alg.carrier = k;
    std::vector<std::vector<VertexId>> used;
    for (size_t i = 0; i < symbols.size(); ++i) {
      const auto& sd = symbols[i];
      const auto& vmap = sd.maps[digit[i]];
      Rat lip = sd.arity == 0 ? Rat(0)
                              : lipschitz_from_geometry(*k, sd.geom, image_embed, vmap);
      alg.ops[sd.name] = Operation::pl_precertified(k, sd.arity, M, N, vmap, lip);
      used.push_back(vmap);
    }
    return std::make_pair(alg, used);
  };

  auto examine_tuple = [&](long index) -> TupleVerdict {
    Algebra alg = build_algebra(index).first;
    TupleVerdict verdict;
    verdict.kind = TupleVerdict::Pass;
    for (const auto& eq : sigma.equations) {
      std::vector<int> vars = equation_vars(eq);
      bool rejected = false;
      double combos = 1;
      for (size_t j = 0; j < vars.size(); ++j) combos *= grid.size();
      if (combos <= 4096) {
        std::vector<int> odo(vars.size(), 0);
        for (;;) {
          Env env;
          for (size_t j = 0; j < vars.size(); ++j) env[vars[j]] = grid[odo[j]];
          if (m.cmp(term_evaluate(alg, eq.lhs, env), term_evaluate(alg, eq.rhs, env)) >
              q_key) {
            rejected = true;
            break;
          }
          if (vars.empty()) break;
          size_t j = 0;
          for (; j < vars.size(); ++j) {
            if (++odo[j] < static_cast<int>(grid.size())) break;
            odo[j] = 0;
          }
          if (j == vars.size()) break;
        }
      }
      if (rejected) {
        verdict.kind = TupleVerdict::Reject;
        return verdict;
      }
      BnbOptions bo;
      bo.max_iterations = opts.bnb_iterations;
      bo.stop_lo_above = q;
      bo.stop_hi_below = q;
      SupInterval s = sup_equation(alg, eq, tol, bo);
      verdict.cells += s.cells;
      if (s.lo > q) {
        verdict.kind = TupleVerdict::Reject;
        return verdict;
      }
      if (s.hi < q) continue;  // certified below q
      verdict.kind = s.capped ? TupleVerdict::Budget : TupleVerdict::Straddle;
      verdict.gap = std::max(verdict.gap, Rat(s.hi - s.lo));
    }
    return verdict;
  };

  long block = std::max(1, opts.threads * 8);
  for (long start = 0; start < examine; start += block) {
    long end = std::min(examine, start + block);
    std::vector<TupleVerdict> verdicts(end - start);
    if (opts.threads > 1) {
      std::vector<std::future<void>> futs;
      std::atomic<long> next(start);
      for (int t = 0; t < opts.threads; ++t)
        futs.push_back(std::async(std::launch::async, [&] {
          for (;;) {
            long i = next.fetch_add(1);
            if (i >= end) return;
            verdicts[i - start] = examine_tuple(i);
          }
        }));
      for (auto& f : futs) f.get();
    } else {
      for (long i = start; i < end; ++i) verdicts[i - start] = examine_tuple(i);
    }
    for (long i = start; i < end; ++i) {
      const TupleVerdict& v = verdicts[i - start];
      ++dec.tuples_examined;
      dec.cells += v.cells;
      if (v.kind == TupleVerdict::Pass) {
        dec.verdict = Decision::Verdict::Yes;
        dec.witness_index = i;
        auto [alg, used] = build_algebra(i);
        dec.witness = alg;
        dec.witness_maps = used;
        return dec;
      }
      if (v.kind == TupleVerdict::Straddle || v.kind == TupleVerdict::Budget) {
        ++dec.straddling;
        dec.gap = std::max(dec.gap, v.gap);
        if (v.kind == TupleVerdict::Budget) dec.budget_exhausted = true;
      }
    }
  }
  if (dec.straddling == 0 && !dec.budget_exhausted)
    dec.verdict = Decision::Verdict::No;
  else
    dec.verdict = Decision::Verdict::Undecided;
  return dec;
}

// ---------------------------------------------------------------------------
// Streams

const std::vector<std::pair<std::string, CarrierPtr>>& seed_family() {
  static const std::vector<std::pair<std::string, CarrierPtr>> fam = [] {
    std::vector<std::pair<std::string, CarrierPtr>> f;
    f.push_back({"edge", make_interval_carrier()});
    {
      auto cx =
          std::make_shared<Complex>(Complex::from_top({"a", "b", "c"}, {{0, 1, 2}}));
      MetricSpec spec;  // barycentric 2-simplex
      f.push_back({"triangle", Carrier::make(cx, spec)});
    }
    f.push_back({"square", make_square_carrier()});
    f.push_back({"triode", make_triode_carrier_symmetric()});
    return f;
  }();
  return fam;
}

namespace {

// Fixed enumeration of small theories: for each similarity type in order,
// all depth<=2 terms over x0,x1 in spelling order, equations (i <= j), then
// one-equation theories followed by two-equation theories.
class TheoryEnumerator {
 public:
  TheoryEnumerator() {
    auto add_type = [&](std::vector<OpSymbol> syms) {
      SimilarityType t;
      for (auto& s : syms) t.declare(s.name, s.arity);
      types_.push_back(t);
    };
    add_type({});
    add_type({{"F", 1}});
    add_type({{"F", 2}});
    add_type({{"F", 1}, {"G", 1}});
    add_type({{"F", 2}, {"G", 1}});
    add_type({{"F", 2}, {"G", 2}});
    for (const auto& t : types_) {
      std::vector<Term> terms = {Term::var(0), Term::var(1)};
      for (int d = 0; d < 2; ++d) {
        size_t upto = terms.size();
        for (const auto& s : t.symbols) {
          std::vector<size_t> odo(s.arity, 0);
          for (;;) {
            std::vector<Term> args;
            for (int i = 0; i < s.arity; ++i) args.push_back(terms[odo[i]]);
            Term cand = Term::apply(s.name, args);
            if (std::find(terms.begin(), terms.end(), cand) == terms.end())
              terms.push_back(cand);
            int i = 0;
            for (; i < s.arity; ++i) {
              if (++odo[i] < upto) break;
              odo[i] = 0;
            }
            if (i == s.arity) break;
          }
        }
      }
      std::vector<Equation> eqs;
      for (size_t i = 0; i < terms.size(); ++i)
        for (size_t j = i; j < terms.size(); ++j) eqs.push_back({terms[i], terms[j]});
      long singles = static_cast<long>(eqs.size());
      long pairs = singles * (singles - 1) / 2;
      eqs_.push_back(std::move(eqs));
      counts_.push_back(singles + pairs);
    }
  }

  long total() const {
    long t = 0;
    for (long c : counts_) t += c;
    return t;
  }

  Theory get(long index) const {
    for (size_t ti = 0; ti < types_.size(); ++ti) {
      if (index >= counts_[ti]) {
        index -= counts_[ti];
        continue;
      }
      Theory th;
      th.type = types_[ti];
      const auto& eqs = eqs_[ti];
      long singles = static_cast<long>(eqs.size());
      if (index < singles) {
        th.equations.push_back(eqs[index]);
        return th;
      }
      long p = index - singles;
      long i = 0;
      long remaining = singles - 1;
      while (p >= remaining) {
        p -= remaining;
        ++i;
        --remaining;
      }
      long j = i + 1 + p;
      th.equations.push_back(eqs[i]);
      th.equations.push_back(eqs[j]);
      return th;
    }
    throw std::out_of_range("theory index");
  }

 private:
  std::vector<SimilarityType> types_;
  std::vector<std::vector<Equation>> eqs_;
  std::vector<long> counts_;
};

const TheoryEnumerator& theory_enumerator() {
  static const TheoryEnumerator e;
  return e;
}

}  // namespace

std::vector<Sextuple> stream_B(const StreamOptions& opts) {
  const auto& family = seed_family();
  const auto& thys = theory_enumerator();
  std::vector<Sextuple> out;
  long examined = 0;
  long max_thy = std::min<long>(thys.total(), 64);
  for (int level = 1; examined < opts.budget && level <= 16; ++level) {
    for (int kidx = 0; kidx < static_cast<int>(family.size()) && kidx < level; ++kidx)
      for (long tidx = 0; tidx < std::min<long>(level, max_thy); ++tidx)
        for (int M = 0; M < level; ++M)
          for (int N = 0; N < level; ++N)
            for (long r = 1; r <= level; ++r)
              for (long s = 1; s <= level; ++s) {
                int mx = std::max({kidx + 1, static_cast<int>(tidx) + 1, M + 1, N + 1,
                                   static_cast<int>(r), static_cast<int>(s)});
                if (mx != level) continue;
                if (examined >= opts.budget) return out;
                ++examined;
                Theory sigma = thys.get(tidx);
                DecideOptions dopt;
                dopt.max_tuples = opts.max_tuples;
                dopt.bnb_iterations = opts.bnb_iterations;
                dopt.threads = opts.threads;
                Rat q(r, s);
                Rat tol = std::min(Rat(1, 4 * s), Rat(1, 64));
                Decision d = decide_within(family[kidx].second, sigma, M, N, q, tol, dopt);
                if (d.verdict == Decision::Verdict::Yes) {
                  Sextuple sx;
                  sx.complex_name = family[kidx].first;
                  sx.M = M;
                  sx.N = N;
                  sx.r = r;
                  sx.s = s;
                  sx.sigma = sigma;
                  sx.theory_text = format_theory(sigma);
                  out.push_back(std::move(sx));
                }
              }
  }
  return out;
}

std::vector<Theory> stream_E(const std::string& complex_name, const Rat& alpha,
                             const StreamOptions& opts) {
  if (alpha <= 0) throw std::invalid_argument("alpha must be positive");
  std::vector<Theory> out;
  for (const auto& sx : stream_B(opts)) {
    if (sx.complex_name != complex_name) continue;
    if (Rat(sx.s) * alpha > Rat(sx.r)) out.push_back(sx.sigma);
  }
  return out;
}

std::vector<std::pair<Theory, long>> stream_F(const std::string& complex_name,
                                              const StreamOptions& opts) {
  std::vector<std::pair<Theory, long>> out;
  for (const auto& sx : stream_B(opts)) {
    if (sx.complex_name != complex_name || sx.r != 1) continue;
    out.push_back({sx.sigma, sx.s});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Algebra constructors

CertifiedAlgebra constant_algebra(const CarrierPtr& k, const Theory& sigma,
                                  const Point& center) {
  if (!is_syntactically_consistent(sigma))
    throw std::invalid_argument(
        "constant_algebra needs a syntactically consistent theory");
  CertifiedAlgebra out;
  out.algebra.carrier = k;
  for (const auto& s : sigma.type.symbols)
    out.algebra.ops[s.name] = Operation::constant(k, s.arity, center, s.name + ".const");
  // A composite term evaluates to the center, so each equation's sup is 0
  // (both sides composite) or the center's eccentricity (one side a
  // variable).
  Rat ecc_key = k->metric().eccentricity_cmp(center, k->complex());
  Rat ecc_hi = k->metric().key_to_interval(ecc_key, kTinyPrec).hi;
  Rat bound(0);
  for (const auto& e : sigma.equations) {
    if (e.lhs == e.rhs) continue;
    if (!e.lhs.is_var() && !e.rhs.is_var()) continue;
    bound = std::max(bound, ecc_hi);
  }
  out.bound_hi = bound;
  out.derivation = "constant operations at a center; bound = eccentricity(center)";
  return out;
}

CertifiedAlgebra retraction_transfer(const CertifiedAlgebra& b_alg, const OpPtr& psi,
                                     const Rat& k_disp, int samples, unsigned seed) {
  if (psi->arity() != 1) throw std::invalid_argument("psi must be unary");
  const CarrierPtr& carrier = b_alg.algebra.carrier;
  std::mt19937_64 rng(seed);
  const Metric& m = carrier->metric();
  for (int i = 0; i < samples; ++i) {
    Point x = random_point(*carrier, rng);
    Point px = psi->evaluate({x});
    Point ppx = psi->evaluate({px});
    if (m.key_to_interval(m.cmp(px, ppx), kTinyPrec).hi > kTinyPrec * 16)
      throw std::invalid_argument("psi is not idempotent on its image");
  }
  CertifiedAlgebra out;
  out.algebra.carrier = carrier;
  for (const auto& [name, op] : b_alg.algebra.ops) {
    std::vector<Rat> lips;
    for (const auto& l : op->lip_args()) lips.push_back(l * psi->lipschitz());
    ClosedFlags flags;
    flags.affine = op->affine() && psi->affine();
    OpPtr inner = op;
    OpPtr proj = psi;
    out.algebra.ops[name] = Operation::closed(
        carrier, op->arity(), "retract:" + op->name(),
        [inner, proj](const Carrier&, const std::vector<Point>& args) {
          std::vector<Point> mapped;
          mapped.reserve(args.size());
          for (const auto& a : args) mapped.push_back(proj->evaluate({a}));
          return inner->evaluate(mapped);
        },
        std::move(lips), flags);
  }
  out.bound_hi = b_alg.bound_hi + k_disp;
  out.derivation = "retraction transfer: bound(B) + sup d(a, psi a) = " +
                   format_rat(b_alg.bound_hi) + " + " + format_rat(k_disp);
  return out;
}

Rat PLFunction::operator()(const Rat& x) const {
  if (points.size() < 2) throw std::invalid_argument("PLFunction needs >= 2 breakpoints");
  for (size_t i = 0; i + 1 < points.size(); ++i) {
    if (points[i].first >= points[i + 1].first)
      throw std::invalid_argument("PLFunction breakpoints must increase");
    if (points[i].second > points[i + 1].second)
      throw std::invalid_argument("PLFunction must be monotone nondecreasing");
  }
  size_t seg = 0;
  if (x <= points.front().first) {
    seg = 0;
  } else if (x >= points.back().first) {
    seg = points.size() - 2;
  } else {
    while (seg + 2 < points.size() && points[seg + 1].first < x) ++seg;
  }
  const auto& [x0, y0] = points[seg];
  const auto& [x1, y1] = points[seg + 1];
  return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
}

CertifiedAlgebra conjugate(const CertifiedAlgebra& a, const OpPtr& gamma,
                           const OpPtr& gamma_inv, const PLFunction& phi, int samples,
                           unsigned seed) {
  const CarrierPtr& carrier = a.algebra.carrier;
  const Metric& m = carrier->metric();
  std::mt19937_64 rng(seed);
  for (int i = 0; i < samples; ++i) {
    Point x = random_point(*carrier, rng);
    Point y = gamma_inv->evaluate({gamma->evaluate({x})});
    if (m.key_to_interval(m.cmp(x, y), kTinyPrec).hi > kTinyPrec * 16)
      throw std::invalid_argument("gamma_inv does not invert gamma on samples");
  }
  CertifiedAlgebra out;
  out.algebra.carrier = carrier;
  for (const auto& [name, op] : a.algebra.ops) {
    std::vector<Rat> lips;
    for (const auto& l : op->lip_args())
      lips.push_back(gamma->lipschitz() * l * gamma_inv->lipschitz());
    ClosedFlags flags;
    flags.affine = op->affine() && gamma->affine() && gamma_inv->affine();
    OpPtr inner = op, g = gamma, gi = gamma_inv;
    out.algebra.ops[name] = Operation::closed(
        carrier, op->arity(), "conj:" + op->name(),
        [inner, g, gi](const Carrier&, const std::vector<Point>& args) {
          std::vector<Point> mapped;
          for (const auto& x : args) mapped.push_back(gi->evaluate({x}));
          return g->evaluate({inner->evaluate(mapped)});
        },
        std::move(lips), flags);
  }
  out.bound_hi = phi(a.bound_hi);
  out.derivation = "conjugation: bound = phi(" + format_rat(a.bound_hi) + ")";
  return out;
}

ProductAlgebraResult product_algebra(const CertifiedAlgebra& a_gamma, const Theory& gamma,
                                     const CertifiedAlgebra& b_delta, const Theory& delta,
                                     Combiner metric_choice) {
  for (const auto& s : gamma.type.symbols)
    if (!a_gamma.algebra.ops.count(s.name))
      throw std::invalid_argument("factor algebra does not cover " + s.name);
  for (const auto& s : delta.type.symbols)
    if (!b_delta.algebra.ops.count(s.name))
      throw std::invalid_argument("factor algebra does not cover " + s.name);

  auto pc = std::make_shared<ProductComplex>(ProductComplex::make(
      a_gamma.algebra.carrier->complex_ptr(), b_delta.algebra.carrier->complex_ptr()));
  std::vector<std::vector<VertexId>> tuples;
  for (VertexId v = 0; v < pc->complex().vertex_count(); ++v) {
    auto [x, y] = pc->factors_of(v);
    tuples.push_back({x, y});
  }
  auto metric = std::make_shared<Metric>(Metric::product(
      {&a_gamma.algebra.carrier->metric(), &b_delta.algebra.carrier->metric()}, tuples,
      metric_choice));
  Rat distortion = std::max(a_gamma.algebra.carrier->geodesic_distortion(),
                            b_delta.algebra.carrier->geodesic_distortion());
  if (metric_choice == Combiner::L2) distortion *= sqrt_upper(Rat(2), kTinyPrec);
  CarrierPtr carrier = Carrier::make_custom(pc->complex_ptr(), metric, distortion);

  ProductAlgebraResult res;
  res.carrier = carrier;
  res.product = pc;
  res.certified.algebra.carrier = carrier;

  auto add_factor_ops = [&](const Algebra& factor, const SimilarityType& type,
                            bool first_side) {
    for (const auto& sym : type.symbols) {
      OpPtr op = factor.ops.at(sym.name);
      if (op->arity() == 0)
        throw std::invalid_argument("product_algebra requires arity >= 1 operations");
      std::vector<Rat> lips;
      for (size_t i = 0; i < op->lip_args().size(); ++i)
        lips.push_back(op->lip_args()[i] + (i == 0 ? Rat(1) : Rat(0)));
      ClosedFlags flags;
      flags.affine = op->affine();
      OpPtr inner = op;
      auto pcc = pc;
      res.certified.algebra.ops[sym.name] = Operation::closed(
          carrier, op->arity(),
          std::string(first_side ? "prodL:" : "prodR:") + op->name(),
          [inner, pcc, first_side](const Carrier&, const std::vector<Point>& args) {
            std::vector<Point> xs, ys;
            for (const auto& p : args) {
              xs.push_back(pcc->project1(p));
              ys.push_back(pcc->project2(p));
            }
            if (first_side) return pcc->merge(inner->evaluate(xs), ys[0]);
            return pcc->merge(xs[0], inner->evaluate(ys));
          },
          std::move(lips), flags);
    }
  };
  add_factor_ops(a_gamma.algebra, gamma.type, true);
  add_factor_ops(b_delta.algebra, delta.type, false);
  {
    auto pcc = pc;
    res.certified.algebra.ops["p"] = Operation::closed(
        carrier, 2, "prod:p",
        [pcc](const Carrier&, const std::vector<Point>& args) {
          return pcc->merge(pcc->project1(args[0]), pcc->project2(args[1]));
        },
        {Rat(1), Rat(1)}, {.affine = true, .chain_lattice = 0});
  }
  const Rat& d1 = a_gamma.bound_hi;
  const Rat& d2 = b_delta.bound_hi;
  switch (metric_choice) {
    case Combiner::Sup:
      res.certified.bound_hi = std::max(d1, d2);
      break;
    case Combiner::Sum:
      res.certified.bound_hi = d1 + d2;
      break;
    case Combiner::L2:
      res.certified.bound_hi = sqrt_upper(d1 * d1 + d2 * d2, kTinyPrec);
      break;
  }
  res.certified.derivation = "componentwise product of certified factor algebras";
  return res;
}

CertifiedAlgebra product_algebra_projection(const CertifiedAlgebra& a_gamma,
                                            const Theory& gamma, const Theory& delta) {
  const CarrierPtr& carrier = a_gamma.algebra.carrier;
  CertifiedAlgebra out;
  out.algebra.carrier = carrier;
  for (const auto& s : gamma.type.symbols)
    out.algebra.ops[s.name] = a_gamma.algebra.ops.at(s.name);
  auto first_projection = [&](int arity, const std::string& name) {
    std::vector<Rat> lips(arity, Rat(0));
    if (arity > 0) lips[0] = Rat(1);
    return Operation::closed(
        carrier, arity, name,
        [](const Carrier&, const std::vector<Point>& args) { return args[0]; },
        std::move(lips), {.affine = true, .chain_lattice = 0});
  };
  for (const auto& s : delta.type.symbols)
    out.algebra.ops[s.name] = first_projection(s.arity, s.name + ".proj1");
  out.algebra.ops["p"] = first_projection(2, "p.proj1");
  out.bound_hi = a_gamma.bound_hi;
  out.derivation = "product theory with first-projection pairing; factor bound unchanged";
  return out;
}

ShufflePowerResult shuffle_power_algebra(const CertifiedAlgebra& a, const Theory& sigma,
                                         int n) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  const CarrierPtr& base = a.algebra.carrier;
  const PowerData& pd = base->power(n);
  CarrierPtr carrier = Carrier::make_custom(pd.power->complex_ptr(), pd.metric,
                                            base->geodesic_distortion());
  auto power = pd.power;

  ShufflePowerResult res;
  res.carrier = carrier;
  res.certified.algebra.carrier = carrier;

  res.certified.algebra.ops["d"] = Operation::closed(
      carrier, n, "power.d",
      [power, n](const Carrier&, const std::vector<Point>& args) {
        std::vector<Point> comps;
        for (int i = 0; i < n; ++i) comps.push_back(power->project(args[i], i));
        return power->tuple_to_point(comps);
      },
      std::vector<Rat>(n, Rat(1)), {.affine = true, .chain_lattice = 0});
  res.certified.algebra.ops["g"] = Operation::closed(
      carrier, 1, "power.g",
      [power, n](const Carrier&, const std::vector<Point>& args) {
        auto t = power->point_to_tuple(args[0]);
        std::vector<Point> shifted;
        shifted.push_back(t[n - 1]);
        for (int i = 0; i + 1 < n; ++i) shifted.push_back(t[i]);
        return power->tuple_to_point(shifted);
      },
      {Rat(1)}, {.affine = true, .chain_lattice = 0});
  for (const auto& s : sigma.type.symbols) {
    OpPtr inner = a.algebra.ops.at(s.name);
    std::vector<Rat> lips = inner->lip_args();
    ClosedFlags flags;
    flags.affine = inner->affine();
    res.certified.algebra.ops[s.name] = Operation::closed(
        carrier, s.arity, "power:" + inner->name(),
        [power, inner, n](const Carrier&, const std::vector<Point>& args) {
          std::vector<std::vector<Point>> parts;
          for (const auto& p : args) parts.push_back(power->point_to_tuple(p));
          std::vector<Point> comps;
          for (int j = 0; j < n; ++j) {
            std::vector<Point> sub;
            for (const auto& part : parts) sub.push_back(part[j]);
            comps.push_back(inner->evaluate(sub));
          }
          return power->tuple_to_point(comps);
        },
        std::move(lips), flags);
  }
  res.certified.bound_hi = a.bound_hi;
  res.certified.derivation = "componentwise lift with coordinate shuffles";
  return res;
}

RestrictReport restrict_Ra(const Algebra& a, const Theory& gamma, const Point& anchor,
                           bool right_side, int samples, unsigned seed) {
  const Operation& pairing = a.op("p");
  const Metric& m = a.carrier->metric();
  std::mt19937_64 rng(seed);

  Algebra restricted;
  restricted.carrier = a.carrier;
  for (const auto& s : gamma.type.symbols) {
    OpPtr inner = a.ops.at(s.name);
    OpPtr pair = a.ops.at("p");
    Point anch = anchor;
    restricted.ops[s.name] = Operation::closed(
        a.carrier, s.arity, s.name + (right_side ? ".Ra" : ".La"),
        [inner, pair, anch, right_side](const Carrier&, const std::vector<Point>& args) {
          Point v = inner->evaluate(args);
          return right_side ? pair->evaluate({v, anch}) : pair->evaluate({anch, v});
        },
        inner->lip_args(), {});
  }

  RestrictReport rep;
  rep.samples = samples;
  for (int i = 0; i < samples; ++i) {
    auto image_point = [&]() {
      Point x = random_point(*a.carrier, rng);
      return right_side ? pairing.evaluate({x, anchor}) : pairing.evaluate({anchor, x});
    };
    for (const auto& e : gamma.equations) {
      Env env;
      for (int v : equation_vars(e)) env[v] = image_point();
      Rat key = m.cmp(term_evaluate(restricted, e.lhs, env),
                      term_evaluate(restricted, e.rhs, env));
      rep.max_violation_hi =
          std::max(rep.max_violation_hi, m.key_to_interval(key, kTinyPrec).hi);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Helpers

Point random_point(const Carrier& carrier, std::mt19937_64& rng) {
  const auto& tops = carrier.complex().top_simplices();
  const Simplex& s = tops[rng() % tops.size()];
  std::vector<std::pair<VertexId, Rat>> coords;
  Rat total(0);
  for (VertexId v : s) {
    long w = static_cast<long>(rng() % 997) + 1;
    coords.push_back({v, Rat(w)});
    total += w;
  }
  for (auto& [v, c] : coords) c /= total;
  return Point::from_coords(std::move(coords));
}

OpPtr make_identity_op(const CarrierPtr& carrier) {
  return Operation::closed(
      carrier, 1, "identity",
      [](const Carrier&, const std::vector<Point>& args) { return args[0]; }, {Rat(1)},
      {.affine = true, .chain_lattice = 0});
}

}  // namespace approxsat
