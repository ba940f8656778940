#include "approxsat/plmap.hpp"

#include <algorithm>
#include <cassert>

namespace approxsat {

namespace {

const Rat kSqrtPrec = pow2_inv(40);

// Exact Gaussian elimination.  A is m x n (row major), b has m entries.
// Returns any solution (free variables set to 0), or nullopt if
// inconsistent.
std::optional<std::vector<Rat>> solve_linear(std::vector<std::vector<Rat>> a,
                                             std::vector<Rat> b) {
  int m = static_cast<int>(a.size());
  int n = m ? static_cast<int>(a[0].size()) : 0;
  std::vector<int> pivot_col;
  int row = 0;
  for (int col = 0; col < n && row < m; ++col) {
    int p = -1;
    for (int r = row; r < m; ++r)
      if (a[r][col] != 0) {
        p = r;
        break;
      }
    if (p < 0) continue;
    std::swap(a[p], a[row]);
    std::swap(b[p], b[row]);
    Rat inv = a[row][col];
    for (int c = col; c < n; ++c) a[row][c] /= inv;
    b[row] /= inv;
    for (int r = 0; r < m; ++r) {
      if (r == row || a[r][col] == 0) continue;
      Rat f = a[r][col];
      for (int c = col; c < n; ++c) a[r][c] -= f * a[row][c];
      b[r] -= f * b[row];
    }
    pivot_col.push_back(col);
    ++row;
  }
  for (int r = row; r < m; ++r)
    if (b[r] != 0) return std::nullopt;
  std::vector<Rat> x(n, Rat(0));
  for (int r = 0; r < static_cast<int>(pivot_col.size()); ++r) x[pivot_col[r]] = b[r];
  return x;
}

}  // namespace

// ---------------------------------------------------------------------------
// Carrier

CarrierPtr Carrier::make(std::shared_ptr<const Complex> complex, MetricSpec spec) {
  auto c = std::shared_ptr<Carrier>(new Carrier());
  c->complex_ = std::move(complex);
  c->spec_ = std::move(spec);
  c->metric_ = std::make_shared<Metric>(Metric::make(*c->complex_, c->spec_));
  c->tower_ = std::make_shared<Tower>(c->complex_);
  return c;
}

CarrierPtr Carrier::make_custom(std::shared_ptr<const Complex> complex,
                                std::shared_ptr<const Metric> metric, Rat distortion) {
  auto c = std::shared_ptr<Carrier>(new Carrier());
  c->complex_ = std::move(complex);
  c->metric_ = std::move(metric);
  c->tower_ = std::make_shared<Tower>(c->complex_);
  c->distortion_ = std::move(distortion);
  return c;
}

const PowerData& Carrier::power(int n) const {
  if (n < 1) throw std::invalid_argument("power arity must be >= 1");
  std::lock_guard<std::mutex> g(mu_);
  auto it = powers_.find(n);
  if (it == powers_.end()) {
    auto pd = std::make_shared<PowerData>();
    pd->power = std::make_shared<PowerComplex>(PowerComplex::make(complex_, n));
    pd->tower = (n == 1) ? tower_ : std::make_shared<Tower>(pd->power->complex_ptr());
    std::vector<const Metric*> factors(n, metric_.get());
    std::vector<std::vector<VertexId>> tuples;
    for (VertexId v = 0; v < pd->power->complex().vertex_count(); ++v)
      tuples.push_back(pd->power->tuple_of(v));
    pd->metric =
        std::make_shared<Metric>(Metric::product(factors, tuples, Combiner::Sup));
    it = powers_.emplace(n, std::move(pd)).first;
  }
  return *it->second;
}

Point Carrier::unembed(const std::vector<Rat>& coords) const {
  const Metric& m = *metric_;
  if (static_cast<int>(coords.size()) != m.dim())
    throw std::invalid_argument("unembed: dimension mismatch");
  for (const auto& s : complex_->top_simplices()) {
    int k = static_cast<int>(s.size());
    // lambda >= 0, sum lambda = 1, sum lambda * embed(v) = coords.
    std::vector<std::vector<Rat>> a(m.dim() + 1, std::vector<Rat>(k, Rat(0)));
    std::vector<Rat> b(m.dim() + 1, Rat(0));
    for (int j = 0; j < k; ++j) {
      const auto& e = m.vertex_embedding(s[j]);
      for (int i = 0; i < m.dim(); ++i) a[i][j] = e[i];
      a[m.dim()][j] = Rat(1);
    }
    for (int i = 0; i < m.dim(); ++i) b[i] = coords[i];
    b[m.dim()] = Rat(1);
    auto sol = solve_linear(a, b);
    if (!sol) continue;
    bool nonneg = std::all_of(sol->begin(), sol->end(), [](const Rat& q) { return q >= 0; });
    if (!nonneg) continue;
    std::vector<std::pair<VertexId, Rat>> pc;
    for (int j = 0; j < k; ++j)
      if ((*sol)[j] > 0) pc.push_back({s[j], (*sol)[j]});
    if (pc.empty()) continue;
    Point p = Point::from_coords(std::move(pc));
    if (m.embed(p) == coords) return p;
  }
  throw std::domain_error("unembed: coordinates outside the realization");
}

// ---------------------------------------------------------------------------
// Simplicial map check

SimplicialCheck check_simplicial(const SimplicialMap& phi) {
  for (const auto& s : phi.domain->simplices()) {
    Simplex img;
    for (VertexId v : s) img.push_back(phi.vertex_map[v]);
    std::sort(img.begin(), img.end());
    img.erase(std::unique(img.begin(), img.end()), img.end());
    if (!phi.codomain->contains(img)) return {false, s};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Operation

OpPtr Operation::pl(CarrierPtr carrier, int arity, int M, int N,
                    std::vector<VertexId> vertex_map) {
  auto op = std::shared_ptr<Operation>(new Operation());
  op->arity_ = arity;
  op->carrier_ = std::move(carrier);
  op->is_pl_ = true;
  op->M_ = M;
  op->N_ = N;
  op->vertex_map_ = std::move(vertex_map);
  op->carrier_->tower().ensure(N);
  if (arity == 0) {
    if (op->vertex_map_.size() != 1)
      throw std::invalid_argument("arity-0 PL operation needs exactly one image vertex");
    op->name_ = "pl0";
    op->lip_ = Rat(0);
    return op;
  }
  auto check = check_simplicial(op->as_simplicial_map());
  if (!check.ok) throw std::invalid_argument("vertex map is not simplicial");
  op->lip_ = lipschitz_bound_pl(*op->carrier_, arity, M, N, op->vertex_map_);
  op->lip_args_.assign(arity, op->lip_);
  op->name_ = "pl(" + std::to_string(M) + "," + std::to_string(N) + ")";
  return op;
}

OpPtr Operation::pl_precertified(CarrierPtr carrier, int arity, int M, int N,
                                 std::vector<VertexId> vertex_map, Rat lipschitz) {
  auto op = std::shared_ptr<Operation>(new Operation());
  op->arity_ = arity;
  op->carrier_ = std::move(carrier);
  op->is_pl_ = true;
  op->M_ = M;
  op->N_ = N;
  op->vertex_map_ = std::move(vertex_map);
  op->lip_ = std::move(lipschitz);
  op->lip_args_.assign(std::max(0, arity), op->lip_);
  op->name_ = "pl(" + std::to_string(M) + "," + std::to_string(N) + ")";
  return op;
}

OpPtr Operation::closed(CarrierPtr carrier, int arity, std::string name, Evaluator eval,
                        std::vector<Rat> lip_args, ClosedFlags flags) {
  if (static_cast<int>(lip_args.size()) != arity)
    throw std::invalid_argument("lip_args must have one entry per argument");
  auto op = std::shared_ptr<Operation>(new Operation());
  op->arity_ = arity;
  op->carrier_ = std::move(carrier);
  op->name_ = std::move(name);
  op->eval_ = std::move(eval);
  op->flags_ = flags;
  op->lip_args_ = std::move(lip_args);
  op->lip_ = Rat(0);
  for (const auto& l : op->lip_args_) op->lip_ += l;
  return op;
}

OpPtr Operation::constant(CarrierPtr carrier, int arity, Point value, std::string name) {
  Point v = std::move(value);
  return closed(
      std::move(carrier), arity, name.empty() ? "const" : name,
      [v](const Carrier&, const std::vector<Point>&) { return v; },
      std::vector<Rat>(arity, Rat(0)), {.affine = true, .chain_lattice = 0});
}

SimplicialMap Operation::as_simplicial_map() const {
  if (!is_pl_) throw std::logic_error("as_simplicial_map on closed-form operation");
  const auto& pd = carrier_->power(std::max(1, arity_));
  pd.tower->ensure(M_);
  carrier_->tower().ensure(N_);
  return {pd.tower->complex_ptr_at(M_), carrier_->tower().complex_ptr_at(N_), vertex_map_};
}

Point Operation::evaluate(const std::vector<Point>& args) const {
  if (static_cast<int>(args.size()) != arity_)
    throw std::invalid_argument("argument tuple length mismatch");
  if (!is_pl_) return eval_(*carrier_, args);
  Tower& cod = carrier_->tower();
  cod.ensure(N_);
  if (arity_ == 0)
    return cod.push_forward(N_, Point::vertex(vertex_map_[0]));
  const PowerData& pd = carrier_->power(arity_);
  Point merged = pd.power->tuple_to_point(args);
  Located loc = pd.tower->locate(merged, M_);
  std::vector<std::pair<VertexId, Rat>> img;
  for (const auto& [v, c] : loc.coords.coords()) img.push_back({vertex_map_[v], c});
  Point level_point = Point::from_coords(std::move(img));
  return cod.push_forward(N_, level_point);
}

Point evaluate_ground(const Operation& op, const Point& p) {
  if (op.arity() != 1) throw std::invalid_argument("evaluate_ground needs arity 1");
  return op.evaluate({p});
}

Point evaluate_op(const Operation& op, const std::vector<Point>& args) {
  return op.evaluate(args);
}

Rat lipschitz_bound_pl(const Carrier& carrier, int arity, int M, int N,
                       const std::vector<VertexId>& vertex_map) {
  const PowerData& pd = carrier.power(std::max(1, arity));
  pd.tower->ensure(M);
  carrier.tower().ensure(N);
  const Complex& dom = pd.tower->complex_at(M);
  const Metric& dm = *pd.metric;
  const Metric& cm = carrier.metric();

  // Embedded domain vertices and codomain images (pushed to ground level).
  std::vector<std::vector<Rat>> dome(dom.vertex_count());
  std::vector<std::vector<Rat>> img(dom.vertex_count());
  for (VertexId v = 0; v < dom.vertex_count(); ++v) {
    dome[v] = dm.embed(pd.tower->vertex_base_point(M, v));
    img[v] = cm.embed(carrier.tower().vertex_base_point(N, vertex_map[v]));
  }

  Rat best(0);
  for (const auto& cell : dom.top_simplices()) {
    int k = static_cast<int>(cell.size()) - 1;
    if (k == 0) continue;
    // Edge matrix columns e(v_i) - e(v_0), i = 1..k.
    std::vector<std::vector<Rat>> edges(k, std::vector<Rat>(dm.dim()));
    for (int i = 1; i <= k; ++i)
      for (int c = 0; c < dm.dim(); ++c)
        edges[i - 1][c] = dome[cell[i]][c] - dome[cell[0]][c];
    // Gram matrix.
    std::vector<std::vector<Rat>> gram(k, std::vector<Rat>(k, Rat(0)));
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        for (int c = 0; c < dm.dim(); ++c) gram[i][j] += edges[i][c] * edges[j][c];

    Rat cell_bound(0);
    for (int i = 1; i <= k; ++i) {
      std::vector<Rat> e(k, Rat(0));
      e[i - 1] = Rat(1);
      auto x = solve_linear(gram, e);
      if (!x) throw std::domain_error("degenerate simplex in Lipschitz certificate");
      // Minimal-norm gradient of the i-th barycentric coordinate.
      std::vector<Rat> grad(dm.dim(), Rat(0));
      for (int r = 0; r < k; ++r)
        for (int c = 0; c < dm.dim(); ++c) grad[c] += (*x)[r] * edges[r][c];
      // Confirm the solve (the Gram system is singular iff degenerate).
      for (int r = 0; r < k; ++r) {
        Rat dot(0);
        for (int c = 0; c < dm.dim(); ++c) dot += grad[c] * edges[r][c];
        if (dot != (r == i - 1 ? Rat(1) : Rat(0)))
          throw std::domain_error("degenerate simplex in Lipschitz certificate");
      }
      Rat coord_lip = dm.dual_norm_upper(grad, kSqrtPrec);
      Rat step = cm.key_to_interval(cm.cmp_embedded(img[cell[i]], img[cell[0]]), kSqrtPrec).hi;
      cell_bound += step * coord_lip;
    }
    best = std::max(best, cell_bound);
  }
  return best * carrier.geodesic_distortion();
}

// ---------------------------------------------------------------------------
// Algebra / terms

const Operation& Algebra::op(const std::string& symbol) const {
  auto it = ops.find(symbol);
  if (it == ops.end()) throw std::invalid_argument("unassigned symbol: " + symbol);
  return *it->second;
}

Algebra Algebra::with_op(const std::string& symbol, OpPtr o) const {
  Algebra out = *this;
  out.ops[symbol] = std::move(o);
  return out;
}

Point term_evaluate(const Algebra& a, const Term& t, const Env& env) {
  if (t.is_var()) {
    auto it = env.find(t.var_index());
    if (it == env.end())
      throw std::invalid_argument("unbound variable x" + std::to_string(t.var_index()));
    return it->second;
  }
  const Operation& op = a.op(t.symbol());
  std::vector<Point> args;
  args.reserve(t.args().size());
  for (const auto& sub : t.args()) args.push_back(term_evaluate(a, sub, env));
  return op.evaluate(args);
}

Rat term_lipschitz(const Algebra& a, const Term& t) {
  if (t.is_var()) return Rat(1);
  const Operation& op = a.op(t.symbol());
  Rat worst(0);
  for (const auto& sub : t.args()) worst = std::max(worst, term_lipschitz(a, sub));
  return op.lipschitz() * worst;
}

std::map<int, Rat> term_sensitivity(const Algebra& a, const Term& t) {
  if (t.is_var()) return {{t.var_index(), Rat(1)}};
  const Operation& op = a.op(t.symbol());
  std::map<int, Rat> out;
  for (size_t i = 0; i < t.args().size(); ++i) {
    auto sub = term_sensitivity(a, t.args()[i]);
    for (auto& [v, s] : sub) out[v] += op.lip_args()[i] * s;
  }
  return out;
}

namespace {

bool term_affine(const Algebra& a, const Term& t) {
  if (t.is_var()) return true;
  if (!a.op(t.symbol()).affine()) return false;
  for (const auto& sub : t.args())
    if (!term_affine(a, sub)) return false;
  return true;
}

}  // namespace

Algebra derived_algebra(const Algebra& a, const Interpretation& interp) {
  interp.validate();
  Algebra out;
  out.carrier = a.carrier;
  for (const auto& sym : interp.source.symbols) {
    const Term alpha = interp.assignment.at(sym.name);
    auto sens = term_sensitivity(a, alpha);
    std::vector<Rat> lips(sym.arity, Rat(0));
    for (const auto& [v, s] : sens) {
      if (v < 1 || v > sym.arity) continue;
      lips[v - 1] = s;
    }
    ClosedFlags flags;
    flags.affine = term_affine(a, alpha);
    Algebra base = a;  // captured by value in the evaluator
    out.ops[sym.name] = Operation::closed(
        a.carrier, sym.arity, "derived:" + alpha.to_string(),
        [base, alpha](const Carrier&, const std::vector<Point>& args) {
          Env env;
          for (size_t i = 0; i < args.size(); ++i) env[static_cast<int>(i) + 1] = args[i];
          return term_evaluate(base, alpha, env);
        },
        std::move(lips), flags);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Epsilon chains

EpsilonChain epsilon_chain(const Algebra& a, int M, const Rat& eps) {
  if (eps <= 0) throw std::invalid_argument("epsilon must be positive");
  Rat lmax(1);
  for (const auto& [sym, op] : a.ops) lmax = std::max(lmax, op->lipschitz());
  EpsilonChain chain;
  chain.eps.push_back(eps);
  for (int k = 0; k < M; ++k) {
    const Rat& ek = chain.eps.back();
    // eps* = eps_k / (2 * lmax): if arguments move by < eps*, every
    // operation moves by < eps_k / 2 (Lipschitz certificates are stated for
    // the sup tuple metric, so the comparison constant is 1).
    Rat estar = ek / (2 * lmax);
    chain.eps.push_back(std::min(estar, Rat(ek / 2)));
  }
  return chain;
}

// ---------------------------------------------------------------------------
// Simplicial approximation

namespace {

// Certified Lipschitz bounds of the level-N barycentric coordinate
// functions w.r.t. the carrier metric (one per level-N vertex).
std::vector<Rat> vertex_coord_lipschitz(const Carrier& carrier, int N) {
  Tower& tw = carrier.tower();
  tw.ensure(N);
  const Complex& k = tw.complex_at(N);
  const Metric& m = carrier.metric();
  std::vector<std::vector<Rat>> emb(k.vertex_count());
  for (VertexId v = 0; v < k.vertex_count(); ++v)
    emb[v] = m.embed(tw.vertex_base_point(N, v));
  std::vector<Rat> out(k.vertex_count(), Rat(0));
  for (const auto& cell : k.top_simplices()) {
    int kk = static_cast<int>(cell.size()) - 1;
    if (kk == 0) continue;
    std::vector<std::vector<Rat>> edges(kk, std::vector<Rat>(m.dim()));
    for (int i = 1; i <= kk; ++i)
      for (int c = 0; c < m.dim(); ++c)
        edges[i - 1][c] = emb[cell[i]][c] - emb[cell[0]][c];
    std::vector<std::vector<Rat>> gram(kk, std::vector<Rat>(kk, Rat(0)));
    for (int i = 0; i < kk; ++i)
      for (int j = 0; j < kk; ++j)
        for (int c = 0; c < m.dim(); ++c) gram[i][j] += edges[i][c] * edges[j][c];
    // Gradient of the coordinate at cell[i]; the coordinate at cell[0] is
    // 1 - sum of the others, so its gradient is minus the sum.
    std::vector<std::vector<Rat>> grads;
    for (int i = 1; i <= kk; ++i) {
      std::vector<Rat> e(kk, Rat(0));
      e[i - 1] = Rat(1);
      auto x = solve_linear(gram, e);
      if (!x) throw std::domain_error("degenerate simplex");
      std::vector<Rat> grad(m.dim(), Rat(0));
      for (int r = 0; r < kk; ++r)
        for (int c = 0; c < m.dim(); ++c) grad[c] += (*x)[r] * edges[r][c];
      grads.push_back(grad);
    }
    std::vector<Rat> g0(m.dim(), Rat(0));
    for (const auto& g : grads)
      for (int c = 0; c < m.dim(); ++c) g0[c] -= g[c];
    grads.insert(grads.begin(), g0);
    for (int i = 0; i <= kk; ++i) {
      Rat l = m.dual_norm_upper(grads[i], kSqrtPrec) * carrier.geodesic_distortion();
      out[cell[i]] = std::max(out[cell[i]], l);
    }
  }
  return out;
}

}  // namespace

ApproxResult simplicial_approximate(const Operation& f, const Rat& eps, int max_M) {
  if (eps <= 0) throw std::invalid_argument("epsilon must be positive");
  const Carrier& carrier = *f.carrier();
  Tower& cod = carrier.tower();
  const Metric& cm = carrier.metric();

  // Choose N with measured codomain mesh <= eps/2.
  int N = 0;
  Rat meshN_hi(0);
  for (;; ++N) {
    cod.ensure(N);
    meshN_hi = cm.key_to_interval(measured_mesh_cmp(cod, N, cm), kSqrtPrec).hi;
    if (meshN_hi <= eps / 2) break;
    if (N > max_M + 8) {
      ApproxResult fail;
      fail.best_slack = meshN_hi - eps / 2;
      return fail;
    }
  }
  std::vector<Rat> coord_lip = vertex_coord_lipschitz(carrier, N);

  int arity = std::max(1, f.arity());
  const PowerData& pd = carrier.power(arity);
  const Rat lip_f = f.lipschitz();

  ApproxResult result;
  result.best_slack = Rat(-1);
  for (int M = 0; M <= max_M; ++M) {
    pd.tower->ensure(M);
    const Complex& dom = pd.tower->complex_at(M);
    Rat meshM_hi = pd.metric->key_to_interval(measured_mesh_cmp(*pd.tower, M, *pd.metric),
                                              kSqrtPrec)
                       .hi;
    std::vector<VertexId> vmap(dom.vertex_count());
    Rat min_slack;
    bool ok = true;
    bool first = true;
    for (VertexId v = 0; v < dom.vertex_count() && ok; ++v) {
      Point base = pd.tower->vertex_base_point(M, v);
      std::vector<Point> args = pd.power->point_to_tuple(base);
      Point fv = f.evaluate(args);
      Located loc = cod.locate(fv, N);
      // Image vertex: maximal coordinate, ties to the least vertex id.
      VertexId bestv = -1;
      Rat bestc(-1);
      for (const auto& [w, c] : loc.coords.coords()) {
        if (c > bestc) {
          bestc = c;
          bestv = w;
        }
      }
      vmap[v] = bestv;
      // Star-condition margin: the coordinate at the chosen vertex stays
      // positive over the closed star of v.
      Rat slack = bestc - coord_lip[bestv] * lip_f * meshM_hi;
      if (first || slack < min_slack) min_slack = slack;
      first = false;
      if (slack <= 0) ok = false;
    }
    if (result.best_slack < min_slack) result.best_slack = min_slack;
    if (!ok) continue;
    SimplicialMap phi{pd.tower->complex_ptr_at(M), cod.complex_ptr_at(N), vmap};
    if (!check_simplicial(phi).ok) continue;
    result.op = Operation::pl(f.carrier(), f.arity(), M, N, vmap);
    result.M = M;
    result.N = N;
    result.certified_sup = meshN_hi;
    return result;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Standard carriers

namespace {

std::shared_ptr<const Complex> interval_complex(const std::string& n0,
                                                const std::string& n1) {
  return std::make_shared<Complex>(Complex::from_top({n0, n1}, {{0, 1}}));
}

}  // namespace

CarrierPtr make_segment_carrier(const Rat& lo, const Rat& hi) {
  if (lo >= hi) throw std::invalid_argument("segment needs lo < hi");
  auto cx = interval_complex(format_rat(lo), format_rat(hi));
  MetricSpec spec;
  spec.kind = MetricSpec::Kind::Coordinate;
  spec.norm = Norm::L2;
  spec.embedding[cx->name(0)] = {lo};
  spec.embedding[cx->name(1)] = {hi};
  return Carrier::make(cx, spec);
}

CarrierPtr make_interval_carrier() { return make_segment_carrier(Rat(0), Rat(1)); }

CarrierPtr make_square_carrier(Norm norm, std::vector<Rat> weights) {
  auto cx = std::make_shared<Complex>(
      Complex::from_top({"00", "10", "01", "11"}, {{0, 1, 3}, {0, 2, 3}}));
  MetricSpec spec;
  spec.kind = MetricSpec::Kind::Coordinate;
  spec.norm = norm;
  spec.embedding["00"] = {Rat(0), Rat(0)};
  spec.embedding["10"] = {Rat(1), Rat(0)};
  spec.embedding["01"] = {Rat(0), Rat(1)};
  spec.embedding["11"] = {Rat(1), Rat(1)};
  spec.weights = weights.empty() ? std::vector<Rat>{Rat(1), Rat(1)} : std::move(weights);
  return Carrier::make(cx, spec);
}

CarrierPtr make_cube_carrier(Norm norm, std::vector<Rat> weights) {
  auto base = interval_complex("0", "1");
  PowerComplex pw = PowerComplex::make(base, 3);
  auto cx = pw.complex_ptr();
  MetricSpec spec;
  spec.kind = MetricSpec::Kind::Coordinate;
  spec.norm = norm;
  for (VertexId v = 0; v < cx->vertex_count(); ++v) {
    std::vector<Rat> coords;
    for (VertexId b : pw.tuple_of(v)) coords.push_back(Rat(b));
    spec.embedding[cx->name(v)] = coords;
  }
  spec.weights =
      weights.empty() ? std::vector<Rat>{Rat(1), Rat(1), Rat(1)} : std::move(weights);
  return Carrier::make(cx, spec);
}

namespace {

// Rational point on the unit circle: ((1-t^2)/(1+t^2), 2t/(1+t^2)).
std::vector<Rat> circle_point(const Rat& t) {
  Rat den = 1 + t * t;
  return {(1 - t * t) / den, 2 * t / den};
}

CarrierPtr triode_from_directions(const std::vector<std::vector<Rat>>& dirs) {
  auto cx = std::make_shared<Complex>(
      Complex::from_top({"E", "B", "C", "D"}, {{0, 1}, {0, 2}, {0, 3}}));
  MetricSpec spec;
  spec.kind = MetricSpec::Kind::Coordinate;
  spec.norm = Norm::L2;
  spec.embedding["E"] = {Rat(0), Rat(0)};
  spec.embedding["B"] = dirs[0];
  spec.embedding["C"] = dirs[1];
  spec.embedding["D"] = dirs[2];
  auto carrier = Carrier::make(cx, spec);
  // Geodesic/ambient distortion: legs from the origin in directions u, v
  // satisfy (s+t) <= sqrt(2/(1-u.v)) * |s u - t v|.
  Rat worst(1);
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      Rat dot = dirs[i][0] * dirs[j][0] + dirs[i][1] * dirs[j][1];
      worst = std::max(worst, sqrt_upper(Rat(2) / (1 - dot), kSqrtPrec));
    }
  const_cast<Carrier&>(*carrier).set_geodesic_distortion(worst);
  return carrier;
}

}  // namespace

CarrierPtr make_triode_carrier(const Rat& t1, const Rat& t2) {
  if (t1 <= 0 || t2 <= 0 || t1 == t2)
    throw std::invalid_argument("triode parameters must be positive and distinct");
  return triode_from_directions({{Rat(1), Rat(0)}, circle_point(t1), circle_point(t2)});
}

CarrierPtr make_triode_carrier_symmetric() {
  // Unit directions roughly 120 degrees apart.
  return triode_from_directions(
      {{Rat(1), Rat(0)}, {Rat(-33, 65), Rat(56, 65)}, {Rat(-33, 65), Rat(-56, 65)}});
}

CarrierPtr make_edge_barycentric_carrier() {
  auto cx = interval_complex("a", "b");
  MetricSpec spec;
  spec.kind = MetricSpec::Kind::BarycentricEuclidean;
  return Carrier::make(cx, spec);
}

// ---------------------------------------------------------------------------
// Closed-form registry

namespace {

Rat embedded_scalar(const Carrier& c, const Point& p) { return c.embed(p)[0]; }

OpPtr make_chain_min(CarrierPtr c) {
  return Operation::closed(
      c, 2, "interval.min",
      [](const Carrier& cr, const std::vector<Point>& a) {
        return embedded_scalar(cr, a[0]) <= embedded_scalar(cr, a[1]) ? a[0] : a[1];
      },
      {Rat(1), Rat(1)}, {.affine = false, .chain_lattice = -1});
}

OpPtr make_chain_max(CarrierPtr c) {
  return Operation::closed(
      c, 2, "interval.max",
      [](const Carrier& cr, const std::vector<Point>& a) {
        return embedded_scalar(cr, a[0]) >= embedded_scalar(cr, a[1]) ? a[0] : a[1];
      },
      {Rat(1), Rat(1)}, {.affine = false, .chain_lattice = 1});
}

OpPtr make_affine_1d(CarrierPtr c, const std::string& name, int arity,
                     std::function<Rat(const std::vector<Rat>&)> formula,
                     std::vector<Rat> lips) {
  return Operation::closed(
      c, arity, name,
      [formula](const Carrier& cr, const std::vector<Point>& a) {
        std::vector<Rat> xs;
        for (const auto& p : a) xs.push_back(embedded_scalar(cr, p));
        return cr.unembed({formula(xs)});
      },
      std::move(lips), {.affine = true, .chain_lattice = 0});
}

OpPtr make_clamped_1d(CarrierPtr c, const std::string& name, int arity,
                      std::function<Rat(const std::vector<Rat>&)> formula,
                      std::vector<Rat> lips) {
  return Operation::closed(
      c, arity, name,
      [formula](const Carrier& cr, const std::vector<Point>& a) {
        std::vector<Rat> xs;
        for (const auto& p : a) xs.push_back(embedded_scalar(cr, p));
        Rat lo = cr.embed(Point::vertex(0))[0];
        Rat hi = cr.embed(Point::vertex(1))[0];
        if (lo > hi) std::swap(lo, hi);
        Rat v = formula(xs);
        if (v < lo) v = lo;
        if (v > hi) v = hi;
        return cr.unembed({v});
      },
      std::move(lips), {});
}

// Square ops: embedded coordinates (x, y).
OpPtr make_square_op(CarrierPtr c, const std::string& name, int arity,
                     std::function<std::vector<Rat>(const std::vector<std::vector<Rat>>&)> f,
                     std::vector<Rat> lips) {
  return Operation::closed(
      c, arity, name,
      [f](const Carrier& cr, const std::vector<Point>& a) {
        std::vector<std::vector<Rat>> xs;
        for (const auto& p : a) xs.push_back(cr.embed(p));
        return cr.unembed(f(xs));
      },
      std::move(lips), {.affine = true, .chain_lattice = 0});
}

// Enclosure of (a^p + b^p)^(1/p) for p a power of two, via iterated square
// roots with outward rounding.
Interval smooth_join_enclosure(const Rat& a, const Rat& b, unsigned p, const Rat& prec) {
  Rat s = rat_pow(a, p) + rat_pow(b, p);
  Interval cur = Interval::point(s);
  unsigned k = 0;
  while ((1u << k) < p) ++k;
  for (unsigned i = 0; i < k; ++i) {
    Rat lo = sqrt_lower(cur.lo, prec);
    Rat hi = sqrt_upper(cur.hi, prec);
    cur = Interval(lo, hi);
  }
  return cur;
}

OpPtr make_smoothmax(CarrierPtr c, unsigned p) {
  return Operation::closed(
      c, 2, "smoothmax.p" + std::to_string(p),
      [p](const Carrier& cr, const std::vector<Point>& a) {
        Rat x = embedded_scalar(cr, a[0]);
        Rat y = embedded_scalar(cr, a[1]);
        Rat v = smooth_join_enclosure(x, y, p, pow2_inv(48)).lo;
        Rat lo = cr.embed(Point::vertex(0))[0];
        Rat hi = cr.embed(Point::vertex(1))[0];
        if (lo > hi) std::swap(lo, hi);
        if (v < lo) v = lo;
        if (v > hi) v = hi;
        return cr.unembed({v});
      },
      {Rat(3, 2), Rat(3, 2)}, {});
}

}  // namespace

const std::vector<RegistryEntry>& closed_registry() {
  static const std::vector<RegistryEntry> reg = [] {
    std::vector<RegistryEntry> r;
    r.push_back({"interval.min", 2, make_chain_min});
    r.push_back({"interval.max", 2, make_chain_max});
    r.push_back({"interval.midpoint", 2, [](CarrierPtr c) {
                   return make_affine_1d(
                       c, "interval.midpoint", 2,
                       [](const std::vector<Rat>& x) { return (x[0] + x[1]) / 2; },
                       {Rat(1, 2), Rat(1, 2)});
                 }});
    r.push_back({"interval.add.trunc", 2, [](CarrierPtr c) {
                   return make_clamped_1d(
                       c, "interval.add.trunc", 2,
                       [](const std::vector<Rat>& x) { return x[0] + x[1]; },
                       {Rat(1), Rat(1)});
                 }});
    r.push_back({"interval.sub.trunc", 2, [](CarrierPtr c) {
                   return make_clamped_1d(
                       c, "interval.sub.trunc", 2,
                       [](const std::vector<Rat>& x) { return x[0] - x[1]; },
                       {Rat(1), Rat(1)});
                 }});
    r.push_back({"interval.zero", 0, [](CarrierPtr c) {
                   return Operation::constant(c, 0, Point::vertex(0), "interval.zero");
                 }});
    r.push_back({"interval.one", 0, [](CarrierPtr c) {
                   return Operation::constant(c, 0, Point::vertex(1), "interval.one");
                 }});
    r.push_back({"square.G.a0b1", 2, [](CarrierPtr c) {
                   return make_square_op(
                       c, "square.G.a0b1", 2,
                       [](const std::vector<std::vector<Rat>>& x) {
                         return std::vector<Rat>{x[0][0], x[1][1]};
                       },
                       {Rat(1), Rat(1)});
                 }});
    r.push_back({"square.G.a0b0", 2, [](CarrierPtr c) {
                   return make_square_op(
                       c, "square.G.a0b0", 2,
                       [](const std::vector<std::vector<Rat>>& x) {
                         return std::vector<Rat>{x[0][0], x[1][0]};
                       },
                       {Rat(1), Rat(1)});
                 }});
    r.push_back({"square.F0.half", 1, [](CarrierPtr c) {
                   return make_square_op(
                       c, "square.F0.half", 1,
                       [](const std::vector<std::vector<Rat>>& x) {
                         return std::vector<Rat>{x[0][0], Rat(1, 2)};
                       },
                       {Rat(1)});
                 }});
    r.push_back({"square.F1.half", 1, [](CarrierPtr c) {
                   return make_square_op(
                       c, "square.F1.half", 1,
                       [](const std::vector<std::vector<Rat>>& x) {
                         return std::vector<Rat>{Rat(1, 2), x[0][1]};
                       },
                       {Rat(1)});
                 }});
    r.push_back({"square.F0.drop", 1, [](CarrierPtr c) {
                   return make_square_op(
                       c, "square.F0.drop", 1,
                       [](const std::vector<std::vector<Rat>>& x) {
                         return std::vector<Rat>{x[0][0], Rat(0)};
                       },
                       {Rat(1)});
                 }});
    r.push_back({"square.F1.swapdrop", 1, [](CarrierPtr c) {
                   return make_square_op(
                       c, "square.F1.swapdrop", 1,
                       [](const std::vector<std::vector<Rat>>& x) {
                         return std::vector<Rat>{x[0][1], Rat(0)};
                       },
                       {Rat(1)});
                 }});
    for (unsigned p : {2u, 4u, 8u, 16u})
      r.push_back({"smoothmax.p" + std::to_string(p), 2,
                   [p](CarrierPtr c) { return make_smoothmax(c, p); }});
    return r;
  }();
  return reg;
}

OpPtr make_registered(CarrierPtr carrier, const std::string& id) {
  for (const auto& e : closed_registry())
    if (e.id == id) return e.make(carrier);
  throw std::invalid_argument("unknown registry id: " + id);
}

}  // namespace approxsat
