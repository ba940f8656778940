#include "approxsat/complex.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace approxsat {

// ---------------------------------------------------------------------------
// Complex

namespace {

void push_unique(std::set<Simplex>& out, const Simplex& s) { out.insert(s); }

void all_nonempty_subsets(const Simplex& t, std::set<Simplex>& out) {
  int k = static_cast<int>(t.size());
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    Simplex s;
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) s.push_back(t[i]);
    push_unique(out, s);
  }
}

}  // namespace

Complex Complex::from_top(std::vector<std::string> names,
                          const std::vector<Simplex>& top) {
  Complex k;
  k.names_ = std::move(names);
  std::set<Simplex> faces;
  for (VertexId v = 0; v < k.vertex_count(); ++v) faces.insert({v});
  for (const auto& t : top) {
    Simplex s = t;
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    for (VertexId v : s)
      if (v < 0 || v >= k.vertex_count())
        throw std::invalid_argument("simplex vertex out of range");
    all_nonempty_subsets(s, faces);
  }
  k.simplices_.assign(faces.begin(), faces.end());
  for (const auto& s : k.simplices_) {
    bool maximal = true;
    for (const auto& t : k.simplices_) {
      if (t.size() > s.size() && std::includes(t.begin(), t.end(), s.begin(), s.end())) {
        maximal = false;
        break;
      }
    }
    if (maximal) k.top_.push_back(s);
    k.dim_ = std::max(k.dim_, static_cast<int>(s.size()) - 1);
  }
  return k;
}

std::optional<VertexId> Complex::vertex_by_name(const std::string& name) const {
  for (VertexId v = 0; v < vertex_count(); ++v)
    if (names_[v] == name) return v;
  return std::nullopt;
}

bool Complex::contains(const Simplex& s) const {
  return std::binary_search(simplices_.begin(), simplices_.end(), s);
}

ValidationReport validate(int vertex_count, const std::vector<Simplex>& family) {
  std::set<Simplex> have(family.begin(), family.end());
  for (const auto& t : family) {
    if (t.empty()) return {false, t, "empty simplex"};
    if (!std::is_sorted(t.begin(), t.end()))
      return {false, t, "simplex not sorted"};
    for (VertexId v : t) {
      if (v < 0 || v >= vertex_count) return {false, t, "vertex out of range"};
      if (!have.count({v})) return {false, Simplex{v}, "missing singleton face"};
    }
    int k = static_cast<int>(t.size());
    for (unsigned mask = 1; mask + 1 < (1u << k); ++mask) {
      Simplex s;
      for (int i = 0; i < k; ++i)
        if (mask & (1u << i)) s.push_back(t[i]);
      if (!have.count(s)) return {false, s, "missing face of " + [&] {
                                    std::string d;
                                    for (VertexId v : t) d += std::to_string(v) + " ";
                                    return d;
                                  }()};
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Point

Point Point::vertex(VertexId v) {
  Point p;
  p.coords_.push_back({v, Rat(1)});
  return p;
}

Point Point::from_coords(std::vector<std::pair<VertexId, Rat>> coords) {
  std::sort(coords.begin(), coords.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  Point p;
  Rat sum(0);
  for (auto& [v, c] : coords) {
    if (c < 0) throw std::invalid_argument("negative barycentric coordinate");
    if (c == 0) continue;
    if (!p.coords_.empty() && p.coords_.back().first == v)
      p.coords_.back().second += c;
    else
      p.coords_.push_back({v, c});
    sum += c;
  }
  if (sum != 1) throw std::invalid_argument("barycentric coordinates must sum to 1");
  return p;
}

Simplex Point::carrier() const {
  Simplex s;
  for (const auto& [v, c] : coords_) s.push_back(v);
  return s;
}

Rat Point::coord(VertexId v) const {
  for (const auto& [u, c] : coords_)
    if (u == v) return c;
  return Rat(0);
}

std::string Point::to_string() const {
  std::string out = "{";
  for (size_t i = 0; i < coords_.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(coords_[i].first) + ":" + format_rat(coords_[i].second);
  }
  return out + "}";
}

Point Point::combine(const std::vector<std::pair<Rat, Point>>& weighted) {
  std::map<VertexId, Rat> acc;
  for (const auto& [w, p] : weighted)
    for (const auto& [v, c] : p.coords()) acc[v] += w * c;
  std::vector<std::pair<VertexId, Rat>> coords(acc.begin(), acc.end());
  return from_coords(std::move(coords));
}

Point Point::midpoint(const Point& a, const Point& b) {
  return combine({{Rat(1, 2), a}, {Rat(1, 2), b}});
}

Point Point::centroid(const std::vector<Point>& pts) {
  std::vector<std::pair<Rat, Point>> w;
  Rat f(1, static_cast<long>(pts.size()));
  for (const auto& p : pts) w.push_back({f, p});
  return combine(w);
}

// ---------------------------------------------------------------------------
// Metric

Metric Metric::make(const Complex& k, const MetricSpec& spec) {
  Metric m;
  int nv = k.vertex_count();
  if (spec.kind == MetricSpec::Kind::BarycentricEuclidean) {
    m.dim_ = nv;
    Block b;
    b.offset = 0;
    b.len = nv;
    b.norm = Norm::L2;
    b.weight.assign(nv, Rat(1));
    b.weight_sq.assign(nv, Rat(1));
    m.blocks_.push_back(b);
    m.embed_.resize(nv);
    for (VertexId v = 0; v < nv; ++v) {
      m.embed_[v].assign(nv, Rat(0));
      m.embed_[v][v] = Rat(1);
    }
  } else {
    if (spec.embedding.empty()) throw std::invalid_argument("coordinate metric needs embedding");
    int dim = static_cast<int>(spec.embedding.begin()->second.size());
    m.dim_ = dim;
    Block b;
    b.offset = 0;
    b.len = dim;
    b.norm = spec.norm;
    for (int i = 0; i < dim; ++i) {
      Rat w = i < static_cast<int>(spec.weights.size()) ? spec.weights[i] : Rat(1);
      if (w <= 0) throw std::invalid_argument("weights must be positive");
      b.weight.push_back(w);
      b.weight_sq.push_back(w * w);
    }
    m.blocks_.push_back(b);
    m.embed_.resize(nv);
    for (VertexId v = 0; v < nv; ++v) {
      auto it = spec.embedding.find(k.name(v));
      if (it == spec.embedding.end())
        throw std::invalid_argument("embedding missing vertex " + k.name(v));
      if (static_cast<int>(it->second.size()) != dim)
        throw std::invalid_argument("embedding dimension mismatch at " + k.name(v));
      m.embed_[v] = it->second;
    }
  }
  const Block& b = m.blocks_[0];
  bool raw = (b.norm != Norm::L2) || b.len == 1;
  m.mode_ = raw ? Mode::Raw : Mode::Squared;
  m.comb_ = Combiner::Sup;
  return m;
}

Metric Metric::product(const std::vector<const Metric*>& factors,
                       const std::vector<std::vector<VertexId>>& vertex_tuples,
                       Combiner comb) {
  Metric m;
  m.comb_ = comb;
  int offset = 0;
  bool any_squared = false;
  for (const Metric* f : factors) {
    for (Block b : f->blocks_) {
      b.offset += offset;
      m.blocks_.push_back(b);
      bool raw = (b.norm != Norm::L2) || b.len == 1;
      if (!raw) any_squared = true;
    }
    offset += f->dim_;
  }
  m.dim_ = offset;
  switch (comb) {
    case Combiner::Sup:
      m.mode_ = any_squared ? Mode::Squared : Mode::Raw;
      break;
    case Combiner::Sum:
      if (any_squared)
        throw std::invalid_argument("sum-combined metric over multi-axis L2 blocks is not exactly comparable");
      m.mode_ = Mode::Raw;
      break;
    case Combiner::L2:
      m.mode_ = Mode::Squared;
      break;
  }
  m.embed_.resize(vertex_tuples.size());
  for (size_t pv = 0; pv < vertex_tuples.size(); ++pv) {
    auto& e = m.embed_[pv];
    e.reserve(m.dim_);
    for (size_t i = 0; i < factors.size(); ++i) {
      const auto& fe = factors[i]->vertex_embedding(vertex_tuples[pv][i]);
      e.insert(e.end(), fe.begin(), fe.end());
    }
  }
  return m;
}

Metric Metric::rescaled_by_diameter(const Complex& k) const {
  Rat key = diameter_cmp(k);
  Metric out = *this;
  if (mode_ == Mode::Raw) {
    if (key == 0) throw std::invalid_argument("cannot rescale a diameter-0 space");
    for (auto& b : out.blocks_) {
      for (auto& w : b.weight) w /= key;
      for (auto& w : b.weight_sq) w /= key * key;
    }
  } else {
    // Squared mode: the key is diameter^2, so weight squares scale exactly.
    if (key == 0) throw std::invalid_argument("cannot rescale a diameter-0 space");
    for (auto& b : out.blocks_) {
      if (b.norm != Norm::L2)
        throw std::invalid_argument("rescale of mixed-norm squared metric unsupported");
      for (auto& w : b.weight_sq) w /= key;
    }
  }
  return out;
}

std::vector<Rat> Metric::embed(const Point& p) const {
  std::vector<Rat> out(dim_, Rat(0));
  for (const auto& [v, c] : p.coords()) {
    const auto& e = embed_[v];
    for (int i = 0; i < dim_; ++i)
      if (e[i] != 0) out[i] += c * e[i];
  }
  return out;
}

Rat Metric::block_cmp(const Block& b, const std::vector<Rat>& da) const {
  bool raw = (b.norm != Norm::L2) || b.len == 1;
  if (b.norm == Norm::L2 && !raw) {
    Rat s(0);
    for (int i = 0; i < b.len; ++i) s += b.weight_sq[i] * da[b.offset + i] * da[b.offset + i];
    return s;  // squared
  }
  if (b.norm == Norm::Sup || (b.norm == Norm::L2 && b.len == 1)) {
    Rat best(0);
    for (int i = 0; i < b.len; ++i) {
      Rat v = abs(da[b.offset + i]) * b.weight[i];
      if (v > best) best = v;
    }
    return best;  // raw
  }
  Rat s(0);
  for (int i = 0; i < b.len; ++i) s += abs(da[b.offset + i]) * b.weight[i];
  return s;  // raw (L1)
}

Rat Metric::cmp_embedded(const std::vector<Rat>& ea, const std::vector<Rat>& eb) const {
  std::vector<Rat> da(dim_);
  for (int i = 0; i < dim_; ++i) da[i] = ea[i] - eb[i];
  bool squared_mode = mode_ == Mode::Squared;
  Rat acc(0);
  bool first = true;
  for (const auto& b : blocks_) {
    Rat v = block_cmp(b, da);
    bool raw = (b.norm != Norm::L2) || b.len == 1;
    if (squared_mode && raw) v = v * v;
    switch (comb_) {
      case Combiner::Sup:
        if (first || v > acc) acc = v;
        break;
      case Combiner::Sum:
      case Combiner::L2:
        acc += v;
        break;
    }
    first = false;
  }
  return acc;
}

Rat Metric::cmp(const Point& a, const Point& b) const {
  return cmp_embedded(embed(a), embed(b));
}

Interval Metric::key_to_interval(const Rat& key, const Rat& prec) const {
  if (mode_ == Mode::Raw) return Interval::point(key);
  return sqrt_enclosure(key, prec);
}

Interval Metric::dist(const Point& a, const Point& b, const Rat& prec) const {
  return key_to_interval(cmp(a, b), prec);
}

Rat Metric::dual_norm_upper(const std::vector<Rat>& gradient, const Rat& prec) const {
  // Dual of a sup-combination is the sum of the block duals; dual of a sum
  // combination is the max; dual of an l2 combination is the l2 norm of the
  // block duals (bounded from above).
  std::vector<Rat> duals;
  for (const auto& b : blocks_) {
    Rat d(0);
    switch (b.norm) {
      case Norm::L2: {
        Rat s(0);
        for (int i = 0; i < b.len; ++i) {
          Rat g = gradient[b.offset + i];
          s += g * g / b.weight_sq[i];
        }
        d = sqrt_upper(s, prec);
        break;
      }
      case Norm::Sup: {
        for (int i = 0; i < b.len; ++i) d += abs(gradient[b.offset + i]) / b.weight[i];
        break;
      }
      case Norm::L1: {
        for (int i = 0; i < b.len; ++i)
          d = std::max(d, Rat(abs(gradient[b.offset + i]) / b.weight[i]));
        break;
      }
    }
    duals.push_back(d);
  }
  Rat out(0);
  switch (comb_) {
    case Combiner::Sup:
      for (const auto& d : duals) out += d;
      break;
    case Combiner::Sum:
      for (const auto& d : duals) out = std::max(out, d);
      break;
    case Combiner::L2: {
      Rat s(0);
      for (const auto& d : duals) s += d * d;
      out = sqrt_upper(s, prec);
      break;
    }
  }
  return out;
}

Rat Metric::diameter_cmp(const Complex& k) const {
  Rat best(0);
  for (VertexId a = 0; a < k.vertex_count(); ++a)
    for (VertexId b = a + 1; b < k.vertex_count(); ++b)
      best = std::max(best, cmp_embedded(embed_[a], embed_[b]));
  return best;
}

Interval Metric::diameter(const Complex& k, const Rat& prec) const {
  return key_to_interval(diameter_cmp(k), prec);
}

Rat Metric::eccentricity_cmp(const Point& center, const Complex& k) const {
  std::vector<Rat> ec = embed(center);
  Rat best(0);
  for (VertexId v = 0; v < k.vertex_count(); ++v)
    best = std::max(best, cmp_embedded(ec, embed_[v]));
  return best;
}

DistanceResult distance(const Point& a, const Point& b, const Metric& m, const Rat& prec) {
  DistanceResult r;
  Rat key = m.cmp(a, b);
  r.enclosure = m.key_to_interval(key, prec);
  if (m.mode() == Metric::Mode::Raw)
    r.exact = key;
  else
    r.exact_sq = key;
  return r;
}

// ---------------------------------------------------------------------------
// ProductComplex

ProductComplex ProductComplex::make(std::shared_ptr<const Complex> k1,
                                    std::shared_ptr<const Complex> k2) {
  ProductComplex pc;
  pc.k1_ = k1;
  pc.k2_ = k2;

  // Fixed strict total order on V1 (union) V2: by vertex name, factor-1
  // names preceding factor-2 names on ties.
  struct Entry {
    std::string name;
    int factor;
    VertexId v;
  };
  std::vector<Entry> order;
  for (VertexId v = 0; v < k1->vertex_count(); ++v) order.push_back({k1->name(v), 1, v});
  for (VertexId v = 0; v < k2->vertex_count(); ++v) order.push_back({k2->name(v), 2, v});
  std::sort(order.begin(), order.end(), [](const Entry& a, const Entry& b) {
    if (a.name != b.name) return a.name < b.name;
    return a.factor < b.factor;
  });
  pc.rank1_.assign(k1->vertex_count(), 0);
  pc.rank2_.assign(k2->vertex_count(), 0);
  for (size_t i = 0; i < order.size(); ++i) {
    if (order[i].factor == 1)
      pc.rank1_[order[i].v] = static_cast<int>(i);
    else
      pc.rank2_[order[i].v] = static_cast<int>(i);
  }

  std::vector<std::string> names;
  for (VertexId a = 0; a < k1->vertex_count(); ++a)
    for (VertexId b = 0; b < k2->vertex_count(); ++b) {
      VertexId pv = static_cast<VertexId>(pc.factors_.size());
      pc.factors_.push_back({a, b});
      pc.pair_index_[{a, b}] = pv;
      names.push_back("(" + k1->name(a) + "," + k2->name(b) + ")");
    }

  // Top simplices: monotone staircases over pairs of top simplices.
  std::vector<Simplex> tops;
  for (const auto& s1 : k1->top_simplices()) {
    Simplex o1 = s1;
    std::sort(o1.begin(), o1.end(),
              [&](VertexId a, VertexId b) { return pc.rank1_[a] < pc.rank1_[b]; });
    for (const auto& s2 : k2->top_simplices()) {
      Simplex o2 = s2;
      std::sort(o2.begin(), o2.end(),
                [&](VertexId a, VertexId b) { return pc.rank2_[a] < pc.rank2_[b]; });
      int m = static_cast<int>(o1.size()) - 1;
      int n = static_cast<int>(o2.size()) - 1;
      // Enumerate interleavings: bitmask with m+n steps, m of them moves in
      // the first factor.
      std::vector<int> steps(m + n);
      std::vector<bool> pick(m + n, false);
      std::fill(pick.begin(), pick.begin() + m, true);
      std::sort(pick.begin(), pick.end());
      do {
        Simplex cell;
        int i = 0, j = 0;
        cell.push_back(pc.pair_index_.at({o1[0], o2[0]}));
        for (int step = 0; step < m + n; ++step) {
          if (pick[step])
            ++i;
          else
            ++j;
          cell.push_back(pc.pair_index_.at({o1[i], o2[j]}));
        }
        std::sort(cell.begin(), cell.end());
        tops.push_back(cell);
      } while (std::next_permutation(pick.begin(), pick.end()));
    }
  }
  pc.complex_ = std::make_shared<Complex>(Complex::from_top(std::move(names), tops));

  pc.proj1_.resize(pc.factors_.size());
  pc.proj2_.resize(pc.factors_.size());
  for (size_t pv = 0; pv < pc.factors_.size(); ++pv) {
    pc.proj1_[pv] = pc.factors_[pv].first;
    pc.proj2_[pv] = pc.factors_[pv].second;
  }
  return pc;
}

VertexId ProductComplex::pair_vertex(VertexId v1, VertexId v2) const {
  return pair_index_.at({v1, v2});
}

Point ProductComplex::project1(const Point& p) const {
  std::vector<std::pair<VertexId, Rat>> coords;
  for (const auto& [pv, c] : p.coords()) coords.push_back({proj1_[pv], c});
  return Point::from_coords(std::move(coords));
}

Point ProductComplex::project2(const Point& p) const {
  std::vector<std::pair<VertexId, Rat>> coords;
  for (const auto& [pv, c] : p.coords()) coords.push_back({proj2_[pv], c});
  return Point::from_coords(std::move(coords));
}

Point ProductComplex::merge(const Point& p1, const Point& p2) const {
  // Staircase merge of cumulative coordinate sums: sort each support by the
  // product order, cut [0,1] at the union of both prefix-sum sets, and give
  // each segment to the pair of vertices whose prefix intervals cover it.
  auto sorted = [](const Point& p, const std::vector<int>& rank) {
    std::vector<std::pair<VertexId, Rat>> s(p.coords().begin(), p.coords().end());
    std::sort(s.begin(), s.end(),
              [&](const auto& a, const auto& b) { return rank[a.first] < rank[b.first]; });
    return s;
  };
  auto s1 = sorted(p1, rank1_);
  auto s2 = sorted(p2, rank2_);
  std::vector<Rat> cum1, cum2;
  Rat acc(0);
  for (const auto& [v, c] : s1) cum1.push_back(acc += c);
  acc = 0;
  for (const auto& [v, c] : s2) cum2.push_back(acc += c);

  std::vector<Rat> cuts;
  cuts.insert(cuts.end(), cum1.begin(), cum1.end());
  cuts.insert(cuts.end(), cum2.begin(), cum2.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<std::pair<VertexId, Rat>> coords;
  Rat prev(0);
  size_t i = 0, j = 0;
  for (const Rat& c : cuts) {
    Rat len = c - prev;
    // Active vertices: first prefix intervals reaching c.
    while (cum1[i] < c) ++i;
    while (cum2[j] < c) ++j;
    coords.push_back({pair_index_.at({s1[i].first, s2[j].first}), len});
    prev = c;
  }
  return Point::from_coords(std::move(coords));
}

ProductResult product_complex(std::shared_ptr<const Complex> k1,
                              std::shared_ptr<const Complex> k2) {
  return {std::make_shared<ProductComplex>(ProductComplex::make(k1, k2))};
}

// ---------------------------------------------------------------------------
// PowerComplex

PowerComplex PowerComplex::make(std::shared_ptr<const Complex> base, int n) {
  if (n < 1) throw std::invalid_argument("power requires n >= 1");
  PowerComplex p;
  p.base_ = base;
  p.n_ = n;
  if (n == 1) {
    p.complex_ = base;
    p.tuples_.resize(base->vertex_count());
    for (VertexId v = 0; v < base->vertex_count(); ++v) p.tuples_[v] = {v};
    return p;
  }
  std::shared_ptr<const Complex> current = base;
  std::vector<std::vector<VertexId>> tuples(base->vertex_count());
  for (VertexId v = 0; v < base->vertex_count(); ++v) tuples[v] = {v};
  for (int step = 1; step < n; ++step) {
    auto pc = std::make_shared<ProductComplex>(ProductComplex::make(current, base));
    std::vector<std::vector<VertexId>> next(pc->complex().vertex_count());
    for (VertexId pv = 0; pv < pc->complex().vertex_count(); ++pv) {
      auto [a, b] = pc->factors_of(pv);
      next[pv] = tuples[a];
      next[pv].push_back(b);
    }
    p.steps_.push_back(pc);
    current = pc->complex_ptr();
    tuples = std::move(next);
  }
  p.complex_ = current;
  p.tuples_ = std::move(tuples);
  return p;
}

Point PowerComplex::tuple_to_point(const std::vector<Point>& pts) const {
  if (static_cast<int>(pts.size()) != n_)
    throw std::invalid_argument("tuple length mismatch");
  Point acc = pts[0];
  for (size_t i = 0; i < steps_.size(); ++i) acc = steps_[i]->merge(acc, pts[i + 1]);
  return acc;
}

std::vector<Point> PowerComplex::point_to_tuple(const Point& p) const {
  std::vector<Point> out(n_);
  Point cur = p;
  for (int i = static_cast<int>(steps_.size()) - 1; i >= 0; --i) {
    out[i + 1] = steps_[i]->project2(cur);
    cur = steps_[i]->project1(cur);
  }
  out[0] = cur;
  return out;
}

Point PowerComplex::project(const Point& p, int i) const {
  return point_to_tuple(p)[i];
}

Point tuple_to_product_point(const PowerComplex& power, const std::vector<Point>& pts) {
  return power.tuple_to_point(pts);
}

// ---------------------------------------------------------------------------
// Tower

Tower::Tower(std::shared_ptr<const Complex> base) : base_(std::move(base)) {
  auto lvl = std::make_shared<Level>();
  lvl->complex = base_;
  lvl->base_points.resize(base_->vertex_count());
  for (VertexId v = 0; v < base_->vertex_count(); ++v)
    lvl->base_points[v] = Point::vertex(v);
  levels_.push_back(std::move(lvl));
}

int Tower::built_levels() const {
  std::lock_guard<std::mutex> g(mu_);
  return static_cast<int>(levels_.size()) - 1;
}

void Tower::ensure(int level) {
  std::lock_guard<std::mutex> g(mu_);
  while (static_cast<int>(levels_.size()) <= level) {
    const Level& prev = *levels_.back();
    auto next = std::make_shared<Level>();
    const auto& prev_simplices = prev.complex->simplices();
    std::vector<std::string> names;
    next->parents.reserve(prev_simplices.size());
    for (size_t i = 0; i < prev_simplices.size(); ++i) {
      const Simplex& s = prev_simplices[i];
      next->parents.push_back(s);
      next->barycenter_of[s] = static_cast<VertexId>(i);
      names.push_back("b" + std::to_string(levels_.size()) + "_" + std::to_string(i));
      // Barycenter coordinates in the base realization.
      std::vector<std::pair<Rat, Point>> w;
      Rat f(1, static_cast<long>(s.size()));
      for (VertexId v : s) w.push_back({f, prev.base_points[v]});
      next->base_points.push_back(Point::combine(w));
    }
    // Top cells: maximal chains inside each top simplex of the previous
    // level, one per permutation of its vertices.
    std::vector<Simplex> tops;
    for (const auto& t : prev.complex->top_simplices()) {
      Simplex perm = t;
      std::sort(perm.begin(), perm.end());
      do {
        Simplex cell;
        Simplex prefix;
        for (VertexId v : perm) {
          prefix.push_back(v);
          Simplex key = prefix;
          std::sort(key.begin(), key.end());
          cell.push_back(next->barycenter_of.at(key));
        }
        std::sort(cell.begin(), cell.end());
        tops.push_back(cell);
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
    next->complex = std::make_shared<Complex>(Complex::from_top(std::move(names), tops));
    levels_.push_back(std::move(next));
  }
}

const Tower::Level& Tower::level(int m) const {
  std::lock_guard<std::mutex> g(mu_);
  if (m >= static_cast<int>(levels_.size())) throw std::out_of_range("tower level not built");
  return *levels_[m];
}

const Complex& Tower::complex_at(int level_idx) const { return *level(level_idx).complex; }
std::shared_ptr<const Complex> Tower::complex_ptr_at(int level_idx) const {
  return level(level_idx).complex;
}

const Point& Tower::vertex_base_point(int level_idx, VertexId v) const {
  return level(level_idx).base_points[v];
}

const Simplex& Tower::parent_simplex(int level_idx, VertexId v) const {
  if (level_idx < 1) throw std::out_of_range("parent_simplex needs level >= 1");
  return level(level_idx).parents[v];
}

Located Tower::locate(const Point& base_point, int target) const {
  const_cast<Tower*>(this)->ensure(target);
  Point cur = base_point;
  for (int k = 0; k < target; ++k) {
    const Level& next = level(k + 1);
    // Sort the support by descending coordinate; ties broken by ascending
    // vertex id so the containing chain is canonical.
    std::vector<std::pair<VertexId, Rat>> supp(cur.coords().begin(), cur.coords().end());
    std::sort(supp.begin(), supp.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    std::vector<std::pair<VertexId, Rat>> coords;
    Simplex prefix;
    for (size_t j = 0; j < supp.size(); ++j) {
      prefix.push_back(supp[j].first);
      Rat cj = supp[j].second;
      Rat cn = j + 1 < supp.size() ? supp[j + 1].second : Rat(0);
      Rat w = (cj - cn) * Rat(static_cast<long>(j + 1));
      if (w > 0) {
        Simplex key = prefix;
        std::sort(key.begin(), key.end());
        coords.push_back({next.barycenter_of.at(key), w});
      }
    }
    cur = Point::from_coords(std::move(coords));
  }
  return {cur.carrier(), cur};
}

Point Tower::push_forward(int level_idx, const Point& level_point) const {
  const Level& lvl = level(level_idx);
  std::vector<std::pair<Rat, Point>> w;
  for (const auto& [v, c] : level_point.coords()) w.push_back({c, lvl.base_points[v]});
  return Point::combine(w);
}

Tower& barycentric_subdivide(Tower& tower) {
  tower.ensure(tower.built_levels() + 1);
  return tower;
}

// ---------------------------------------------------------------------------
// Mesh / diameter / radius

MeshBound mesh_bound(const Complex& k, int level) {
  int n = k.dim();
  if (n < 0) throw std::invalid_argument("empty complex");
  Rat ratio = n == 0 ? Rat(0) : Rat(n, n + 1);
  MeshBound b;
  b.sq = Rat(2) * rat_pow(ratio * ratio, static_cast<unsigned>(level));
  if (level == 0) b.sq = Rat(2);
  return b;
}

Rat measured_mesh_cmp(const Tower& tower, int level, const Metric& m) {
  const_cast<Tower&>(tower).ensure(level);
  const Complex& k = tower.complex_at(level);
  Rat best(0);
  std::vector<std::vector<Rat>> emb(k.vertex_count());
  for (VertexId v = 0; v < k.vertex_count(); ++v)
    emb[v] = m.embed(tower.vertex_base_point(level, v));
  for (const auto& cell : k.top_simplices())
    for (size_t i = 0; i < cell.size(); ++i)
      for (size_t j = i + 1; j < cell.size(); ++j)
        best = std::max(best, m.cmp_embedded(emb[cell[i]], emb[cell[j]]));
  return best;
}

Rat diameter_cmp(const Complex& k, const Metric& m) { return m.diameter_cmp(k); }

Interval diameter_interval(const Complex& k, const Metric& m, const Rat& prec) {
  return m.diameter(k, prec);
}

Interval radius_bound(const Complex& k, const Metric& m, Tower& tower, int level,
                      const Rat& prec) {
  tower.ensure(level);
  const Complex& lk = tower.complex_at(level);
  std::optional<Rat> best_key;
  for (VertexId v = 0; v < lk.vertex_count(); ++v) {
    Rat key = m.eccentricity_cmp(tower.vertex_base_point(level, v), k);
    if (!best_key || key < *best_key) best_key = key;
  }
  Interval ecc = m.key_to_interval(*best_key, prec);
  Interval mesh = m.key_to_interval(measured_mesh_cmp(tower, level, m), prec);
  Interval diam = m.diameter(k, prec);
  Rat lo = std::max(Rat(ecc.lo - mesh.hi), Rat(diam.lo / 2));
  if (lo < 0) lo = 0;
  Rat hi = ecc.hi;
  if (lo > hi) lo = hi;
  return Interval(lo, hi);
}

}  // namespace approxsat
