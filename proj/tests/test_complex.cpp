#include "doctest.h"

#include <random>

#include "approxsat/complex.hpp"

using namespace approxsat;

namespace {

std::shared_ptr<const Complex> edge_complex() {
  return std::make_shared<Complex>(Complex::from_top({"a", "b"}, {{0, 1}}));
}

std::shared_ptr<const Complex> triangle_complex() {
  return std::make_shared<Complex>(Complex::from_top({"a", "b", "c"}, {{0, 1, 2}}));
}

Metric barycentric(const Complex& k) { return Metric::make(k, MetricSpec{}); }

Point random_point_of(const Complex& k, std::mt19937_64& rng) {
  const auto& tops = k.top_simplices();
  const Simplex& s = tops[rng() % tops.size()];
  std::vector<std::pair<VertexId, Rat>> coords;
  Rat total(0);
  for (VertexId v : s) {
    long w = static_cast<long>(rng() % 100) + 1;
    coords.push_back({v, Rat(w)});
    total += w;
  }
  for (auto& [v, c] : coords) c /= total;
  return Point::from_coords(std::move(coords));
}

// Exact decision of sqrt(A) <= sqrt(B) + sqrt(C) over the rationals.
bool sqrt_triangle_ok(const Rat& A, const Rat& B, const Rat& C) {
  if (A <= B + C) return true;
  Rat delta = A - B - C;
  return delta * delta <= 4 * B * C;
}

std::shared_ptr<const Complex> random_complex(std::mt19937_64& rng) {
  int nv = 3 + static_cast<int>(rng() % 3);
  std::vector<std::string> names;
  for (int i = 0; i < nv; ++i) names.push_back("v" + std::to_string(i));
  std::vector<Simplex> tops;
  int ntop = 1 + static_cast<int>(rng() % 3);
  for (int t = 0; t < ntop; ++t) {
    std::set<VertexId> s;
    int size = 2 + static_cast<int>(rng() % 2);
    while (static_cast<int>(s.size()) < size) s.insert(static_cast<VertexId>(rng() % nv));
    tops.push_back(Simplex(s.begin(), s.end()));
  }
  return std::make_shared<Complex>(Complex::from_top(names, tops));
}

}  // namespace

TEST_CASE("validate closure conditions") {
  CHECK(validate(2, {{0}, {1}, {0, 1}}).ok);
  auto bad = validate(2, {{0, 1}});
  CHECK_FALSE(bad.ok);
  REQUIRE(bad.missing.has_value());
  CHECK(bad.missing->size() == 1);
  CHECK(validate(3, {{0}, {1}, {2}, {0, 1}, {1, 2}, {0, 2}, {0, 1, 2}}).ok);
}

TEST_CASE("from_top closes faces and finds tops") {
  auto tri = triangle_complex();
  CHECK(tri->simplices().size() == 7);
  CHECK(tri->top_simplices().size() == 1);
  CHECK(tri->dim() == 2);
  CHECK(validate(*tri).ok);
}

TEST_CASE("barycentric distance on an edge") {
  auto k = edge_complex();
  Metric m = barycentric(*k);
  Point a = Point::vertex(0), b = Point::vertex(1);
  // d(a,b) = sqrt(2): the squared key is exactly 2.
  CHECK(m.mode() == Metric::Mode::Squared);
  CHECK(m.cmp(a, b) == Rat(2));
  CHECK(m.cmp(a, a) == Rat(0));
  Point mid = Point::midpoint(a, b);
  CHECK(m.cmp(mid, a) == Rat(1, 2));
  DistanceResult d = distance(a, b, m);
  CHECK(d.exact_sq == Rat(2));
  CHECK(d.enclosure.lo * d.enclosure.lo <= Rat(2));
  CHECK(d.enclosure.hi * d.enclosure.hi >= Rat(2));
}

TEST_CASE("metric axioms on random triples (exact squared comparisons)") {
  auto tri = triangle_complex();
  Metric m = barycentric(*tri);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    Point a = random_point_of(*tri, rng);
    Point b = random_point_of(*tri, rng);
    Point c = random_point_of(*tri, rng);
    CHECK(m.cmp(a, b) == m.cmp(b, a));
    CHECK((m.cmp(a, b) == 0) == (a == b));
    CHECK(sqrt_triangle_ok(m.cmp(a, c), m.cmp(a, b), m.cmp(b, c)));
  }
}

TEST_CASE("product of two edges") {
  auto e1 = std::make_shared<Complex>(Complex::from_top({"a", "b"}, {{0, 1}}));
  auto e2 = std::make_shared<Complex>(Complex::from_top({"c", "d"}, {{0, 1}}));
  auto pr = product_complex(e1, e2);
  const Complex& k = pr.product->complex();
  CHECK(k.vertex_count() == 4);
  CHECK(k.top_simplices().size() == 2);  // C(2,1) shuffles
  int edges = 0;
  for (const auto& s : k.simplices())
    if (s.size() == 2) ++edges;
  CHECK(edges == 5);
  CHECK(validate(k).ok);

  SUBCASE("projections are simplicial") {
    for (const auto& s : k.simplices()) {
      Simplex img1, img2;
      for (VertexId v : s) {
        img1.push_back(pr.product->projection1()[v]);
        img2.push_back(pr.product->projection2()[v]);
      }
      auto dedup = [](Simplex x) {
        std::sort(x.begin(), x.end());
        x.erase(std::unique(x.begin(), x.end()), x.end());
        return x;
      };
      CHECK(e1->contains(dedup(img1)));
      CHECK(e2->contains(dedup(img2)));
    }
  }
}

TEST_CASE("product with a point is isomorphic to the factor") {
  auto pt = std::make_shared<Complex>(Complex::from_top({"z"}, {{0}}));
  auto tri = triangle_complex();
  auto pr = product_complex(tri, pt);
  CHECK(pr.product->complex().vertex_count() == 3);
  CHECK(pr.product->complex().simplices().size() == tri->simplices().size());
  CHECK(pr.product->complex().top_simplices().size() == 1);
}

TEST_CASE("triangle x edge shuffle count") {
  auto tri = triangle_complex();
  auto e = std::make_shared<Complex>(Complex::from_top({"p", "q"}, {{0, 1}}));
  auto pr = product_complex(tri, e);
  // One (2-simplex, 1-simplex) pair, C(3,1) = 3 staircases of dimension 3.
  int top3 = 0;
  for (const auto& s : pr.product->complex().top_simplices())
    if (s.size() == 4) ++top3;
  CHECK(top3 == 3);
  CHECK(validate(pr.product->complex()).ok);
}

TEST_CASE("tuple_to_product_point basics") {
  auto e1 = std::make_shared<Complex>(Complex::from_top({"a", "b"}, {{0, 1}}));
  auto e2 = std::make_shared<Complex>(Complex::from_top({"c", "d"}, {{0, 1}}));
  auto pr = product_complex(e1, e2);

  SUBCASE("vertex pairs") {
    Point p = pr.product->merge(Point::vertex(0), Point::vertex(1));
    REQUIRE(p.coords().size() == 1);
    CHECK(p.coords()[0].first == pr.product->pair_vertex(0, 1));
    CHECK(p.coords()[0].second == Rat(1));
  }
  SUBCASE("midpoint x midpoint lands on the diagonal (regression)") {
    Point mid1 = Point::midpoint(Point::vertex(0), Point::vertex(1));
    Point mid2 = Point::midpoint(Point::vertex(0), Point::vertex(1));
    Point p = pr.product->merge(mid1, mid2);
    REQUIRE(p.coords().size() == 2);
    CHECK(p.coord(pr.product->pair_vertex(0, 0)) == Rat(1, 2));
    CHECK(p.coord(pr.product->pair_vertex(1, 1)) == Rat(1, 2));
  }
  SUBCASE("projection round trips on random points") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 100; ++i) {
      Point p1 = random_point_of(*e1, rng);
      Point p2 = random_point_of(*e2, rng);
      Point merged = pr.product->merge(p1, p2);
      CHECK(pr.product->project1(merged) == p1);
      CHECK(pr.product->project2(merged) == p2);
    }
  }
}

TEST_CASE("power complex round trips") {
  auto e = edge_complex();
  PowerComplex p3 = PowerComplex::make(e, 3);
  std::mt19937_64 rng(31);
  for (int i = 0; i < 50; ++i) {
    std::vector<Point> pts;
    for (int j = 0; j < 3; ++j) pts.push_back(random_point_of(*e, rng));
    Point merged = tuple_to_product_point(p3, pts);
    auto back = p3.point_to_tuple(merged);
    for (int j = 0; j < 3; ++j) CHECK(back[j] == pts[j]);
  }
}

TEST_CASE("barycentric subdivision of an edge and a triangle") {
  Tower te(edge_complex());
  te.ensure(1);
  CHECK(te.complex_at(1).vertex_count() == 3);
  CHECK(te.complex_at(1).top_simplices().size() == 2);

  Tower tt(triangle_complex());
  tt.ensure(1);
  CHECK(tt.complex_at(1).vertex_count() == 7);
  CHECK(tt.complex_at(1).top_simplices().size() == 6);  // 3! maximal chains
  CHECK(validate(tt.complex_at(1)).ok);
}

TEST_CASE("subdivision preserves dimension on random complexes") {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 10; ++i) {
    auto k = random_complex(rng);
    Tower t(k);
    t.ensure(1);
    CHECK(t.complex_at(1).dim() == k->dim());
    CHECK(validate(t.complex_at(1)).ok);
  }
}

TEST_CASE("locate on the tower") {
  Tower t(edge_complex());
  t.ensure(2);

  SUBCASE("base vertex stays a vertex with coordinate 1") {
    Located loc = t.locate(Point::vertex(0), 2);
    REQUIRE(loc.coords.coords().size() == 1);
    CHECK(loc.coords.coords()[0].second == Rat(1));
    CHECK(t.push_forward(2, loc.coords) == Point::vertex(0));
  }
  SUBCASE("edge barycenter is the new vertex at level 1") {
    Point mid = Point::midpoint(Point::vertex(0), Point::vertex(1));
    Located loc = t.locate(mid, 1);
    REQUIRE(loc.coords.coords().size() == 1);
    CHECK(t.parent_simplex(1, loc.coords.coords()[0].first) == Simplex{0, 1});
  }
  SUBCASE("round trips on random points") {
    std::mt19937_64 rng(47);
    Tower tt(triangle_complex());
    tt.ensure(2);
    for (int i = 0; i < 50; ++i) {
      Point p = random_point_of(tt.base(), rng);
      Located loc = tt.locate(p, 2);
      CHECK(tt.push_forward(2, loc.coords) == p);
    }
  }
}

TEST_CASE("mesh bound values and measured mesh") {
  auto e = edge_complex();
  CHECK(mesh_bound(*e, 0).sq == Rat(2));
  CHECK(mesh_bound(*e, 1).sq == Rat(1, 2));
  auto tri = triangle_complex();
  CHECK(mesh_bound(*tri, 2).sq == Rat(2) * Rat(16, 81));  // (sqrt2 * 4/9)^2

  for (auto k : {e, tri}) {
    Tower t(k);
    Metric m = barycentric(*k);
    for (int level = 0; level <= 3; ++level) {
      t.ensure(level);
      CHECK(measured_mesh_cmp(t, level, m) <= mesh_bound(*k, level).sq);
    }
  }
}

TEST_CASE("diameter and radius bounds") {
  auto e = edge_complex();
  Metric m = barycentric(*e);
  CHECK(diameter_cmp(*e, m) == Rat(2));

  Tower t(e);
  Interval r = radius_bound(*e, m, t, 1);
  // radius = sqrt(1/2): the midpoint eccentricity.
  CHECK(r.lo * r.lo <= Rat(1, 2));
  CHECK(r.hi * r.hi >= Rat(1, 2));
  CHECK(r.width() <= Rat(1, 1000));

  SUBCASE("diam <= 2 * radius-hi on random complexes") {
    std::mt19937_64 rng(53);
    for (int i = 0; i < 10; ++i) {
      auto k = random_complex(rng);
      Metric mk = barycentric(*k);
      Tower tk(k);
      Interval rk = radius_bound(*k, mk, tk, 1);
      Interval dk = diameter_interval(*k, mk, Rat(1, 1 << 20));
      CHECK(dk.lo <= 2 * rk.hi + Rat(1, 1000));
    }
  }
}

TEST_CASE("coordinate metrics with weights") {
  auto sq = std::make_shared<Complex>(
      Complex::from_top({"00", "10", "01", "11"}, {{0, 1, 3}, {0, 2, 3}}));
  MetricSpec spec;
  spec.kind = MetricSpec::Kind::Coordinate;
  spec.norm = Norm::L2;
  spec.embedding = {{"00", {Rat(0), Rat(0)}},
                    {"10", {Rat(1), Rat(0)}},
                    {"01", {Rat(0), Rat(1)}},
                    {"11", {Rat(1), Rat(1)}}};
  spec.weights = {Rat(1), Rat(1, 10)};
  Metric m = Metric::make(*sq, spec);
  CHECK(m.cmp(Point::vertex(0), Point::vertex(1)) == Rat(1));           // x-axis
  CHECK(m.cmp(Point::vertex(0), Point::vertex(2)) == Rat(1, 100));      // weighted y
  CHECK(m.diameter_cmp(*sq) == Rat(101, 100));                          // corner pair

  SUBCASE("sup norm is raw-exact") {
    spec.norm = Norm::Sup;
    Metric ms = Metric::make(*sq, spec);
    CHECK(ms.mode() == Metric::Mode::Raw);
    CHECK(ms.cmp(Point::vertex(0), Point::vertex(3)) == Rat(1));
  }
  SUBCASE("rescale by diameter") {
    Metric r = m.rescaled_by_diameter(*sq);
    CHECK(r.diameter_cmp(*sq) == Rat(1));
  }
}
