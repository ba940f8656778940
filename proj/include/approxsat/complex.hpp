// Finite abstract simplicial complexes, exact-rational geometric
// realizations, shuffle products, barycentric subdivision towers, and
// metric queries.  Every coordinate is an exact rational; distances are
// compared through exact keys (plain values, or squared values for
// Euclidean-type norms) so geometric predicates never rely on floating
// point.
#ifndef APPROXSAT_COMPLEX_HPP
#define APPROXSAT_COMPLEX_HPP

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "approxsat/rational.hpp"

namespace approxsat {

using VertexId = int;
using Simplex = std::vector<VertexId>;  // sorted ascending, nonempty

// ---------------------------------------------------------------------------
// Complex

class Complex {
 public:
  Complex() = default;
  // Builds the complex generated by the given top simplices (faces are
  // completed automatically).  Vertex ids are positions in `names`.
  static Complex from_top(std::vector<std::string> names,
                          const std::vector<Simplex>& top);

  int vertex_count() const { return static_cast<int>(names_.size()); }
  const std::string& name(VertexId v) const { return names_[v]; }
  std::optional<VertexId> vertex_by_name(const std::string& name) const;

  const std::vector<Simplex>& simplices() const { return simplices_; }
  const std::vector<Simplex>& top_simplices() const { return top_; }
  bool contains(const Simplex& s) const;
  int dim() const { return dim_; }

 private:
  std::vector<std::string> names_;
  std::vector<Simplex> simplices_;  // face-closed, sorted
  std::vector<Simplex> top_;
  int dim_ = -1;
};

// Closure-condition check on a raw family of vertex sets.  Violations are
// data, not faults: the report carries the first missing face.
struct ValidationReport {
  bool ok = true;
  std::optional<Simplex> missing;  // first missing face when !ok
  std::string detail;
};
ValidationReport validate(int vertex_count, const std::vector<Simplex>& family);
inline ValidationReport validate(const Complex& k) {
  return validate(k.vertex_count(), k.simplices());
}

// ---------------------------------------------------------------------------
// Realization points

// A point of |K|: sparse barycentric coordinates, exact rationals summing
// to 1; the support is the carrier simplex.
class Point {
 public:
  Point() = default;
  static Point vertex(VertexId v);
  static Point from_coords(std::vector<std::pair<VertexId, Rat>> coords);

  const std::vector<std::pair<VertexId, Rat>>& coords() const { return coords_; }
  Simplex carrier() const;
  Rat coord(VertexId v) const;

  bool operator==(const Point& o) const { return coords_ == o.coords_; }
  bool operator!=(const Point& o) const { return !(*this == o); }
  std::string to_string() const;

  // Affine combination helpers.
  static Point combine(const std::vector<std::pair<Rat, Point>>& weighted);
  static Point midpoint(const Point& a, const Point& b);
  static Point centroid(const std::vector<Point>& pts);

 private:
  std::vector<std::pair<VertexId, Rat>> coords_;  // sorted by vertex, all > 0
};

// ---------------------------------------------------------------------------
// Metrics

enum class Norm { L2, Sup, L1 };
enum class Combiner { Sup, Sum, L2 };  // for product metrics

// User-facing metric description for a base complex.
struct MetricSpec {
  enum class Kind { BarycentricEuclidean, Coordinate };
  Kind kind = Kind::BarycentricEuclidean;
  Norm norm = Norm::L2;
  // Coordinate kind: embedded position per vertex name, plus per-axis
  // weights (default 1).  Weights scale coordinate differences.
  std::map<std::string, std::vector<Rat>> embedding;
  std::vector<Rat> weights;
};

// Compiled metric bound to a complex: a list of blocks over a concatenated
// embedded coordinate space, combined by sup/sum/l2.  Exact comparison keys
// are plain distances (Raw mode) or squared distances (Squared mode).
class Metric {
 public:
  enum class Mode { Raw, Squared };

  static Metric make(const Complex& k, const MetricSpec& spec);
  static Metric product(const std::vector<const Metric*>& factors,
                        const std::vector<std::vector<VertexId>>& vertex_tuples,
                        Combiner comb);
  // Same blocks, every weight scaled by 1/scale (given via scale_sq for
  // Squared mode exactness).
  Metric rescaled_by_diameter(const Complex& k) const;

  Mode mode() const { return mode_; }
  int dim() const { return dim_; }

  const std::vector<Rat>& vertex_embedding(VertexId v) const { return embed_[v]; }
  std::vector<Rat> embed(const Point& p) const;

  // Exact comparison key for the distance (squared in Squared mode).
  Rat cmp(const Point& a, const Point& b) const;
  Rat cmp_embedded(const std::vector<Rat>& ea, const std::vector<Rat>& eb) const;
  // Turns a comparison key into a certified distance enclosure.
  Interval key_to_interval(const Rat& key, const Rat& prec) const;
  Interval dist(const Point& a, const Point& b, const Rat& prec) const;

  // Dual-norm value of a linear functional given by gradient g over the
  // embedded coordinates: certified upper bound on the functional's
  // Lipschitz constant w.r.t. this metric.
  Rat dual_norm_upper(const std::vector<Rat>& gradient, const Rat& prec) const;

  Rat diameter_cmp(const Complex& k) const;
  Interval diameter(const Complex& k, const Rat& prec) const;
  Rat eccentricity_cmp(const Point& center, const Complex& k) const;

 private:
  struct Block {
    int offset = 0;
    int len = 0;
    Norm norm = Norm::L2;
    std::vector<Rat> weight;     // per-axis, Raw-usable norms
    std::vector<Rat> weight_sq;  // per-axis squared, for L2
  };
  Mode mode_ = Mode::Raw;
  Combiner comb_ = Combiner::Sup;
  int dim_ = 0;
  std::vector<Block> blocks_;
  std::vector<std::vector<Rat>> embed_;  // per vertex

  Rat block_cmp(const Block& b, const std::vector<Rat>& da) const;
};

// Convenience free function matching the per-operation contract: certified
// distance enclosure plus the exact square when the norm is Euclidean.
struct DistanceResult {
  Interval enclosure;
  std::optional<Rat> exact;     // plain rational distance (Raw mode)
  std::optional<Rat> exact_sq;  // exact squared distance (Squared mode)
};
DistanceResult distance(const Point& a, const Point& b, const Metric& m,
                        const Rat& prec = Rat(1, 1000000));

// ---------------------------------------------------------------------------
// Products

// Binary shuffle product: vertex set V1 x V2, top simplices are the
// monotone staircases of top-simplex pairs; the coordinate projections are
// simplicial.
class ProductComplex {
 public:
  static ProductComplex make(std::shared_ptr<const Complex> k1,
                             std::shared_ptr<const Complex> k2);

  const Complex& complex() const { return *complex_; }
  std::shared_ptr<const Complex> complex_ptr() const { return complex_; }
  const Complex& factor1() const { return *k1_; }
  const Complex& factor2() const { return *k2_; }

  VertexId pair_vertex(VertexId v1, VertexId v2) const;
  std::pair<VertexId, VertexId> factors_of(VertexId pv) const { return factors_[pv]; }

  // Simplicial projections (vertex maps).
  const std::vector<VertexId>& projection1() const { return proj1_; }
  const std::vector<VertexId>& projection2() const { return proj2_; }

  Point project1(const Point& p) const;
  Point project2(const Point& p) const;
  // Inverse homeomorphism: staircase merge of cumulative coordinate sums.
  Point merge(const Point& p1, const Point& p2) const;

 private:
  std::shared_ptr<const Complex> k1_, k2_;
  std::shared_ptr<const Complex> complex_;
  std::vector<std::pair<VertexId, VertexId>> factors_;
  std::map<std::pair<VertexId, VertexId>, VertexId> pair_index_;
  std::vector<VertexId> proj1_, proj2_;
  std::vector<int> rank1_, rank2_;  // order ranks within each factor
};

struct ProductResult {
  std::shared_ptr<const ProductComplex> product;
};
ProductResult product_complex(std::shared_ptr<const Complex> k1,
                              std::shared_ptr<const Complex> k2);

// Left-associated n-th power K^n with flattened tuple bookkeeping.
class PowerComplex {
 public:
  static PowerComplex make(std::shared_ptr<const Complex> base, int n);

  int n() const { return n_; }
  const Complex& complex() const { return *complex_; }
  std::shared_ptr<const Complex> complex_ptr() const { return complex_; }
  const Complex& base() const { return *base_; }

  const std::vector<VertexId>& tuple_of(VertexId pv) const { return tuples_[pv]; }

  Point tuple_to_point(const std::vector<Point>& pts) const;
  std::vector<Point> point_to_tuple(const Point& p) const;
  Point project(const Point& p, int i) const;  // i in [0, n)

 private:
  std::shared_ptr<const Complex> base_;
  std::shared_ptr<const Complex> complex_;
  int n_ = 1;
  std::vector<std::shared_ptr<const ProductComplex>> steps_;  // size n-1
  std::vector<std::vector<VertexId>> tuples_;
};

// Spec-level operation: merges one point per factor into the iterated
// product complex; inverse of the projection tuple.
Point tuple_to_product_point(const PowerComplex& power, const std::vector<Point>& pts);

// ---------------------------------------------------------------------------
// Barycentric subdivision towers

struct Located {
  Simplex simplex;  // carrier at the requested level
  Point coords;     // barycentric coordinates over that level's vertices
};

class Tower {
 public:
  explicit Tower(std::shared_ptr<const Complex> base);

  const Complex& base() const { return *base_; }
  std::shared_ptr<const Complex> base_ptr() const { return base_; }

  void ensure(int level);
  int built_levels() const;

  const Complex& complex_at(int level) const;
  std::shared_ptr<const Complex> complex_ptr_at(int level) const;
  // Exact base-complex coordinates of a level-m vertex.
  const Point& vertex_base_point(int level, VertexId v) const;
  // The level-(m-1) simplex whose barycenter this level-m vertex is.
  const Simplex& parent_simplex(int level, VertexId v) const;

  Located locate(const Point& base_point, int level) const;
  Point push_forward(int level, const Point& level_point) const;

 private:
  struct Level {
    std::shared_ptr<const Complex> complex;
    std::vector<Point> base_points;
    std::vector<Simplex> parents;
    std::map<Simplex, VertexId> barycenter_of;
  };
  const Level& level(int m) const;

  std::shared_ptr<const Complex> base_;
  mutable std::mutex mu_;  // single writer; readers see completed levels
  std::vector<std::shared_ptr<const Level>> levels_;
};

// Extends the tower by one level and returns it (spec-level operation).
Tower& barycentric_subdivide(Tower& tower);

// ---------------------------------------------------------------------------
// Mesh / diameter / radius

struct MeshBound {
  Rat sq;  // exact square of sqrt(2) * (n/(n+1))^m
  Interval enclosure(const Rat& prec) const { return sqrt_enclosure(sq, prec); }
};
MeshBound mesh_bound(const Complex& k, int level);

// Max vertex-pair comparison key within any level-m cell (exact).
Rat measured_mesh_cmp(const Tower& tower, int level, const Metric& m);

Rat diameter_cmp(const Complex& k, const Metric& m);
Interval diameter_interval(const Complex& k, const Metric& m, const Rat& prec);

// Certified radius enclosure from level-m subdivision-vertex eccentricities.
Interval radius_bound(const Complex& k, const Metric& m, Tower& tower, int level,
                      const Rat& prec = Rat(1, 1 << 20));

}  // namespace approxsat

#endif  // APPROXSAT_COMPLEX_HPP
