// Simplicial maps, (M,N)-simplicial operations and their ground-level PL
// realizations, closed-form operations, term evaluation, Lipschitz
// certification, and epsilon-chains.
#ifndef APPROXSAT_PLMAP_HPP
#define APPROXSAT_PLMAP_HPP

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "approxsat/complex.hpp"
#include "approxsat/theory.hpp"

namespace approxsat {

// ---------------------------------------------------------------------------
// Carrier: a complex with a metric and subdivision/power machinery.

class Carrier;
using CarrierPtr = std::shared_ptr<const Carrier>;

struct PowerData {
  std::shared_ptr<const PowerComplex> power;
  std::shared_ptr<Tower> tower;
  std::shared_ptr<const Metric> metric;  // sup combination of factor metrics
};

class Carrier : public std::enable_shared_from_this<Carrier> {
 public:
  static CarrierPtr make(std::shared_ptr<const Complex> complex, MetricSpec spec);
  // Carrier over a pre-built metric (product/power carriers).
  static CarrierPtr make_custom(std::shared_ptr<const Complex> complex,
                                std::shared_ptr<const Metric> metric,
                                Rat distortion = Rat(1));

  const Complex& complex() const { return *complex_; }
  std::shared_ptr<const Complex> complex_ptr() const { return complex_; }
  const MetricSpec& metric_spec() const { return spec_; }
  const Metric& metric() const { return *metric_; }
  std::shared_ptr<const Metric> metric_ptr() const { return metric_; }
  Tower& tower() const { return *tower_; }

  // Cached K^n data (n >= 1) with the coordinatewise-sup tuple metric.
  const PowerData& power(int n) const;

  // Embedded coordinates (metric embedding) of a realization point, and the
  // exact inverse: the unique point of |K| with the given coordinates
  // (lexicographically least containing simplex on shared faces).
  std::vector<Rat> embed(const Point& p) const { return metric_->embed(p); }
  Point unembed(const std::vector<Rat>& coords) const;

  // Certified upper bound on (intrinsic geodesic distance) / (metric
  // distance) over |K|; 1 for carriers whose realization is convex in the
  // embedded coordinates.
  const Rat& geodesic_distortion() const { return distortion_; }
  void set_geodesic_distortion(Rat d) { distortion_ = std::move(d); }

 private:
  std::shared_ptr<const Complex> complex_;
  MetricSpec spec_;
  std::shared_ptr<const Metric> metric_;
  std::shared_ptr<Tower> tower_;
  Rat distortion_ = Rat(1);
  mutable std::mutex mu_;
  mutable std::map<int, std::shared_ptr<const PowerData>> powers_;
};

// ---------------------------------------------------------------------------
// Simplicial maps

struct SimplicialMap {
  std::shared_ptr<const Complex> domain;
  std::shared_ptr<const Complex> codomain;
  std::vector<VertexId> vertex_map;
};

struct SimplicialCheck {
  bool ok = true;
  std::optional<Simplex> violating;  // first domain simplex with non-simplex image
};
SimplicialCheck check_simplicial(const SimplicialMap& phi);

// ---------------------------------------------------------------------------
// Operations

class Operation;
using OpPtr = std::shared_ptr<const Operation>;

using Evaluator = std::function<Point(const Carrier&, const std::vector<Point>&)>;

struct ClosedFlags {
  bool affine = false;     // evaluator is affine in embedded coordinates
  int chain_lattice = 0;   // min/max by the order of a 1-d embedding: -1 min, +1 max
};

class Operation {
 public:
  // (M,N)-simplicial operation: vertex map from (K^arity)^(M) to K^(N).
  // For arity 0 the map has a single entry naming the image vertex.
  static OpPtr pl(CarrierPtr carrier, int arity, int M, int N,
                  std::vector<VertexId> vertex_map);
  // Caller has already checked simpliciality and certified the Lipschitz
  // bound (decision-procedure fast path).
  static OpPtr pl_precertified(CarrierPtr carrier, int arity, int M, int N,
                               std::vector<VertexId> vertex_map, Rat lipschitz);
  static OpPtr closed(CarrierPtr carrier, int arity, std::string name, Evaluator eval,
                      std::vector<Rat> lip_args, ClosedFlags flags = {});
  static OpPtr constant(CarrierPtr carrier, int arity, Point value, std::string name = "");

  int arity() const { return arity_; }
  const CarrierPtr& carrier() const { return carrier_; }
  const std::string& name() const { return name_; }

  bool is_pl() const { return is_pl_; }
  int level_M() const { return M_; }
  int level_N() const { return N_; }
  const std::vector<VertexId>& vertex_map() const { return vertex_map_; }
  SimplicialMap as_simplicial_map() const;  // PL kind only

  bool affine() const { return flags_.affine; }
  int chain_lattice() const { return flags_.chain_lattice; }

  // Certified Lipschitz bound w.r.t. the coordinatewise-sup tuple metric,
  // and per-argument bounds (summing form).
  const Rat& lipschitz() const { return lip_; }
  const std::vector<Rat>& lip_args() const { return lip_args_; }

  Point evaluate(const std::vector<Point>& args) const;

 private:
  Operation() = default;
  int arity_ = 0;
  CarrierPtr carrier_;
  std::string name_;
  bool is_pl_ = false;
  int M_ = 0, N_ = 0;
  std::vector<VertexId> vertex_map_;
  Evaluator eval_;
  ClosedFlags flags_;
  Rat lip_ = Rat(0);
  std::vector<Rat> lip_args_;
};

// Ground-level realization of a unary PL operation.
Point evaluate_ground(const Operation& op, const Point& p);
// General evaluation (tuple merge + ground evaluation for PL operations).
Point evaluate_op(const Operation& op, const std::vector<Point>& args);

// Certified Lipschitz bound for a PL operation: per-cell affine gradients,
// dual norms in the domain tuple metric, times the carrier's geodesic
// distortion.  Throws on a degenerate cell.
Rat lipschitz_bound_pl(const Carrier& carrier, int arity, int M, int N,
                       const std::vector<VertexId>& vertex_map);

// ---------------------------------------------------------------------------
// Algebras and terms

struct Algebra {
  CarrierPtr carrier;
  std::map<std::string, OpPtr> ops;

  const Operation& op(const std::string& symbol) const;
  Algebra with_op(const std::string& symbol, OpPtr op) const;
};

using Env = std::map<int, Point>;

Point term_evaluate(const Algebra& a, const Term& t, const Env& env);
Rat term_lipschitz(const Algebra& a, const Term& t);
// Per-variable sensitivity bounds: d(t(x), t(y)) <= sum_j S_j d(x_j, y_j).
std::map<int, Rat> term_sensitivity(const Algebra& a, const Term& t);

// Derived algebra for an interpretation: each source symbol becomes the term
// operation of its interpreting term.
Algebra derived_algebra(const Algebra& a, const Interpretation& interp);

// ---------------------------------------------------------------------------
// Epsilon chains

struct EpsilonChain {
  std::vector<Rat> eps;  // eps[0] ... eps[M], descending, eps[k+1] <= eps[k]/2
};

EpsilonChain epsilon_chain(const Algebra& a, int M, const Rat& eps);

// ---------------------------------------------------------------------------
// Simplicial approximation

struct ApproxResult {
  OpPtr op;             // null on failure
  int M = -1, N = -1;
  Rat certified_sup;    // certified bound on sup d(f, g) when op != null
  Rat best_slack;       // smallest uncertified margin seen (failure diagnostics)
};

ApproxResult simplicial_approximate(const Operation& f, const Rat& eps, int max_M);

// ---------------------------------------------------------------------------
// Closed-form registry

struct RegistryEntry {
  std::string id;
  int arity;
  std::function<OpPtr(CarrierPtr)> make;
};

const std::vector<RegistryEntry>& closed_registry();
OpPtr make_registered(CarrierPtr carrier, const std::string& id);

// ---------------------------------------------------------------------------
// Standard carriers (used by the catalog, the CLI and tests)

// Unit interval [0,1] as a one-edge complex with the coordinate metric.
CarrierPtr make_interval_carrier();
// [lo,hi] segment, 1-d coordinate metric.
CarrierPtr make_segment_carrier(const Rat& lo, const Rat& hi);
// Unit square as two triangles; l2 coordinate metric with per-axis weights.
CarrierPtr make_square_carrier(Norm norm = Norm::L2, std::vector<Rat> weights = {});
// Unit cube as the triple product of intervals; sup metric with weights.
CarrierPtr make_cube_carrier(Norm norm = Norm::Sup, std::vector<Rat> weights = {});
// Triode: three unit legs from the origin; endpoint directions are rational
// unit vectors. spread = 0 gives the squeezed triode used by the exotic
// metrics (legs within ~4*t of each other for t = spread parameter).
CarrierPtr make_triode_carrier(const Rat& t1, const Rat& t2);
// Equilateral-like triode with legs 120 degrees apart (rational
// approximation with exactly unit legs).
CarrierPtr make_triode_carrier_symmetric();
// Edge with the barycentric-Euclidean metric.
CarrierPtr make_edge_barycentric_carrier();

}  // namespace approxsat

#endif  // APPROXSAT_PLMAP_HPP
