// Certified sup-distance evaluation (branch-and-bound with per-variable
// Lipschitz sensitivities plus exact fast paths), the (M,N)-simplicial
// decision procedure, the enumeration streams, and the algebra
// constructors that carry certified bounds.
#ifndef APPROXSAT_LAMBDA_HPP
#define APPROXSAT_LAMBDA_HPP

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "approxsat/plmap.hpp"

namespace approxsat {

// ---------------------------------------------------------------------------
// Certified sup enclosures

struct SupInterval {
  Rat lo = Rat(0);
  Rat hi = Rat(0);
  bool exact = false;   // produced by an exact path (width may still be > 0
                        // when the value is an irrational square root)
  bool capped = false;  // iteration budget hit; enclosure still certified
  long cells = 0;       // branch-and-bound cells explored

  Interval interval() const { return Interval(lo, hi); }
};

struct BnbOptions {
  long max_iterations = 200000;
  // Optional early stops for decision procedures.
  std::optional<Rat> stop_lo_above;  // return once lo > this (certified)
  std::optional<Rat> stop_hi_below;  // return once hi < this (certified)
};

SupInterval sup_equation(const Algebra& a, const Equation& e, const Rat& tol,
                         const BnbOptions& opts = {});
SupInterval lambda_algebra(const Algebra& a, const Theory& sigma, const Rat& tol,
                           const BnbOptions& opts = {});
// sup over |K|^n of d(f(x), g(x)) for same-arity operations.
SupInterval sup_op_distance(const Operation& f, const Operation& g, const Rat& tol,
                            const BnbOptions& opts = {});

// ---------------------------------------------------------------------------
// Decision procedure (all (M,N)-simplicial tuples)

struct Decision {
  enum class Verdict { Yes, No, Undecided };
  Verdict verdict = Verdict::Undecided;
  std::optional<Algebra> witness;                       // Yes only
  std::vector<std::vector<VertexId>> witness_maps;      // per symbol, Yes only
  long witness_index = -1;
  long straddling = 0;        // tuples whose certified interval straddles q
  Rat gap = Rat(0);           // largest unresolved interval width at q
  long tuples_total = 0;
  long tuples_examined = 0;
  bool budget_exhausted = false;
  long cells = 0;
};

struct DecideOptions {
  long max_tuples = -1;       // -1: no cap
  long bnb_iterations = 50000;
  int threads = 1;
};

Decision decide_within(const CarrierPtr& k, const Theory& sigma, int M, int N,
                       const Rat& q, const Rat& tol, const DecideOptions& opts = {});

// ---------------------------------------------------------------------------
// Enumeration streams

struct Sextuple {
  std::string complex_name;
  int M = 0, N = 0;
  long r = 1, s = 1;
  Theory sigma;
  std::string theory_text;  // canonical DSL spelling
};

struct StreamOptions {
  long budget = 1000;        // number of candidate sextuples examined
  long max_tuples = 256;     // per decide call
  long bnb_iterations = 2000;
  int threads = 1;
};

// Names of the seed complex family, with their carriers.
const std::vector<std::pair<std::string, CarrierPtr>>& seed_family();

std::vector<Sextuple> stream_B(const StreamOptions& opts);
std::vector<Theory> stream_E(const std::string& complex_name, const Rat& alpha,
                             const StreamOptions& opts);
std::vector<std::pair<Theory, long>> stream_F(const std::string& complex_name,
                                              const StreamOptions& opts);

// ---------------------------------------------------------------------------
// Algebra constructors with certified bounds

struct CertifiedAlgebra {
  Algebra algebra;
  Rat bound_hi = Rat(0);   // certified: lambda_algebra(sigma) <= bound_hi
  std::string derivation;  // how the bound was obtained
};

CertifiedAlgebra constant_algebra(const CarrierPtr& k, const Theory& sigma,
                                  const Point& center);

// New operations F(a...) = F_B(psi(a)...); bound_hi grows by k_disp.
// psi must fix its image (idempotence is sampled; exact for our uses).
CertifiedAlgebra retraction_transfer(const CertifiedAlgebra& b_alg, const OpPtr& psi,
                                     const Rat& k_disp, int samples = 200,
                                     unsigned seed = 1);

// Monotone piecewise-linear modulus given by breakpoints; evaluated exactly,
// extended by the boundary slopes outside the breakpoint range.
struct PLFunction {
  std::vector<std::pair<Rat, Rat>> points;  // strictly increasing x, nondecreasing y
  Rat operator()(const Rat& x) const;
};

// Conjugated algebra F'(a...) = gamma(F(gamma_inv(a)...)); bound_hi becomes
// phi(bound_hi).  gamma_inv o gamma = id is verified by sampling.
CertifiedAlgebra conjugate(const CertifiedAlgebra& a, const OpPtr& gamma,
                           const OpPtr& gamma_inv, const PLFunction& phi,
                           int samples = 200, unsigned seed = 1);

// Componentwise product algebra on X x Y for product_theory(gamma, delta);
// the certified bound combines the factor bounds by the chosen metric.
struct ProductAlgebraResult {
  CertifiedAlgebra certified;
  CarrierPtr carrier;  // the product carrier
  std::shared_ptr<const ProductComplex> product;
};
ProductAlgebraResult product_algebra(const CertifiedAlgebra& a_gamma, const Theory& gamma,
                                     const CertifiedAlgebra& b_delta, const Theory& delta,
                                     Combiner metric_choice);

// First-projection variant: gamma-operations kept on X, delta-operations and
// the pairing interpreted as first projections; the bound is unchanged.
CertifiedAlgebra product_algebra_projection(const CertifiedAlgebra& a_gamma,
                                            const Theory& gamma, const Theory& delta);

// Shuffle-power algebra on K^n for power_theory(sigma, n).
struct ShufflePowerResult {
  CertifiedAlgebra certified;
  CarrierPtr carrier;
};
ShufflePowerResult shuffle_power_algebra(const CertifiedAlgebra& a, const Theory& sigma,
                                         int n);

// Sampled-satisfaction report for the restriction to R_a (or L_a).
struct RestrictReport {
  Rat max_violation_hi = Rat(0);  // upper bound over all samples/equations
  long samples = 0;
};
RestrictReport restrict_Ra(const Algebra& a, const Theory& gamma, const Point& anchor,
                           bool right_side, int samples, unsigned seed = 1);

// ---------------------------------------------------------------------------
// Sampling helpers (deterministic in the seed)

Point random_point(const Carrier& carrier, std::mt19937_64& rng);
OpPtr make_identity_op(const CarrierPtr& carrier);

}  // namespace approxsat

#endif  // APPROXSAT_LAMBDA_HPP
