// Symbolic layer: terms, equations, theories, interpretations, and the
// theory-level combinators (product and n-th power theories) together with
// the syntactic decision procedures (undemanding check, bounded Abelian
// search).
#ifndef APPROXSAT_THEORY_HPP
#define APPROXSAT_THEORY_HPP

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace approxsat {

// ---------------------------------------------------------------------------
// Domain types

struct OpSymbol {
  std::string name;
  int arity = 0;  // arity 0 = constant symbol
};

struct SimilarityType {
  std::vector<OpSymbol> symbols;

  bool has(const std::string& name) const;
  int arity_of(const std::string& name) const;  // throws if missing
  void declare(const std::string& name, int arity);
};

class Term {
 public:
  Term() = default;
  static Term var(int index);
  static Term apply(std::string symbol, std::vector<Term> args = {});

  bool is_var() const { return var_ >= 0; }
  int var_index() const { return var_; }
  const std::string& symbol() const { return sym_; }
  const std::vector<Term>& args() const { return args_; }

  bool operator==(const Term& o) const;
  bool operator!=(const Term& o) const { return !(*this == o); }
  bool operator<(const Term& o) const;  // arbitrary total order, for sets

  // Indices of variables occurring in the term, sorted ascending.
  std::vector<int> variables() const;
  int max_var_index() const;  // -1 when no variables

  std::string to_string() const;

 private:
  int var_ = -1;
  std::string sym_;
  std::vector<Term> args_;
};

struct Equation {
  Term lhs;
  Term rhs;
  bool operator==(const Equation& o) const { return lhs == o.lhs && rhs == o.rhs; }
  std::string to_string() const;
};

struct Theory {
  SimilarityType type;
  std::vector<Equation> equations;  // ordered list; duplicates permitted
};

// Assignment of a target-type term alpha_t to each source symbol; the term
// for an n-ary symbol may use only the variables x1..xn.
struct Interpretation {
  SimilarityType source;
  SimilarityType target;
  std::map<std::string, Term> assignment;

  void validate() const;  // throws std::invalid_argument on a bad assignment
};

// ---------------------------------------------------------------------------
// Parsing / printing

struct ParseError : std::runtime_error {
  int line;
  int column;
  ParseError(const std::string& msg, int line_, int col_)
      : std::runtime_error(msg + " at line " + std::to_string(line_) + ", column " +
                           std::to_string(col_)),
        line(line_),
        column(col_) {}
};

// Theory DSL:  decl*: "F:2;"  then equations: "F(x1,x2)=x2;".  Variables are
// x0, x1, ...; constants may be written bare; '#' starts a line comment.
Theory parse_theory(const std::string& text);
std::string format_theory(const Theory& theory);

// ---------------------------------------------------------------------------
// Operations

int term_depth(const Term& t);

// Simultaneous-substitution transform of t under the interpretation:
// variables are fixed, F(args...) becomes alpha_F with the transformed
// arguments substituted for x1..xn.
Term star_transform(const Term& t, const Interpretation& interp);

// True iff every translated equation of gamma is literally a member of
// sigma (syntactic term equality).
bool check_interpretation(const Theory& gamma, const Interpretation& interp,
                          const Theory& sigma);

// Product theory over disjoint symbol sets; adds the binary pairing symbol
// "p" plus the idempotence, rectangle, pairing-recursion, distribution and
// projected-equation groups.  All symbols must have arity >= 1.
Theory product_theory(const Theory& gamma, const Theory& delta);

// n-th power theory: sigma plus the shuffle axioms for new symbols d
// (arity n) and g (unary).  sigma must not use "d" or "g".
Theory power_theory(const Theory& sigma, int n);

// False iff some equation is x_i = x_j with i != j (syntactic surrogate).
bool is_syntactically_consistent(const Theory& sigma);

// Exact decision of the trite-model criterion: does some assignment of each
// symbol to a projection or an abstract constant make every equation hold
// identically (on models with more than one element)?
bool is_undemanding(const Theory& sigma);

struct AbelianWitness {
  // For each symbol, the integer coefficient vector (m_1..m_n); constants
  // get a single integer value.
  std::map<std::string, std::vector<long>> coefficients;
};

struct AbelianResult {
  bool yes = false;
  std::optional<AbelianWitness> witness;  // set when yes
};

// Bounded search for a linear-form model on Z with all |m_i| <= bound.
// A negative answer means "no witness within the bound" (semi-decision).
AbelianResult is_abelian_bounded(const Theory& sigma, long bound);

// Helpers shared with other modules / tests.
Term substitute_vars(const Term& t, const std::map<int, Term>& subst);

}  // namespace approxsat

#endif  // APPROXSAT_THEORY_HPP
