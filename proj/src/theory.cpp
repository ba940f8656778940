#include "approxsat/theory.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>
#include <sstream>

namespace approxsat {

// ---------------------------------------------------------------------------
// SimilarityType

bool SimilarityType::has(const std::string& name) const {
  return std::any_of(symbols.begin(), symbols.end(),
                     [&](const OpSymbol& s) { return s.name == name; });
}

int SimilarityType::arity_of(const std::string& name) const {
  for (const auto& s : symbols)
    if (s.name == name) return s.arity;
  throw std::invalid_argument("undeclared symbol: " + name);
}

void SimilarityType::declare(const std::string& name, int arity) {
  if (has(name)) throw std::invalid_argument("duplicate symbol: " + name);
  if (arity < 0) throw std::invalid_argument("negative arity for " + name);
  symbols.push_back({name, arity});
}

// ---------------------------------------------------------------------------
// Term

Term Term::var(int index) {
  if (index < 0) throw std::invalid_argument("negative variable index");
  Term t;
  t.var_ = index;
  return t;
}

Term Term::apply(std::string symbol, std::vector<Term> args) {
  Term t;
  t.sym_ = std::move(symbol);
  t.args_ = std::move(args);
  return t;
}

bool Term::operator==(const Term& o) const {
  if (var_ != o.var_) return false;
  if (is_var()) return true;
  return sym_ == o.sym_ && args_ == o.args_;
}

bool Term::operator<(const Term& o) const {
  if (is_var() != o.is_var()) return is_var();
  if (is_var()) return var_ < o.var_;
  if (sym_ != o.sym_) return sym_ < o.sym_;
  return std::lexicographical_compare(args_.begin(), args_.end(), o.args_.begin(),
                                      o.args_.end());
}

static void collect_vars(const Term& t, std::set<int>& out) {
  if (t.is_var()) {
    out.insert(t.var_index());
    return;
  }
  for (const auto& a : t.args()) collect_vars(a, out);
}

std::vector<int> Term::variables() const {
  std::set<int> s;
  collect_vars(*this, s);
  return {s.begin(), s.end()};
}

int Term::max_var_index() const {
  auto vs = variables();
  return vs.empty() ? -1 : vs.back();
}

std::string Term::to_string() const {
  if (is_var()) return "x" + std::to_string(var_);
  if (args_.empty()) return sym_;
  std::string out = sym_ + "(";
  for (size_t i = 0; i < args_.size(); ++i) {
    if (i) out += ",";
    out += args_[i].to_string();
  }
  return out + ")";
}

std::string Equation::to_string() const {
  return lhs.to_string() + "=" + rhs.to_string();
}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Token {
  enum Kind { Ident, Nat, Punct, End } kind;
  std::string text;
  int line, col;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }
  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == '\n') {
        ++line_;
        col_ = 1;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++col_;
        ++pos_;
      } else {
        break;
      }
    }
    if (pos_ >= src_.size()) {
      tok_ = {Token::End, "", line_, col_};
      return;
    }
    char c = src_[pos_];
    int line = line_, col = col_;
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string n;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        n += src_[pos_++];
        ++col_;
      }
      tok_ = {Token::Nat, n, line, col};
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string id;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_' ||
              src_[pos_] == '\'')) {
        id += src_[pos_++];
        ++col_;
      }
      tok_ = {Token::Ident, id, line, col};
    } else if (std::string(":;,()=").find(c) != std::string::npos) {
      ++pos_;
      ++col_;
      tok_ = {Token::Punct, std::string(1, c), line, col};
    } else {
      throw ParseError(std::string("unexpected character '") + c + "'", line, col);
    }
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

// "x" followed only by digits denotes a variable.
std::optional<int> variable_index(const std::string& ident) {
  if (ident.size() < 2 || ident[0] != 'x') return std::nullopt;
  for (size_t i = 1; i < ident.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(ident[i]))) return std::nullopt;
  return std::stoi(ident.substr(1));
}

class Parser {
 public:
  explicit Parser(const std::string& src) : lex_(src) {}

  Theory run() {
    Theory th;
    // Declarations first.
    while (lex_.peek().kind == Token::Ident) {
      // Lookahead: IDENT ':' starts a declaration, otherwise equations begin.
      Token id = lex_.peek();
      if (!is_decl_start(id)) break;
      lex_.take();
      expect_punct(":");
      Token nat = lex_.take();
      if (nat.kind != Token::Nat)
        throw ParseError("expected arity after ':'", nat.line, nat.col);
      if (variable_index(id.text))
        throw ParseError("symbol name '" + id.text + "' is reserved for variables", id.line,
                         id.col);
      if (th.type.has(id.text))
        throw ParseError("duplicate symbol '" + id.text + "'", id.line, id.col);
      th.type.declare(id.text, std::stoi(nat.text));
      expect_punct(";");
    }
    while (lex_.peek().kind != Token::End) {
      Term lhs = parse_term(th.type);
      expect_punct("=");
      Term rhs = parse_term(th.type);
      expect_punct(";");
      th.equations.push_back({lhs, rhs});
    }
    return th;
  }

 private:
  bool is_decl_start(const Token&) {
    // Peek past the identifier without consuming: simplest is to copy the
    // lexer state; the grammar is LL(2) only at this point.
    Lexer copy = lex_;
    copy.take();
    return copy.peek().kind == Token::Punct && copy.peek().text == ":";
  }

  void expect_punct(const std::string& p) {
    Token t = lex_.take();
    if (t.kind != Token::Punct || t.text != p)
      throw ParseError("expected '" + p + "'", t.line, t.col);
  }

  Term parse_term(const SimilarityType& type) {
    Token t = lex_.take();
    if (t.kind != Token::Ident) throw ParseError("expected term", t.line, t.col);
    if (auto vi = variable_index(t.text)) return Term::var(*vi);
    if (!type.has(t.text))
      throw ParseError("undeclared symbol '" + t.text + "'", t.line, t.col);
    int arity = type.arity_of(t.text);
    std::vector<Term> args;
    if (lex_.peek().kind == Token::Punct && lex_.peek().text == "(") {
      lex_.take();
      if (!(lex_.peek().kind == Token::Punct && lex_.peek().text == ")")) {
        args.push_back(parse_term(type));
        while (lex_.peek().kind == Token::Punct && lex_.peek().text == ",") {
          lex_.take();
          args.push_back(parse_term(type));
        }
      }
      expect_punct(")");
    }
    if (static_cast<int>(args.size()) != arity)
      throw ParseError("arity mismatch for '" + t.text + "': declared " +
                           std::to_string(arity) + ", got " + std::to_string(args.size()),
                       t.line, t.col);
    return Term::apply(t.text, std::move(args));
  }

  Lexer lex_;
};

void check_term_symbols(const Term& t, const SimilarityType& type) {
  if (t.is_var()) return;
  if (!type.has(t.symbol()))
    throw std::invalid_argument("undeclared symbol: " + t.symbol());
  if (static_cast<int>(t.args().size()) != type.arity_of(t.symbol()))
    throw std::invalid_argument("arity mismatch for " + t.symbol());
  for (const auto& a : t.args()) check_term_symbols(a, type);
}

}  // namespace

Theory parse_theory(const std::string& text) { return Parser(text).run(); }

std::string format_theory(const Theory& theory) {
  std::ostringstream out;
  for (const auto& s : theory.type.symbols) out << s.name << ":" << s.arity << "; ";
  for (const auto& e : theory.equations) out << e.to_string() << "; ";
  std::string s = out.str();
  if (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

// ---------------------------------------------------------------------------
// Interpretation

void Interpretation::validate() const {
  for (const auto& s : source.symbols) {
    auto it = assignment.find(s.name);
    if (it == assignment.end())
      throw std::invalid_argument("no interpreting term for " + s.name);
    check_term_symbols(it->second, target);
    for (int v : it->second.variables())
      if (v < 1 || v > s.arity)
        throw std::invalid_argument("interpreting term for " + s.name +
                                    " uses variable outside x1..xn");
  }
}

// ---------------------------------------------------------------------------
// Operations

int term_depth(const Term& t) {
  if (t.is_var()) return 0;
  int m = 0;
  for (const auto& a : t.args()) m = std::max(m, term_depth(a));
  return 1 + m;
}

Term substitute_vars(const Term& t, const std::map<int, Term>& subst) {
  if (t.is_var()) {
    auto it = subst.find(t.var_index());
    return it == subst.end() ? t : it->second;
  }
  std::vector<Term> args;
  args.reserve(t.args().size());
  for (const auto& a : t.args()) args.push_back(substitute_vars(a, subst));
  return Term::apply(t.symbol(), std::move(args));
}

Term star_transform(const Term& t, const Interpretation& interp) {
  if (t.is_var()) return t;
  auto it = interp.assignment.find(t.symbol());
  if (it == interp.assignment.end())
    throw std::invalid_argument("symbol missing from interpretation: " + t.symbol());
  std::map<int, Term> subst;
  for (size_t i = 0; i < t.args().size(); ++i)
    subst[static_cast<int>(i) + 1] = star_transform(t.args()[i], interp);
  return substitute_vars(it->second, subst);
}

bool check_interpretation(const Theory& gamma, const Interpretation& interp,
                          const Theory& sigma) {
  for (const auto& eq : gamma.equations) {
    Equation translated{star_transform(eq.lhs, interp), star_transform(eq.rhs, interp)};
    bool member = std::any_of(sigma.equations.begin(), sigma.equations.end(),
                              [&](const Equation& e) { return e == translated; });
    if (!member) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Product theory

namespace {

Term generic_application(const OpSymbol& s) {
  std::vector<Term> args;
  for (int i = 1; i <= s.arity; ++i) args.push_back(Term::var(i));
  return Term::apply(s.name, std::move(args));
}

// tau^R = p(F(tau_1^R, ...), y) / p(x_i, y); dually for tau^L.
Term pair_rec(const Term& tau, int y, bool right) {
  auto wrap = [&](Term inner) {
    return right ? Term::apply("p", {std::move(inner), Term::var(y)})
                 : Term::apply("p", {Term::var(y), std::move(inner)});
  };
  if (tau.is_var()) return wrap(tau);
  std::vector<Term> args;
  for (const auto& a : tau.args()) args.push_back(pair_rec(a, y, right));
  return wrap(Term::apply(tau.symbol(), std::move(args)));
}

std::vector<Term> distinct_sides(const std::vector<Equation>& eqs) {
  std::vector<Term> out;
  auto push = [&](const Term& t) {
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  };
  for (const auto& e : eqs) {
    push(e.lhs);
    push(e.rhs);
  }
  return out;
}

}  // namespace

Theory product_theory(const Theory& gamma, const Theory& delta) {
  for (const auto& s : gamma.type.symbols)
    if (delta.type.has(s.name))
      throw std::invalid_argument("symbol-name collision: " + s.name);
  if (gamma.type.has("p") || delta.type.has("p"))
    throw std::invalid_argument("symbol 'p' already used");
  for (const auto& s : gamma.type.symbols)
    if (s.arity < 1) throw std::invalid_argument("product_theory requires arity >= 1: " + s.name);
  for (const auto& s : delta.type.symbols)
    if (s.arity < 1) throw std::invalid_argument("product_theory requires arity >= 1: " + s.name);

  Theory out;
  for (const auto& s : gamma.type.symbols) out.type.declare(s.name, s.arity);
  for (const auto& s : delta.type.symbols) out.type.declare(s.name, s.arity);
  out.type.declare("p", 2);

  // Augment each factor with the other factor's symbols as first projections.
  std::vector<Equation> aug_gamma = gamma.equations;
  for (const auto& s : delta.type.symbols)
    aug_gamma.push_back({generic_application(s), Term::var(1)});
  std::vector<Equation> aug_delta = delta.equations;
  for (const auto& s : gamma.type.symbols)
    aug_delta.push_back({generic_application(s), Term::var(1)});

  auto& eqs = out.equations;
  // Idempotence and the rectangle law.
  eqs.push_back({Term::apply("p", {Term::var(1), Term::var(1)}), Term::var(1)});
  eqs.push_back({Term::apply("p", {Term::apply("p", {Term::var(1), Term::var(2)}),
                                   Term::apply("p", {Term::var(3), Term::var(4)})}),
                 Term::apply("p", {Term::var(1), Term::var(4)})});

  // Pairing recursion, instantiated for the variable x1 and one generic
  // application per factor symbol.
  std::vector<Term> rec_instances = {Term::var(1)};
  for (const auto& s : gamma.type.symbols) rec_instances.push_back(generic_application(s));
  for (const auto& s : delta.type.symbols) rec_instances.push_back(generic_application(s));
  for (const auto& tau : rec_instances) {
    int y = tau.max_var_index() + 1;
    if (y < 1) y = 1;
    eqs.push_back({pair_rec(tau, y, true),
                   Term::apply("p", {tau, Term::var(y)})});
    eqs.push_back({pair_rec(tau, y, false),
                   Term::apply("p", {Term::var(y), tau})});
  }

  // Distribution scheme over the sides occurring in the augmented theories.
  std::vector<Equation> joined = aug_gamma;
  for (const auto& e : aug_delta) {
    if (std::find(joined.begin(), joined.end(), e) == joined.end()) joined.push_back(e);
  }
  for (const auto& tau : distinct_sides(joined)) {
    int shift = tau.max_var_index() + 1;
    if (shift < 1) shift = 1;
    std::map<int, Term> paired, second;
    for (int v : tau.variables()) {
      paired[v] = Term::apply("p", {Term::var(v), Term::var(v + shift)});
      second[v] = Term::var(v + shift);
    }
    eqs.push_back({substitute_vars(tau, paired),
                   Term::apply("p", {tau, substitute_vars(tau, second)})});
  }

  // Projected equations.
  for (const auto& e : aug_gamma) {
    int x = std::max(e.lhs.max_var_index(), e.rhs.max_var_index()) + 1;
    if (x < 1) x = 1;
    eqs.push_back({Term::apply("p", {e.lhs, Term::var(x)}),
                   Term::apply("p", {e.rhs, Term::var(x)})});
  }
  for (const auto& e : aug_delta) {
    int x = std::max(e.lhs.max_var_index(), e.rhs.max_var_index()) + 1;
    if (x < 1) x = 1;
    eqs.push_back({Term::apply("p", {Term::var(x), e.lhs}),
                   Term::apply("p", {Term::var(x), e.rhs})});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Power theory

Theory power_theory(const Theory& sigma, int n) {
  if (n < 1) throw std::invalid_argument("power_theory: n must be >= 1");
  if (sigma.type.has("d") || sigma.type.has("g"))
    throw std::invalid_argument("power_theory: type must not contain 'd' or 'g'");

  Theory out;
  out.type = sigma.type;
  out.type.declare("d", n);
  out.type.declare("g", 1);
  out.equations = sigma.equations;  // sigma is kept verbatim as a prefix
  auto& eqs = out.equations;

  auto g_of = [](Term t) { return Term::apply("g", {std::move(t)}); };
  auto d_of = [](std::vector<Term> ts) { return Term::apply("d", std::move(ts)); };

  // g^n(x1) = x1
  Term gn = Term::var(1);
  for (int i = 0; i < n; ++i) gn = g_of(gn);
  eqs.push_back({gn, Term::var(1)});

  // d(x1,...,x1) = x1
  eqs.push_back({d_of(std::vector<Term>(n, Term::var(1))), Term::var(1)});

  // d(g(x1),...,g(xn)) = g(d(x2,...,xn,x1))
  {
    std::vector<Term> lhs_args, rhs_args;
    for (int i = 1; i <= n; ++i) lhs_args.push_back(g_of(Term::var(i)));
    for (int i = 2; i <= n; ++i) rhs_args.push_back(Term::var(i));
    rhs_args.push_back(Term::var(1));
    eqs.push_back({d_of(std::move(lhs_args)), g_of(d_of(std::move(rhs_args)))});
  }

  // d(d(x11..x1n),...,d(xn1..xnn)) = d(x11,x22,...,xnn); x_ij is flattened to
  // index (i-1)*n + j.
  {
    auto xv = [&](int i, int j) { return Term::var((i - 1) * n + j); };
    std::vector<Term> rows, diag;
    for (int i = 1; i <= n; ++i) {
      std::vector<Term> row;
      for (int j = 1; j <= n; ++j) row.push_back(xv(i, j));
      rows.push_back(d_of(std::move(row)));
      diag.push_back(xv(i, i));
    }
    eqs.push_back({d_of(std::move(rows)), d_of(std::move(diag))});
  }

  // Per-symbol schemes.
  for (const auto& s : sigma.type.symbols) {
    int m = s.arity;
    {
      std::vector<Term> lhs_args, inner;
      for (int i = 1; i <= m; ++i) {
        lhs_args.push_back(g_of(Term::var(i)));
        inner.push_back(Term::var(i));
      }
      eqs.push_back({Term::apply(s.name, std::move(lhs_args)),
                     g_of(Term::apply(s.name, std::move(inner)))});
    }
    {
      auto xv = [&](int i, int j) { return Term::var((i - 1) * n + j); };
      std::vector<Term> lhs_args;
      for (int i = 1; i <= m; ++i) {
        std::vector<Term> row;
        for (int j = 1; j <= n; ++j) row.push_back(xv(i, j));
        lhs_args.push_back(d_of(std::move(row)));
      }
      std::vector<Term> cols;
      for (int j = 1; j <= n; ++j) {
        std::vector<Term> col;
        for (int i = 1; i <= m; ++i) col.push_back(xv(i, j));
        cols.push_back(Term::apply(s.name, std::move(col)));
      }
      eqs.push_back({Term::apply(s.name, std::move(lhs_args)), d_of(std::move(cols))});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Syntactic consistency / undemanding / Abelian

bool is_syntactically_consistent(const Theory& sigma) {
  for (const auto& e : sigma.equations)
    if (e.lhs.is_var() && e.rhs.is_var() && e.lhs.var_index() != e.rhs.var_index())
      return false;
  return true;
}

namespace {

// Value of a term under a trite assignment: a variable index, or an abstract
// constant tag (the index of the symbol whose constant absorbed the term).
struct TriteValue {
  bool is_var;
  int id;  // variable index or symbol tag
  bool operator==(const TriteValue& o) const { return is_var == o.is_var && id == o.id; }
};

// choice[s] in [0, arity): projection onto that argument; == arity: constant.
std::optional<TriteValue> trite_eval(const Term& t,
                                     const std::map<std::string, int>& choice,
                                     const std::map<std::string, int>& tag_of) {
  if (t.is_var()) return TriteValue{true, t.var_index()};
  int c = choice.at(t.symbol());
  if (c == static_cast<int>(t.args().size())) return TriteValue{false, tag_of.at(t.symbol())};
  return trite_eval(t.args()[c], choice, tag_of);
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

bool is_undemanding(const Theory& sigma) {
  const auto& syms = sigma.type.symbols;
  std::map<std::string, int> tag_of;
  for (size_t i = 0; i < syms.size(); ++i) tag_of[syms[i].name] = static_cast<int>(i);

  // Odometer over assignments: each symbol has arity+1 choices (projections
  // then the constant).
  std::vector<int> choice(syms.size(), 0);
  auto advance = [&]() {
    for (size_t i = 0; i < syms.size(); ++i) {
      if (++choice[i] <= syms[i].arity) return true;
      choice[i] = 0;
    }
    return false;
  };

  do {
    std::map<std::string, int> ch;
    for (size_t i = 0; i < syms.size(); ++i) ch[syms[i].name] = choice[i];
    UnionFind uf(static_cast<int>(syms.size()));
    bool ok = true;
    for (const auto& e : sigma.equations) {
      auto l = trite_eval(e.lhs, ch, tag_of);
      auto r = trite_eval(e.rhs, ch, tag_of);
      if (!l || !r) {
        ok = false;
        break;
      }
      if (l->is_var && r->is_var) {
        if (l->id != r->id) {
          ok = false;
          break;
        }
      } else if (!l->is_var && !r->is_var) {
        uf.unite(l->id, r->id);
      } else {
        // A constant can never equal an arbitrary variable on a model with
        // more than one element.
        ok = false;
        break;
      }
    }
    if (ok) return true;
  } while (!syms.empty() && advance());
  return false;
}

namespace {

// Linear form c0 + sum_i c_i * x_i with integer coefficients.
struct LinForm {
  long c0 = 0;
  std::map<int, long> coeff;
  bool operator==(const LinForm& o) const { return c0 == o.c0 && coeff == o.coeff; }
};

LinForm lin_eval(const Term& t, const std::map<std::string, std::vector<long>>& assign) {
  if (t.is_var()) {
    LinForm f;
    f.coeff[t.var_index()] = 1;
    return f;
  }
  const auto& ms = assign.at(t.symbol());
  LinForm out;
  if (t.args().empty()) {
    out.c0 = ms.at(0);  // constant symbol: single unknown value
    return out;
  }
  for (size_t i = 0; i < t.args().size(); ++i) {
    LinForm a = lin_eval(t.args()[i], assign);
    long m = ms.at(i);
    out.c0 += m * a.c0;
    for (auto& [v, c] : a.coeff) out.coeff[v] += m * c;
  }
  std::erase_if(out.coeff, [](const auto& kv) { return kv.second == 0; });
  return out;
}

}  // namespace

AbelianResult is_abelian_bounded(const Theory& sigma, long bound) {
  if (bound < 0) throw std::invalid_argument("is_abelian_bounded: bound must be >= 0");
  const auto& syms = sigma.type.symbols;
  // Total number of integer unknowns (constants contribute one each).
  std::vector<int> widths;
  for (const auto& s : syms) widths.push_back(std::max(1, s.arity));

  std::vector<std::vector<long>> vals(syms.size());
  for (size_t i = 0; i < syms.size(); ++i) vals[i].assign(widths[i], -bound);

  auto advance = [&]() {
    for (size_t i = 0; i < syms.size(); ++i) {
      for (auto& v : vals[i]) {
        if (++v <= bound) return true;
        v = -bound;
      }
    }
    return false;
  };

  do {
    std::map<std::string, std::vector<long>> assign;
    for (size_t i = 0; i < syms.size(); ++i) assign[syms[i].name] = vals[i];
    bool ok = true;
    for (const auto& e : sigma.equations) {
      if (!(lin_eval(e.lhs, assign) == lin_eval(e.rhs, assign))) {
        ok = false;
        break;
      }
    }
    if (ok) {
      AbelianWitness w;
      for (size_t i = 0; i < syms.size(); ++i) w.coefficients[syms[i].name] = vals[i];
      return {true, w};
    }
  } while (!syms.empty() && advance());

  if (syms.empty()) {
    // No symbols: equations are between variables; linear identity check.
    for (const auto& e : sigma.equations) {
      std::map<std::string, std::vector<long>> empty;
      if (!(lin_eval(e.lhs, empty) == lin_eval(e.rhs, empty))) return {false, std::nullopt};
    }
    return {true, AbelianWitness{}};
  }
  return {false, std::nullopt};
}

}  // namespace approxsat
