#pragma once

// Affine chart rings over F_p: multivariate polynomials with optional
// Laurent variables, formal derivations, decomposition over the p^N-power
// subring, and the Cartier operator on univariate 1-forms.

#include <frobstruct/arith.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace frobstruct {

using MultiIndex = std::vector<std::int64_t>;

struct ChartMismatch : std::runtime_error {
  explicit ChartMismatch(const std::string& msg) : std::runtime_error(msg) {}
};
struct LaurentNotSupported : std::runtime_error {
  explicit LaurentNotSupported(const std::string& msg)
      : std::runtime_error(msg) {}
};
struct MultivariateNotSupported : std::runtime_error {
  explicit MultivariateNotSupported(const std::string& msg)
      : std::runtime_error(msg) {}
};
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// A coordinate chart: the prime, an ordered list of variable names, and a
// per-variable flag saying whether negative exponents are allowed.
class Chart {
 public:
  Chart(FpConfig field, std::vector<std::string> vars,
        std::vector<bool> laurent = {})
      : field_(field), vars_(std::move(vars)), laurent_(std::move(laurent)) {
    if (vars_.empty())
      throw std::invalid_argument("Chart: need at least one variable");
    if (laurent_.empty()) laurent_.assign(vars_.size(), false);
    if (laurent_.size() != vars_.size())
      throw std::invalid_argument("Chart: laurent flag count mismatch");
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      if (vars_[i].empty())
        throw std::invalid_argument("Chart: empty variable name");
      for (std::size_t j = i + 1; j < vars_.size(); ++j)
        if (vars_[i] == vars_[j])
          throw std::invalid_argument("Chart: duplicate variable " + vars_[i]);
    }
  }

  const FpConfig& field() const { return field_; }
  std::int64_t p() const { return field_.p(); }
  std::size_t dim() const { return vars_.size(); }
  const std::vector<std::string>& vars() const { return vars_; }
  const std::string& var_name(std::size_t i) const { return vars_.at(i); }
  bool laurent(std::size_t i) const { return laurent_.at(i); }
  const std::vector<bool>& laurent_flags() const { return laurent_; }

  std::optional<std::size_t> var_index(std::string_view name) const {
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i] == name) return i;
    return std::nullopt;
  }

  bool operator==(const Chart&) const = default;

 private:
  FpConfig field_;
  std::vector<std::string> vars_;
  std::vector<bool> laurent_;
};

using ChartPtr = std::shared_ptr<const Chart>;

inline ChartPtr make_chart(std::int64_t p, std::vector<std::string> vars,
                           std::vector<bool> laurent = {}) {
  return std::make_shared<const Chart>(FpConfig(p), std::move(vars),
                                       std::move(laurent));
}

inline void require_same_chart(const ChartPtr& a, const ChartPtr& b) {
  if (!(*a == *b)) throw ChartMismatch("operands live on different charts");
}

// An element of the chart ring: a finite exponent-vector to coefficient map.
// Coefficients are nonzero and reduced; exponents may be negative only in
// Laurent variables.
class RingElem {
 public:
  explicit RingElem(ChartPtr chart) : chart_(std::move(chart)) {
    if (!chart_) throw std::invalid_argument("RingElem: null chart");
  }

  static RingElem zero(const ChartPtr& c) { return RingElem(c); }

  static RingElem constant(const ChartPtr& c, std::int64_t v) {
    RingElem r(c);
    r.add_term(MultiIndex(c->dim(), 0), v);
    return r;
  }

  static RingElem one(const ChartPtr& c) { return constant(c, 1); }

  static RingElem monomial(const ChartPtr& c, MultiIndex e, std::int64_t v) {
    RingElem r(c);
    r.add_term(std::move(e), v);
    return r;
  }

  static RingElem variable(const ChartPtr& c, std::size_t i) {
    MultiIndex e(c->dim(), 0);
    e.at(i) = 1;
    return monomial(c, std::move(e), 1);
  }

  const ChartPtr& chart() const { return chart_; }
  const std::map<MultiIndex, std::int64_t>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  std::int64_t coeff(const MultiIndex& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? 0 : it->second;
  }

  bool is_constant() const {
    return terms_.empty() ||
           (terms_.size() == 1 && is_zero_index(terms_.begin()->first));
  }

  std::int64_t constant_value() const {
    if (terms_.empty()) return 0;
    if (!is_constant()) throw std::logic_error("RingElem: not a constant");
    return terms_.begin()->second;
  }

  // A unit of the chart ring is a single monomial supported on Laurent
  // variables only (in particular a nonzero constant).
  bool is_unit() const {
    if (terms_.size() != 1) return false;
    const MultiIndex& e = terms_.begin()->first;
    for (std::size_t i = 0; i < e.size(); ++i)
      if (e[i] != 0 && !chart_->laurent(i)) return false;
    return true;
  }

  RingElem inverse() const {
    if (!is_unit()) throw std::domain_error("RingElem: not a unit");
    MultiIndex e = terms_.begin()->first;
    for (auto& x : e) x = -x;
    return monomial(chart_, std::move(e),
                    chart_->field().inv(terms_.begin()->second));
  }

  std::int64_t min_exponent(std::size_t var) const {
    std::int64_t m = 0;
    bool first = true;
    for (const auto& [e, c] : terms_) {
      if (first || e.at(var) < m) m = e.at(var);
      first = false;
    }
    return m;
  }

  std::int64_t max_exponent(std::size_t var) const {
    std::int64_t m = 0;
    for (const auto& [e, c] : terms_) m = std::max(m, e.at(var));
    return m;
  }

  RingElem operator-() const {
    RingElem r(chart_);
    for (const auto& [e, c] : terms_)
      r.terms_.emplace(e, chart_->field().neg(c));
    return r;
  }

  RingElem& operator+=(const RingElem& o) {
    require_same_chart(chart_, o.chart_);
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }

  RingElem& operator-=(const RingElem& o) {
    require_same_chart(chart_, o.chart_);
    for (const auto& [e, c] : o.terms_) add_term(e, chart_->field().neg(c));
    return *this;
  }

  friend RingElem operator+(RingElem a, const RingElem& b) { return a += b; }
  friend RingElem operator-(RingElem a, const RingElem& b) { return a -= b; }

  friend RingElem operator*(const RingElem& a, const RingElem& b) {
    require_same_chart(a.chart_, b.chart_);
    RingElem r(a.chart_);
    for (const auto& [ea, ca] : a.terms_) {
      for (const auto& [eb, cb] : b.terms_) {
        MultiIndex e(ea.size());
        for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
        r.add_term(std::move(e), a.chart_->field().mul(ca, cb));
      }
    }
    return r;
  }

  RingElem& operator*=(const RingElem& o) { return *this = *this * o; }

  RingElem scaled(std::int64_t s) const {
    RingElem r(chart_);
    const std::int64_t sr = chart_->field().reduce(s);
    if (sr == 0) return r;
    for (const auto& [e, c] : terms_)
      r.terms_.emplace(e, chart_->field().mul(c, sr));
    return r;
  }

  RingElem pow(std::int64_t e) const {
    if (e < 0) throw std::invalid_argument("RingElem::pow: negative power");
    RingElem acc = one(chart_);
    RingElem base = *this;
    while (e > 0) {
      if (e & 1) acc *= base;
      base = base * base;
      e >>= 1;
    }
    return acc;
  }

  bool operator==(const RingElem& o) const {
    return *chart_ == *o.chart_ && terms_ == o.terms_;
  }

  // Canonical text form: monomials in descending lexicographic exponent
  // order, coefficients already reduced into [0, p), so only '+' appears.
  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream out;
    bool first = true;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
      if (!first) out << " + ";
      first = false;
      const auto& [e, c] = *it;
      bool printed = false;
      if (c != 1 || is_zero_index(e)) {
        out << c;
        printed = true;
      }
      for (std::size_t i = 0; i < e.size(); ++i) {
        if (e[i] == 0) continue;
        if (printed) out << "*";
        out << chart_->var_name(i);
        if (e[i] != 1) out << "^" << e[i];
        printed = true;
      }
    }
    return out.str();
  }

  // Inserts v into the coefficient at exponent e, keeping the map reduced.
  void add_term(MultiIndex e, std::int64_t v) {
    if (e.size() != chart_->dim())
      throw std::invalid_argument("RingElem: exponent arity mismatch");
    for (std::size_t i = 0; i < e.size(); ++i)
      if (e[i] < 0 && !chart_->laurent(i))
        throw LaurentNotSupported("negative exponent in variable " +
                                  chart_->var_name(i));
    const std::int64_t vr = chart_->field().reduce(v);
    if (vr == 0) return;
    auto [it, inserted] = terms_.emplace(std::move(e), vr);
    if (!inserted) {
      it->second = chart_->field().add(it->second, vr);
      if (it->second == 0) terms_.erase(it);
    }
  }

 private:
  static bool is_zero_index(const MultiIndex& e) {
    return std::all_of(e.begin(), e.end(),
                       [](std::int64_t x) { return x == 0; });
  }

  ChartPtr chart_;
  std::map<MultiIndex, std::int64_t> terms_;
};

// Formal partial derivative with respect to the i-th variable. On a Laurent
// variable the power rule multiplies by the (possibly negative) exponent.
inline RingElem derive(const RingElem& f, std::size_t i) {
  RingElem r(f.chart());
  for (const auto& [e, c] : f.terms()) {
    const std::int64_t factor = f.chart()->field().reduce(e.at(i));
    if (factor == 0) continue;
    MultiIndex d = e;
    d[i] -= 1;
    r.add_term(std::move(d), f.chart()->field().mul(c, factor));
  }
  return r;
}

// Writes a polynomial as f = sum over residues alpha of g_alpha(x^{p^N}) x^alpha
// with 0 <= alpha_i < p^N. The returned parts are polynomials in the p^N-th
// power variables, stored through exponent division (the part's exponent
// vector e stands for x^{p^N * e}).
inline std::map<MultiIndex, RingElem> frobenius_decompose(const RingElem& f,
                                                          int N) {
  if (N < 1) throw std::invalid_argument("frobenius_decompose: N >= 1");
  const ChartPtr& c = f.chart();
  for (std::size_t i = 0; i < c->dim(); ++i)
    if (c->laurent(i))
      throw LaurentNotSupported(
          "frobenius_decompose needs a polynomial chart");
  const BigInt q = big_pow(c->p(), N);
  const std::int64_t qq = q.convert_to<std::int64_t>();
  std::map<MultiIndex, RingElem> parts;
  for (const auto& [e, coef] : f.terms()) {
    MultiIndex alpha(e.size()), quot(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
      alpha[i] = e[i] % qq;
      quot[i] = e[i] / qq;
    }
    auto it = parts.find(alpha);
    if (it == parts.end())
      it = parts.emplace(alpha, RingElem::zero(c)).first;
    it->second.add_term(std::move(quot), coef);
  }
  return parts;
}

// Inverse of frobenius_decompose: rebuilds sum g_alpha(x^{p^N}) x^alpha.
inline RingElem frobenius_reassemble(
    const ChartPtr& c, int N, const std::map<MultiIndex, RingElem>& parts) {
  const std::int64_t qq = big_pow(c->p(), N).convert_to<std::int64_t>();
  RingElem f = RingElem::zero(c);
  for (const auto& [alpha, g] : parts) {
    for (const auto& [e, coef] : g.terms()) {
      MultiIndex full(e.size());
      for (std::size_t i = 0; i < e.size(); ++i)
        full[i] = e[i] * qq + alpha.at(i);
      f.add_term(std::move(full), coef);
    }
  }
  return f;
}

// Copies an element termwise onto another chart with the same variable
// count. Every exponent is re-checked against the target's Laurent flags,
// so moving a genuinely Laurent element onto a polynomial chart throws.
inline RingElem transplant(const RingElem& f, const ChartPtr& target) {
  if (f.chart()->dim() != target->dim())
    throw ChartMismatch("transplant: variable counts differ");
  if (f.chart()->p() != target->p())
    throw ChartMismatch("transplant: characteristics differ");
  RingElem g = RingElem::zero(target);
  for (const auto& [e, coef] : f.terms()) g.add_term(e, coef);
  return g;
}

// A 1-form sum f_i dx_i with one component per chart variable.
class OneForm {
 public:
  explicit OneForm(ChartPtr chart)
      : chart_(std::move(chart)),
        comps_(chart_->dim(), RingElem::zero(chart_)) {}

  OneForm(ChartPtr chart, std::vector<RingElem> comps)
      : chart_(std::move(chart)), comps_(std::move(comps)) {
    if (comps_.size() != chart_->dim())
      throw std::invalid_argument("OneForm: component count mismatch");
    for (const auto& f : comps_) require_same_chart(chart_, f.chart());
  }

  static OneForm zero(const ChartPtr& c) { return OneForm(c); }

  // The total differential df.
  static OneForm d(const RingElem& f) {
    OneForm w(f.chart());
    for (std::size_t i = 0; i < f.chart()->dim(); ++i)
      w.comps_[i] = derive(f, i);
    return w;
  }

  const ChartPtr& chart() const { return chart_; }
  const RingElem& component(std::size_t i) const { return comps_.at(i); }
  bool is_zero() const {
    return std::all_of(comps_.begin(), comps_.end(),
                       [](const RingElem& f) { return f.is_zero(); });
  }

  friend OneForm operator+(const OneForm& a, const OneForm& b) {
    require_same_chart(a.chart_, b.chart_);
    OneForm r(a.chart_);
    for (std::size_t i = 0; i < r.comps_.size(); ++i)
      r.comps_[i] = a.comps_[i] + b.comps_[i];
    return r;
  }

  friend OneForm operator-(const OneForm& a, const OneForm& b) {
    require_same_chart(a.chart_, b.chart_);
    OneForm r(a.chart_);
    for (std::size_t i = 0; i < r.comps_.size(); ++i)
      r.comps_[i] = a.comps_[i] - b.comps_[i];
    return r;
  }

  friend OneForm operator*(const RingElem& f, const OneForm& w) {
    require_same_chart(f.chart(), w.chart_);
    OneForm r(w.chart_);
    for (std::size_t i = 0; i < r.comps_.size(); ++i)
      r.comps_[i] = f * w.comps_[i];
    return r;
  }

  bool operator==(const OneForm& o) const {
    return *chart_ == *o.chart_ && comps_ == o.comps_;
  }

  std::string to_string() const {
    std::ostringstream out;
    bool first = true;
    for (std::size_t i = 0; i < comps_.size(); ++i) {
      if (comps_[i].is_zero()) continue;
      if (!first) out << " + ";
      first = false;
      out << "(" << comps_[i].to_string() << ") d" << chart_->var_name(i);
    }
    if (first) out << "0";
    return out.str();
  }

 private:
  ChartPtr chart_;
  std::vector<RingElem> comps_;
};

// The Cartier operator on a univariate chart. On monomial forms it keeps
// exactly the residue class p-1 and divides the exponent shift by p:
// C(x^i dx) = x^{(i-p+1)/p} dx when i = p-1 mod p, and 0 otherwise. The base
// field is F_p, so coefficients pass through unchanged.
inline OneForm cartier(const OneForm& w) {
  const ChartPtr& c = w.chart();
  if (c->dim() != 1)
    throw MultivariateNotSupported("cartier needs a univariate chart");
  const std::int64_t p = c->p();
  RingElem out = RingElem::zero(c);
  for (const auto& [e, coef] : w.component(0).terms()) {
    const std::int64_t i = e[0];
    std::int64_t res = i % p;
    if (res < 0) res += p;
    if (res != p - 1) continue;
    out.add_term({(i - (p - 1)) / p}, coef);
  }
  return OneForm(c, {out});
}

inline bool cartier_invariant(const OneForm& w) { return cartier(w) == w; }

namespace detail {

struct PolyToken {
  enum Kind { kInt, kIdent, kSym, kEnd } kind;
  std::string text;
  std::int64_t value = 0;
};

inline std::vector<PolyToken> lex_poly(std::string_view src) {
  std::vector<PolyToken> out;
  std::size_t i = 0;
  while (i < src.size()) {
    const char ch = src[i];
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
      ++i;
      continue;
    }
    if (ch >= '0' && ch <= '9') {
      std::size_t j = i;
      while (j < src.size() && src[j] >= '0' && src[j] <= '9') ++j;
      std::int64_t v = 0;
      auto res = std::from_chars(src.data() + i, src.data() + j, v);
      if (res.ec != std::errc())
        throw ParseError("integer literal out of range");
      out.push_back({PolyToken::kInt, std::string(src.substr(i, j - i)), v});
      i = j;
      continue;
    }
    if ((ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || ch == '_') {
      std::size_t j = i;
      while (j < src.size() &&
             ((src[j] >= 'a' && src[j] <= 'z') ||
              (src[j] >= 'A' && src[j] <= 'Z') ||
              (src[j] >= '0' && src[j] <= '9') || src[j] == '_'))
        ++j;
      out.push_back({PolyToken::kIdent, std::string(src.substr(i, j - i))});
      i = j;
      continue;
    }
    if (ch == '+' || ch == '-' || ch == '*' || ch == '^') {
      out.push_back({PolyToken::kSym, std::string(1, ch)});
      ++i;
      continue;
    }
    throw ParseError(std::string("unexpected character '") + ch +
                     "' in polynomial");
  }
  out.push_back({PolyToken::kEnd, ""});
  return out;
}

}  // namespace detail

// Parses the polynomial grammar used by the CLI: signed sums of terms, a
// term being '*'-separated integer and variable factors, variables may carry
// '^' with an optionally negative integer exponent. Example: "2*t^3 + t".
inline RingElem parse_poly(const ChartPtr& chart, std::string_view src) {
  const auto toks = detail::lex_poly(src);
  std::size_t pos = 0;
  RingElem result = RingElem::zero(chart);

  auto parse_term = [&](std::int64_t sign) {
    std::int64_t coeff = chart->field().reduce(sign);
    MultiIndex exps(chart->dim(), 0);
    bool expect_factor = true;
    while (true) {
      const detail::PolyToken& t = toks[pos];
      if (t.kind == detail::PolyToken::kInt) {
        coeff = chart->field().mul(coeff, chart->field().reduce(t.value));
        ++pos;
      } else if (t.kind == detail::PolyToken::kIdent) {
        auto vi = chart->var_index(t.text);
        if (!vi)
          throw ParseError("unknown variable '" + t.text + "' on this chart");
        ++pos;
        std::int64_t e = 1;
        if (toks[pos].kind == detail::PolyToken::kSym &&
            toks[pos].text == "^") {
          ++pos;
          std::int64_t esign = 1;
          if (toks[pos].kind == detail::PolyToken::kSym &&
              toks[pos].text == "-") {
            esign = -1;
            ++pos;
          }
          if (toks[pos].kind != detail::PolyToken::kInt)
            throw ParseError("expected integer exponent after '^'");
          e = esign * toks[pos].value;
          ++pos;
        }
        exps[*vi] += e;
      } else if (expect_factor) {
        throw ParseError("expected a coefficient or variable");
      }
      expect_factor = false;
      if (toks[pos].kind == detail::PolyToken::kSym && toks[pos].text == "*") {
        ++pos;
        expect_factor = true;
        continue;
      }
      break;
    }
    result.add_term(std::move(exps), coeff);
  };

  std::int64_t sign = 1;
  if (toks[pos].kind == detail::PolyToken::kSym &&
      (toks[pos].text == "+" || toks[pos].text == "-")) {
    sign = toks[pos].text == "-" ? -1 : 1;
    ++pos;
  }
  if (toks[pos].kind == detail::PolyToken::kEnd)
    throw ParseError("empty polynomial");
  while (true) {
    parse_term(sign);
    const detail::PolyToken& t = toks[pos];
    if (t.kind == detail::PolyToken::kEnd) break;
    if (t.kind == detail::PolyToken::kSym &&
        (t.text == "+" || t.text == "-")) {
      sign = t.text == "-" ? -1 : 1;
      ++pos;
      continue;
    }
    throw ParseError("expected '+', '-', or end of input near '" + t.text +
                     "'");
  }
  return result;
}

}  // namespace frobstruct
