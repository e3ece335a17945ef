#pragma once

// The ring of level-m differential operators on a chart.
//
// Elements are finite sums  sum_r f_r D<r>  over multi-indices r, where D<r>
// denotes the basis symbol that acts on monomials by
//
//   D<r>(t^h) = prod_i q_{r_i}! binom(h_i, r_i) t_i^{h_i - r_i}.
//
// Products reduce to the canonical left form through the two rewriting rules
//
//   D<l> D<r> = <l+r over l> D<l+r>,
//   D<r> f    = sum_{i <= r} {r over i} D<i>(f) D<r-i>,
//
// with braces and angles taken componentwise. The algebra is free on the
// symbols; no order truncation happens here.

#include <frobstruct/arith.hpp>
#include <frobstruct/chart.hpp>

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>

namespace frobstruct {

struct LevelMismatch : std::runtime_error {
  explicit LevelMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {

// Odometer step through all multi-indices 0 <= i <= bound (componentwise).
// Returns false once i has wrapped past bound.
inline bool increment_below(MultiIndex& i, const MultiIndex& bound) {
  for (std::size_t k = 0; k < i.size(); ++k) {
    if (i[k] < bound[k]) {
      ++i[k];
      for (std::size_t j = 0; j < k; ++j) i[j] = 0;
      return true;
    }
  }
  return false;
}

}  // namespace detail

// D<r>(f) for a single basis symbol.
inline RingElem apply_basis(const ChartPtr& chart, LevelIndex level,
                            const MultiIndex& r, const RingElem& f) {
  require_same_chart(chart, f.chart());
  if (r.size() != chart->dim())
    throw std::invalid_argument("apply_basis: index arity mismatch");
  const FpConfig& fp = chart->field();
  std::int64_t qfac = 1;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] < 0)
      throw std::invalid_argument("apply_basis: negative order component");
    qfac = fp.mul(qfac, q_factorial_mod(r[i], level, fp));
  }
  RingElem out = RingElem::zero(chart);
  if (qfac == 0) return out;
  for (const auto& [h, c] : f.terms()) {
    std::int64_t factor = fp.mul(c, qfac);
    MultiIndex shifted(h.size());
    for (std::size_t i = 0; i < h.size() && factor != 0; ++i) {
      factor = fp.mul(factor, generalized_binomial(h[i], r[i], fp));
      shifted[i] = h[i] - r[i];
    }
    if (factor != 0) out.add_term(std::move(shifted), factor);
  }
  return out;
}

class DiffOp {
 public:
  DiffOp(ChartPtr chart, LevelIndex level)
      : chart_(std::move(chart)), level_(level) {
    if (!chart_) throw std::invalid_argument("DiffOp: null chart");
  }

  static DiffOp zero(const ChartPtr& c, LevelIndex level) {
    return DiffOp(c, level);
  }

  static DiffOp identity(const ChartPtr& c, LevelIndex level) {
    DiffOp op(c, level);
    op.add_term(MultiIndex(c->dim(), 0), RingElem::one(c));
    return op;
  }

  static DiffOp basis(const ChartPtr& c, LevelIndex level, MultiIndex r) {
    DiffOp op(c, level);
    op.add_term(std::move(r), RingElem::one(c));
    return op;
  }

  // The order-zero operator "multiply by f".
  static DiffOp from_function(const RingElem& f, LevelIndex level) {
    DiffOp op(f.chart(), level);
    op.add_term(MultiIndex(f.chart()->dim(), 0), f);
    return op;
  }

  const ChartPtr& chart() const { return chart_; }
  LevelIndex level() const { return level_; }
  const std::map<MultiIndex, RingElem>& coeffs() const { return coeffs_; }
  bool is_zero() const { return coeffs_.empty(); }

  void add_term(MultiIndex r, const RingElem& f) {
    if (r.size() != chart_->dim())
      throw std::invalid_argument("DiffOp: index arity mismatch");
    for (auto x : r)
      if (x < 0)
        throw std::invalid_argument("DiffOp: negative order component");
    require_same_chart(chart_, f.chart());
    if (f.is_zero()) return;
    auto [it, inserted] = coeffs_.emplace(std::move(r), f);
    if (!inserted) {
      it->second += f;
      if (it->second.is_zero()) coeffs_.erase(it);
    }
  }

  DiffOp& operator+=(const DiffOp& o) {
    check_compatible(o);
    for (const auto& [r, f] : o.coeffs_) add_term(r, f);
    return *this;
  }

  DiffOp& operator-=(const DiffOp& o) {
    check_compatible(o);
    for (const auto& [r, f] : o.coeffs_) add_term(r, -f);
    return *this;
  }

  friend DiffOp operator+(DiffOp a, const DiffOp& b) { return a += b; }
  friend DiffOp operator-(DiffOp a, const DiffOp& b) { return a -= b; }

  // Left multiplication by a function, i.e. scaling every coefficient.
  DiffOp left_scaled(const RingElem& f) const {
    DiffOp out(chart_, level_);
    for (const auto& [r, g] : coeffs_) out.add_term(r, f * g);
    return out;
  }

  DiffOp scaled(std::int64_t s) const {
    return left_scaled(RingElem::constant(chart_, s));
  }

  bool operator==(const DiffOp& o) const {
    return *chart_ == *o.chart_ && level_ == o.level_ && coeffs_ == o.coeffs_;
  }

  // Canonical text form, one "(coefficient) D<r1,...,rn>" per term.
  std::string to_string() const {
    if (coeffs_.empty()) return "0";
    std::ostringstream out;
    bool first = true;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
      if (!first) out << " + ";
      first = false;
      out << "(" << it->second.to_string() << ") D<";
      for (std::size_t i = 0; i < it->first.size(); ++i) {
        if (i) out << ",";
        out << it->first[i];
      }
      out << ">";
    }
    return out.str();
  }

  void check_compatible(const DiffOp& o) const {
    require_same_chart(chart_, o.chart_);
    if (!(level_ == o.level_))
      throw LevelMismatch("operator levels differ");
  }

 private:
  ChartPtr chart_;
  LevelIndex level_;
  std::map<MultiIndex, RingElem> coeffs_;
};

inline RingElem apply(const DiffOp& P, const RingElem& f) {
  require_same_chart(P.chart(), f.chart());
  RingElem out = RingElem::zero(P.chart());
  for (const auto& [r, g] : P.coeffs())
    out += g * apply_basis(P.chart(), P.level(), r, f);
  return out;
}

// Canonical form of the product P * Q.
inline DiffOp mul(const DiffOp& P, const DiffOp& Q) {
  P.check_compatible(Q);
  if (P.level().is_infinite())
    throw LevelMismatch(
        "infinite-level elements multiply through finite-level snapshots");
  const ChartPtr& chart = P.chart();
  const FpConfig& fp = chart->field();
  const LevelIndex m = P.level();
  DiffOp out(chart, m);
  for (const auto& [l, fl] : P.coeffs()) {
    for (const auto& [r, gr] : Q.coeffs()) {
      // D<l> (gr D<r>) = sum_{i <= l} {l over i} D<i>(gr) <l-i+r over l-i> D<l-i+r>
      MultiIndex i(l.size(), 0);
      do {
        std::int64_t scalar = 1;
        for (std::size_t k = 0; k < i.size() && scalar != 0; ++k)
          scalar = fp.mul(scalar, brace_coeff(i[k], l[k] - i[k], m, fp));
        if (scalar == 0) continue;
        RingElem gpart = apply_basis(chart, m, i, gr);
        if (gpart.is_zero()) continue;
        MultiIndex target(l.size());
        for (std::size_t k = 0; k < i.size() && scalar != 0; ++k) {
          target[k] = l[k] - i[k] + r[k];
          scalar = fp.mul(scalar, angle_coeff(target[k], l[k] - i[k], m, fp));
        }
        if (scalar == 0) continue;
        out.add_term(std::move(target), (fl * gpart).scaled(scalar));
      } while (detail::increment_below(i, l));
    }
  }
  return out;
}

// The natural map into a coarser level m2 >= m1: D<r> picks up the factor
// q_r!(m1)/q_r!(m2) componentwise. Passing the infinite level lands in the
// divided-power basis.
inline DiffOp level_map(const DiffOp& P, LevelIndex m2) {
  const LevelIndex m1 = P.level();
  if (m1.is_infinite())
    throw std::invalid_argument("level_map: source level must be finite");
  const FpConfig& fp = P.chart()->field();
  DiffOp out(P.chart(), m2);
  for (const auto& [r, f] : P.coeffs()) {
    std::int64_t ratio = 1;
    for (auto rc : r)
      ratio = fp.mul(ratio, fp.reduce(level_factorial_ratio(rc, m1, m2, fp)));
    if (ratio != 0) out.add_term(r, f.scaled(ratio));
  }
  return out;
}

inline std::int64_t order(const DiffOp& P) {
  std::int64_t best = 0;
  for (const auto& [r, f] : P.coeffs()) {
    std::int64_t total = 0;
    for (auto x : r) total += x;
    best = std::max(best, total);
  }
  return best;
}

// Parses the canonical text form produced by DiffOp::to_string.
inline DiffOp parse_diffop(const ChartPtr& chart, LevelIndex level,
                           std::string_view src) {
  DiffOp out(chart, level);
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < src.size() && (src[pos] == ' ' || src[pos] == '\t')) ++pos;
  };
  skip_ws();
  if (src.substr(pos) == "0") return out;
  while (true) {
    skip_ws();
    if (pos >= src.size() || src[pos] != '(')
      throw ParseError("expected '(' starting an operator term");
    const std::size_t close = src.find(')', pos);
    if (close == std::string_view::npos)
      throw ParseError("unterminated coefficient");
    RingElem coeff = parse_poly(chart, src.substr(pos + 1, close - pos - 1));
    pos = close + 1;
    skip_ws();
    if (src.substr(pos, 2) != "D<")
      throw ParseError("expected 'D<' after coefficient");
    pos += 2;
    MultiIndex r;
    while (true) {
      skip_ws();
      std::size_t j = pos;
      while (j < src.size() && src[j] >= '0' && src[j] <= '9') ++j;
      if (j == pos) throw ParseError("expected order component");
      std::int64_t v = 0;
      std::from_chars(src.data() + pos, src.data() + j, v);
      r.push_back(v);
      pos = j;
      skip_ws();
      if (pos < src.size() && src[pos] == ',') {
        ++pos;
        continue;
      }
      break;
    }
    if (pos >= src.size() || src[pos] != '>')
      throw ParseError("expected '>' closing the order index");
    ++pos;
    out.add_term(std::move(r), coeff);
    skip_ws();
    if (pos >= src.size()) break;
    if (src[pos] != '+') throw ParseError("expected '+' between terms");
    ++pos;
  }
  return out;
}

}  // namespace frobstruct
