#pragma once

// Free modules of finite rank carrying an action of the level-m operator
// ring on a chart.
//
// The module data is one square matrix per variable x_i and per 0 <= l <= m,
// recording where the generator D_i<p^l> sends the standard basis vectors.
// Everything else follows from the ring structure:
//
//   * the action of D_i<a> on a basis vector for arbitrary a comes from the
//     product rule, splitting a at the largest admissible power of p, where
//     the angle coefficient of the split is a unit;
//   * the action on a general section f * e_j comes from the commutation
//     rule D<a> f = sum {a over i} D<i>(f) D<a-i>.
//
// The working representation is MatDiffOp: a finite sum  sum_r C_r D<r>
// with square matrix coefficients, acting on column vectors by applying
// D<r> entrywise and multiplying by C_r. At level m any term whose index
// has a component >= p^{m+1} acts as the zero operator (its q-factorial is
// divisible by p), so such terms are dropped on insertion and the stored
// form is a faithful normal form: two MatDiffOps agree as operators iff
// they agree term by term.
//
// On top of this sit the checks and constructions for the module zoo:
// validation against the ring presentation, p-curvature, solution modules,
// the level-lowering descent that defines dormancy, pullbacks along the
// N-fold Frobenius, and the tensor / dual / determinant functors.

#include <frobstruct/arith.hpp>
#include <frobstruct/chart.hpp>
#include <frobstruct/diffop.hpp>
#include <frobstruct/polymat.hpp>

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace frobstruct {

// Raised when a solution-module computation falls short of full rank or the
// p-curvature obstructs it. Callers that want a verdict rather than an
// exception catch this (dormancy does).
struct NotDormant : std::runtime_error {
  explicit NotDormant(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {

inline PolyMat scaled_int(const PolyMat& m, std::int64_t s) {
  PolyMat r = m;
  for (std::size_t i = 0; i < r.rows(); ++i)
    for (std::size_t j = 0; j < r.cols(); ++j) r.at(i, j) = r.at(i, j).scaled(s);
  return r;
}

inline PolyMat apply_basis_matrix(const ChartPtr& c, LevelIndex lev,
                                  const MultiIndex& i, const PolyMat& m) {
  PolyMat r(c, m.rows(), m.cols());
  for (std::size_t a = 0; a < m.rows(); ++a)
    for (std::size_t b = 0; b < m.cols(); ++b)
      r.at(a, b) = apply_basis(c, lev, i, m.at(a, b));
  return r;
}

}  // namespace detail

class MatDiffOp {
 public:
  MatDiffOp(ChartPtr chart, int level, std::size_t rank)
      : chart_(std::move(chart)), level_(level), rank_(rank) {
    if (!chart_) throw std::invalid_argument("MatDiffOp: null chart");
    if (level < 0) throw std::invalid_argument("MatDiffOp: negative level");
    if (rank == 0) throw std::invalid_argument("MatDiffOp: rank zero");
    const BigInt t = big_pow(chart_->p(), level + 1);
    if (t > BigInt(std::int64_t(1) << 60))
      throw std::invalid_argument("MatDiffOp: p^{m+1} out of range");
    threshold_ = t.convert_to<std::int64_t>();
  }

  static MatDiffOp zero(const ChartPtr& c, int level, std::size_t rank) {
    return MatDiffOp(c, level, rank);
  }

  static MatDiffOp identity(const ChartPtr& c, int level, std::size_t rank) {
    MatDiffOp op(c, level, rank);
    op.add_term(MultiIndex(c->dim(), 0), PolyMat::identity(c, rank));
    return op;
  }

  static MatDiffOp term(MultiIndex r, const PolyMat& coeff, int level) {
    if (coeff.rows() != coeff.cols())
      throw std::invalid_argument("MatDiffOp: coefficient not square");
    MatDiffOp op(coeff.chart(), level, coeff.rows());
    op.add_term(std::move(r), coeff);
    return op;
  }

  const ChartPtr& chart() const { return chart_; }
  int level() const { return level_; }
  std::size_t rank() const { return rank_; }
  const std::map<MultiIndex, PolyMat>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  PolyMat coeff(const MultiIndex& r) const {
    auto it = terms_.find(r);
    return it == terms_.end() ? PolyMat(chart_, rank_, rank_) : it->second;
  }

  void add_term(MultiIndex r, const PolyMat& c) {
    if (r.size() != chart_->dim())
      throw std::invalid_argument("MatDiffOp: index arity mismatch");
    if (c.rows() != rank_ || c.cols() != rank_)
      throw std::invalid_argument("MatDiffOp: coefficient shape mismatch");
    require_same_chart(chart_, c.chart());
    for (std::int64_t e : r) {
      if (e < 0) throw std::invalid_argument("MatDiffOp: negative index");
      if (e >= threshold_) return;  // zero operator at this level
    }
    if (c.is_zero()) return;
    auto it = terms_.find(r);
    if (it == terms_.end()) {
      terms_.emplace(std::move(r), c);
    } else {
      it->second = it->second + c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  MatDiffOp& operator+=(const MatDiffOp& o) {
    check_compatible(o);
    for (const auto& [r, c] : o.terms_) add_term(r, c);
    return *this;
  }

  MatDiffOp& operator-=(const MatDiffOp& o) {
    check_compatible(o);
    for (const auto& [r, c] : o.terms_) add_term(r, detail::scaled_int(c, -1));
    return *this;
  }

  friend MatDiffOp operator+(MatDiffOp a, const MatDiffOp& b) { return a += b; }
  friend MatDiffOp operator-(MatDiffOp a, const MatDiffOp& b) { return a -= b; }

  MatDiffOp scaled(std::int64_t s) const {
    MatDiffOp r(chart_, level_, rank_);
    for (const auto& [idx, c] : terms_) r.add_term(idx, detail::scaled_int(c, s));
    return r;
  }

  // Left multiplication by a function (an order-zero matrix would also do).
  MatDiffOp left_scaled(const RingElem& f) const {
    MatDiffOp r(chart_, level_, rank_);
    for (const auto& [idx, c] : terms_) r.add_term(idx, c.scaled(f));
    return r;
  }

  std::vector<RingElem> apply(const std::vector<RingElem>& v) const {
    if (v.size() != rank_)
      throw std::invalid_argument("MatDiffOp: vector length mismatch");
    const LevelIndex lev(level_);
    std::vector<RingElem> out(rank_, RingElem::zero(chart_));
    for (const auto& [r, c] : terms_) {
      std::vector<RingElem> dv;
      dv.reserve(rank_);
      for (const auto& f : v) dv.push_back(apply_basis(chart_, lev, r, f));
      std::vector<RingElem> w = c.apply_to(dv);
      for (std::size_t k = 0; k < rank_; ++k) out[k] += w[k];
    }
    return out;
  }

  friend MatDiffOp compose(const MatDiffOp& a, const MatDiffOp& b) {
    a.check_compatible(b);
    const FpConfig& fp = a.chart_->field();
    const LevelIndex lev(a.level_);
    MatDiffOp out(a.chart_, a.level_, a.rank_);
    for (const auto& [l, A] : a.terms_) {
      for (const auto& [r, B] : b.terms_) {
        MultiIndex i(l.size(), 0);
        do {
          std::int64_t scalar = 1;
          for (std::size_t k = 0; k < i.size() && scalar != 0; ++k)
            scalar = fp.mul(scalar, brace_coeff(i[k], l[k] - i[k], lev, fp));
          if (scalar == 0) continue;
          PolyMat dB = detail::apply_basis_matrix(a.chart_, lev, i, B);
          if (dB.is_zero()) continue;
          MultiIndex target(l.size());
          for (std::size_t k = 0; k < i.size() && scalar != 0; ++k) {
            target[k] = l[k] - i[k] + r[k];
            scalar = fp.mul(scalar, angle_coeff(target[k], l[k] - i[k], lev, fp));
          }
          if (scalar == 0) continue;
          out.add_term(std::move(target),
                       detail::scaled_int(A * dB, scalar));
        } while (detail::increment_below(i, l));
      }
    }
    return out;
  }

  friend MatDiffOp pow_compose(const MatDiffOp& a, std::int64_t n) {
    if (n < 1) throw std::invalid_argument("pow_compose: need n >= 1");
    MatDiffOp r = a;
    for (std::int64_t k = 1; k < n; ++k) r = compose(r, a);
    return r;
  }

  bool operator==(const MatDiffOp& o) const {
    return *chart_ == *o.chart_ && level_ == o.level_ && rank_ == o.rank_ &&
           terms_ == o.terms_;
  }

 private:
  void check_compatible(const MatDiffOp& o) const {
    require_same_chart(chart_, o.chart_);
    if (level_ != o.level_ || rank_ != o.rank_)
      throw std::invalid_argument("MatDiffOp: level or rank mismatch");
  }

  ChartPtr chart_;
  int level_;
  std::size_t rank_;
  std::int64_t threshold_;
  std::map<MultiIndex, PolyMat> terms_;
};

// A free module with chosen basis and the matrices of the ring generators.
// gen(i, l) is the matrix whose column j is the image of basis vector j
// under the action of D_i<p^l>.
class DMod {
 public:
  DMod(ChartPtr chart, int level, std::size_t rank,
       std::vector<std::vector<PolyMat>> gens)
      : chart_(std::move(chart)),
        level_(level),
        rank_(rank),
        gens_(std::move(gens)) {
    if (!chart_) throw std::invalid_argument("DMod: null chart");
    if (level_ < 0) throw std::invalid_argument("DMod: negative level");
    if (rank_ == 0) throw std::invalid_argument("DMod: rank zero");
    if (gens_.size() != chart_->dim())
      throw std::invalid_argument("DMod: one generator family per variable");
    for (const auto& per_var : gens_) {
      if (per_var.size() != static_cast<std::size_t>(level_) + 1)
        throw std::invalid_argument("DMod: need matrices for levels 0..m");
      for (const auto& b : per_var) {
        require_same_chart(chart_, b.chart());
        if (b.rows() != rank_ || b.cols() != rank_)
          throw std::invalid_argument("DMod: generator matrix shape mismatch");
      }
    }
  }

  static DMod trivial(const ChartPtr& c, int level, std::size_t rank) {
    std::vector<std::vector<PolyMat>> gens(
        c->dim(), std::vector<PolyMat>(level + 1, PolyMat(c, rank, rank)));
    return DMod(c, level, rank, std::move(gens));
  }

  const ChartPtr& chart() const { return chart_; }
  int level() const { return level_; }
  std::size_t rank() const { return rank_; }
  const PolyMat& gen(std::size_t var, int l) const {
    return gens_.at(var).at(static_cast<std::size_t>(l));
  }

  DMod level0_truncation() const {
    std::vector<std::vector<PolyMat>> gens;
    gens.reserve(chart_->dim());
    for (std::size_t i = 0; i < chart_->dim(); ++i)
      gens.push_back({gens_[i][0]});
    return DMod(chart_, 0, rank_, std::move(gens));
  }

  bool operator==(const DMod& o) const {
    return *chart_ == *o.chart_ && level_ == o.level_ && rank_ == o.rank_ &&
           gens_ == o.gens_;
  }

 private:
  ChartPtr chart_;
  int level_;
  std::size_t rank_;
  std::vector<std::vector<PolyMat>> gens_;
};

// Builds and caches the operators E(i, a) = action of D_i<a>, for one fixed
// module. Basis actions of composite orders are derived from the generator
// matrices; the context exists so repeated queries (validation, descent)
// share the work.
class ActionContext {
 public:
  explicit ActionContext(const DMod& m) : mod_(&m) {}

  const DMod& module() const { return *mod_; }

  // The operator of D_var<a> in normal form.
  const MatDiffOp& basis_action(std::size_t var, std::int64_t a) {
    if (a < 0) throw std::invalid_argument("basis_action: negative order");
    const auto key = std::make_pair(var, a);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    const ChartPtr& c = mod_->chart();
    const FpConfig& fp = c->field();
    const int m = mod_->level();
    const LevelIndex lev(m);
    MatDiffOp op(c, m, mod_->rank());

    if (a == 0) {
      op = MatDiffOp::identity(c, m, mod_->rank());
    } else if (generator_level(a) >= 0) {
      // D<p^l> f = sum_{j <= p^l} {p^l over j} D<j>(f) D<p^l - j> turns the
      // basis images theta<r> into the full operator.
      for (std::int64_t j = 0; j <= a; ++j) {
        const std::int64_t s = brace_coeff(j, a - j, lev, fp);
        if (s == 0) continue;
        PolyMat th = theta(var, a - j);
        if (th.is_zero()) continue;
        MultiIndex idx(c->dim(), 0);
        idx[var] = j;
        op.add_term(std::move(idx), detail::scaled_int(th, s));
      }
    } else {
      // Split at the largest admissible power of p; the angle coefficient
      // of that split is a unit.
      std::int64_t e = 0;
      while (big_pow(c->p(), static_cast<int>(e) + 1) <= BigInt(a)) ++e;
      const std::int64_t b =
          big_pow(c->p(), static_cast<int>(std::min<std::int64_t>(e, m)))
              .convert_to<std::int64_t>();
      const std::int64_t unit = angle_coeff(a, b, lev, fp);
      if (unit == 0)
        throw std::logic_error("basis_action: split angle is not a unit");
      op = compose(basis_action(var, b), basis_action(var, a - b))
               .scaled(fp.inv(unit));
    }
    return cache_.emplace(key, std::move(op)).first->second;
  }

  // The operator of the full symbol D<r>, composing one variable at a time.
  MatDiffOp basis_action(const MultiIndex& r) {
    const ChartPtr& c = mod_->chart();
    if (r.size() != c->dim())
      throw std::invalid_argument("basis_action: index arity mismatch");
    MatDiffOp op = MatDiffOp::identity(c, mod_->level(), mod_->rank());
    for (std::size_t var = 0; var < r.size(); ++var)
      if (r[var] != 0) op = compose(op, basis_action(var, r[var]));
    return op;
  }

  // Matrix of D_var<a> on the basis vectors (the order-zero coefficient).
  PolyMat theta(std::size_t var, std::int64_t a) {
    const ChartPtr& c = mod_->chart();
    if (a == 0) return PolyMat::identity(c, mod_->rank());
    const int l = generator_level(a);
    if (l >= 0) return mod_->gen(var, l);
    return basis_action(var, a).coeff(MultiIndex(c->dim(), 0));
  }

  // Matrix of the divided symbol D_var[a] = (1/q_a!) D_var<a>; defined for
  // a < p^{m+1}, where the q-factorial is a unit.
  PolyMat divided_theta(std::size_t var, std::int64_t a) {
    const FpConfig& fp = mod_->chart()->field();
    const std::int64_t qf = q_factorial_mod(a, LevelIndex(mod_->level()), fp);
    if (qf == 0)
      throw std::logic_error("divided_theta: order at or above p^{m+1}");
    return detail::scaled_int(theta(var, a), fp.inv(qf));
  }

  std::vector<RingElem> act(const DiffOp& op, const std::vector<RingElem>& v) {
    require_same_chart(mod_->chart(), op.chart());
    if (op.level().is_infinite() || op.level().value() != mod_->level())
      throw LevelMismatch("act: operator level differs from module level");
    std::vector<RingElem> out(mod_->rank(), RingElem::zero(mod_->chart()));
    for (const auto& [r, f] : op.coeffs()) {
      std::vector<RingElem> w = basis_action(r).apply(v);
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += f * w[k];
    }
    return out;
  }

 private:
  // l with a = p^l and l <= m, or -1.
  int generator_level(std::int64_t a) const {
    BigInt pw = 1;
    for (int l = 0; l <= mod_->level(); ++l) {
      if (pw == BigInt(a)) return l;
      pw *= mod_->chart()->p();
    }
    return -1;
  }

  const DMod* mod_;
  std::map<std::pair<std::size_t, std::int64_t>, MatDiffOp> cache_;
};

inline std::vector<RingElem> act(const DMod& m, const DiffOp& op,
                                 const std::vector<RingElem>& v) {
  ActionContext ctx(m);
  return ctx.act(op, v);
}

struct ValidationReport {
  bool ok = true;
  std::string message;
};

// Checks the module data against the presentation of the operator ring:
// generators of distinct variables commute, same-variable generator
// products match the angle-rescaled canonical operator, and below-top
// generators are p-step nilpotent. row_bound > 0 additionally replays the
// full multiplication table rows D<p^l> * D<b> for 1 <= b <= row_bound.
inline ValidationReport validate(const DMod& m, std::int64_t row_bound = 0) {
  ValidationReport rep;
  auto fail = [&rep](std::string msg) {
    rep.ok = false;
    rep.message = std::move(msg);
  };
  try {
    ActionContext ctx(m);
    const ChartPtr& c = m.chart();
    const FpConfig& fp = c->field();
    const LevelIndex lev(m.level());
    const std::int64_t p = c->p();
    std::vector<std::int64_t> gen_order;
    {
      std::int64_t pw = 1;
      for (int l = 0; l <= m.level(); ++l, pw *= p) gen_order.push_back(pw);
    }

    for (std::size_t v1 = 0; v1 < c->dim() && rep.ok; ++v1) {
      for (std::size_t l1 = 0; l1 < gen_order.size() && rep.ok; ++l1) {
        const MatDiffOp& g1 = ctx.basis_action(v1, gen_order[l1]);
        // nilpotency below the top level
        if (static_cast<int>(l1) < m.level()) {
          if (!pow_compose(g1, p).is_zero()) {
            fail("generator " + c->var_name(v1) + ":" + std::to_string(l1) +
                 " is not p-step nilpotent");
            break;
          }
        }
        // same-variable product rows
        for (std::size_t l2 = 0; l2 < gen_order.size() && rep.ok; ++l2) {
          const std::int64_t a = gen_order[l1] + gen_order[l2];
          const MatDiffOp lhs =
              compose(g1, ctx.basis_action(v1, gen_order[l2]));
          const MatDiffOp rhs = ctx.basis_action(v1, a).scaled(
              angle_coeff(a, gen_order[l1], lev, fp));
          if (!(lhs == rhs))
            fail("product rule fails for " + c->var_name(v1) + ":" +
                 std::to_string(l1) + " * " + c->var_name(v1) + ":" +
                 std::to_string(l2));
        }
        // cross-variable commutation
        for (std::size_t v2 = v1 + 1; v2 < c->dim() && rep.ok; ++v2) {
          for (std::size_t l2 = 0; l2 < gen_order.size() && rep.ok; ++l2) {
            const MatDiffOp& g2 = ctx.basis_action(v2, gen_order[l2]);
            if (!(compose(g1, g2) == compose(g2, g1)))
              fail("generators " + c->var_name(v1) + ":" +
                   std::to_string(l1) + " and " + c->var_name(v2) + ":" +
                   std::to_string(l2) + " do not commute");
          }
        }
        // optional deep rows
        for (std::int64_t b = 1; b <= row_bound && rep.ok; ++b) {
          const std::int64_t a = gen_order[l1] + b;
          const MatDiffOp lhs = compose(g1, ctx.basis_action(v1, b));
          const MatDiffOp rhs = ctx.basis_action(v1, a).scaled(
              angle_coeff(a, gen_order[l1], lev, fp));
          if (!(lhs == rhs))
            fail("table row fails for " + c->var_name(v1) + ":" +
                 std::to_string(l1) + " at order " + std::to_string(b));
        }
      }
    }
  } catch (const std::exception& e) {
    fail(std::string("validation aborted: ") + e.what());
  }
  return rep;
}

// Classical p-curvature of a level-0 module in the direction of one
// variable: the p-fold composite of the order-1 action. The composite is
// linear over functions; any surviving positive-order term would be a
// structural bug, not bad input.
inline PolyMat p_curvature(const DMod& m, std::size_t var) {
  if (m.level() != 0)
    throw std::invalid_argument("p_curvature: module must have level 0");
  ActionContext ctx(m);
  const MatDiffOp psi = pow_compose(ctx.basis_action(var, 1), m.chart()->p());
  for (const auto& [r, c] : psi.terms())
    for (std::int64_t e : r)
      if (e != 0)
        throw std::logic_error("p_curvature: composite not function-linear");
  return psi.coeff(MultiIndex(m.chart()->dim(), 0));
}

// A basis of the solution module of one descent stage, as column vectors
// over the ambient chart. The coordinates of the vectors are polynomials in
// the p-th power of the chart variable times a residue monomial; they are
// simultaneously the basis sections for the next stage down.
struct SolBasis {
  ChartPtr chart;
  std::vector<std::vector<RingElem>> vectors;
};

namespace detail {

inline void require_univariate_module(const DMod& m, const char* who) {
  if (m.chart()->dim() != 1)
    throw std::invalid_argument(std::string(who) +
                                ": univariate chart required");
}

inline ChartPtr polynomial_twin(const ChartPtr& c) {
  if (!c->laurent(0)) return c;
  return make_chart(c->p(), {c->var_name(0)}, {false});
}

// Writes f = sum_beta g_beta(y) x^beta (y = x^p) into the coordinate rows
// of a matrix column, allowing negative powers of y. Rows are indexed
// beta * rank + coord; entries are exponent -> coefficient maps in y.
using YPoly = std::map<std::int64_t, std::int64_t>;

inline void scatter_residues(const RingElem& f, std::int64_t p,
                             std::size_t coord, std::size_t rank,
                             std::vector<YPoly>& rows) {
  for (const auto& [e, c] : f.terms()) {
    const std::int64_t h = e[0];
    const std::int64_t beta = ((h % p) + p) % p;
    const std::int64_t ye = (h - beta) / p;
    auto& cell = rows[static_cast<std::size_t>(beta) * rank + coord];
    cell[ye] = f.chart()->field().add(cell[ye], c);
    if (cell[ye] == 0) cell.erase(ye);
  }
}

// Turns per-row y-polynomials (possibly with negative exponents) into a
// matrix over the polynomial twin chart by clearing each row with the
// smallest sufficient power of y. Row scaling does not change the kernel.
inline PolyMat rows_to_matrix(const std::vector<std::vector<YPoly>>& cols,
                              const ChartPtr& twin) {
  const std::size_t nrows = cols.empty() ? 0 : cols.front().size();
  PolyMat mat(twin, nrows, cols.size());
  for (std::size_t i = 0; i < nrows; ++i) {
    std::int64_t mn = 0;
    for (const auto& col : cols)
      for (const auto& [e, c] : col[i]) mn = std::min(mn, e);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      RingElem entry = RingElem::zero(twin);
      for (const auto& [e, c] : cols[j][i]) entry.add_term({e - mn}, c);
      mat.at(i, j) = entry;
    }
  }
  return mat;
}

// Level-0 solution computation for the current stage of any module: kernel
// of the order-1 action as a module over y = x^p. Throws NotDormant when
// the curvature obstructs or the kernel falls short of full rank.
inline SolBasis stage_sol(const DMod& m, ActionContext& ctx) {
  require_univariate_module(m, "stage_sol");
  const ChartPtr& c = m.chart();
  const FpConfig& fp = c->field();
  const std::int64_t p = c->p();
  const std::size_t r = m.rank();

  const MatDiffOp& e1 = ctx.basis_action(0, 1);
  if (!pow_compose(e1, p).is_zero())
    throw NotDormant("nonzero p-curvature in the order-1 direction");

  // Matrix of the order-1 action in the basis x^alpha e_j over k[y].
  std::vector<std::vector<YPoly>> cols;
  cols.reserve(static_cast<std::size_t>(p) * r);
  for (std::int64_t alpha = 0; alpha < p; ++alpha) {
    for (std::size_t j = 0; j < r; ++j) {
      std::vector<RingElem> v(r, RingElem::zero(c));
      v[j] = RingElem::monomial(c, {alpha}, 1);
      std::vector<RingElem> w = e1.apply(v);
      std::vector<YPoly> rows(static_cast<std::size_t>(p) * r);
      for (std::size_t k = 0; k < r; ++k) scatter_residues(w[k], p, k, r, rows);
      cols.push_back(std::move(rows));
    }
  }
  const ChartPtr twin = polynomial_twin(c);
  const PolyMat ker = kernel_basis(rows_to_matrix(cols, twin));

  if (ker.cols() < r)
    throw NotDormant("solution rank " + std::to_string(ker.cols()) +
                     " below module rank " + std::to_string(r));
  if (ker.cols() > r)
    throw std::logic_error("stage_sol: solution rank exceeds module rank");

  SolBasis sol{c, {}};
  for (std::size_t col = 0; col < ker.cols(); ++col) {
    std::vector<RingElem> s(r, RingElem::zero(c));
    for (std::int64_t alpha = 0; alpha < p; ++alpha)
      for (std::size_t j = 0; j < r; ++j)
        for (const auto& [ye, cc] :
             ker.at(static_cast<std::size_t>(alpha) * r + j, col).terms())
          s[j].add_term({ye[0] * p + alpha}, cc);
    // canonical scale: first nonzero coordinate gets lowest coefficient 1
    for (std::size_t j = 0; j < r; ++j) {
      if (s[j].is_zero()) continue;
      const std::int64_t c0 = s[j].coeff({s[j].min_exponent(0)});
      const std::int64_t u = fp.inv(c0);
      for (auto& f : s) f = f.scaled(u);
      break;
    }
    std::vector<RingElem> check = e1.apply(s);
    for (const auto& f : check)
      if (!f.is_zero())
        throw std::logic_error("stage_sol: candidate is not horizontal");
    sol.vectors.push_back(std::move(s));
  }
  return sol;
}

// Restricts the higher generators to the solution module of stage_sol and
// rewrites them in the solution basis, producing the module one level down
// on the same chart (the coordinate now playing the role of x^p).
inline DMod restrict_to_sol(const DMod& m, ActionContext& ctx,
                            const SolBasis& sol) {
  const ChartPtr& c = m.chart();
  const FpConfig& fp = c->field();
  const std::int64_t p = c->p();
  const std::size_t r = m.rank();
  const ChartPtr twin = polynomial_twin(c);

  // Coordinates of the solution basis over k[y]; solution vectors are
  // polynomial by construction.
  std::vector<std::vector<YPoly>> sol_cols;
  for (const auto& s : sol.vectors) {
    std::vector<YPoly> rows(static_cast<std::size_t>(p) * r);
    for (std::size_t k = 0; k < r; ++k) scatter_residues(s[k], p, k, r, rows);
    sol_cols.push_back(std::move(rows));
  }

  std::vector<PolyMat> lowered;
  std::int64_t pl = 1;
  for (int l = 1; l <= m.level(); ++l) {
    pl *= p;
    PolyMat b(c, r, r);
    const MatDiffOp& g = ctx.basis_action(0, pl);
    for (std::size_t j = 0; j < r; ++j) {
      std::vector<RingElem> w = g.apply(sol.vectors[j]);
      // Clear poles of w by a power of y, then solve S g = w' through the
      // kernel of the augmented matrix [S | w'].
      std::int64_t mn = 0;
      for (const auto& f : w) mn = std::min(mn, f.min_exponent(0));
      const std::int64_t shift = ((-mn) + p - 1) / p * p;  // multiple of p
      std::vector<std::vector<YPoly>> aug = sol_cols;
      aug.emplace_back(static_cast<std::size_t>(p) * r);
      for (std::size_t k = 0; k < r; ++k) {
        RingElem cleared = RingElem::zero(c);
        for (const auto& [e, cc] : w[k].terms())
          cleared.add_term({e[0] + shift}, cc);
        scatter_residues(cleared, p, k, r, aug.back());
      }
      const PolyMat kb = kernel_basis(rows_to_matrix(aug, twin));
      if (kb.cols() != 1)
        throw std::logic_error("restrict_to_sol: expected a unique relation");
      const RingElem den = kb.at(r, 0);
      if (den.terms().size() != 1)
        throw std::logic_error("restrict_to_sol: denominator not a monomial");
      const std::int64_t de = den.terms().begin()->first[0];
      const std::int64_t dc = den.terms().begin()->second;
      if (!c->laurent(0) && (de != 0 || shift != 0))
        throw std::logic_error("restrict_to_sol: pole on a polynomial chart");
      const std::int64_t scale = fp.neg(fp.inv(dc));
      for (std::size_t k = 0; k < r; ++k) {
        RingElem entry = RingElem::zero(c);
        for (const auto& [e, cc] : kb.at(k, 0).terms())
          entry.add_term({e[0] - de - shift / p}, fp.mul(cc, scale));
        b.at(k, j) = entry;
      }
    }
    lowered.push_back(std::move(b));
  }
  return DMod(c, m.level() - 1, r, {std::move(lowered)});
}

}  // namespace detail

// Full solution basis of a level-0 module over one variable.
inline SolBasis sol_level0(const DMod& m) {
  detail::require_univariate_module(m, "sol_level0");
  if (m.level() != 0)
    throw std::invalid_argument("sol_level0: module must have level 0");
  ActionContext ctx(m);
  return detail::stage_sol(m, ctx);
}

struct DormancyResult {
  bool dormant = true;
  int failed_stage = -1;        // first stage that broke, -1 if none
  std::string reason;           // empty when dormant
  std::vector<SolBasis> chain;  // one solution basis per completed stage
};

// Iterated level-lowering: at each stage take the solutions of the order-1
// action, restrict the remaining generators to them, and descend. A level-m
// module is dormant iff all m+1 stages produce solutions of full rank.
inline DormancyResult dormancy(const DMod& m) {
  detail::require_univariate_module(m, "dormancy");
  {
    const ValidationReport rep = validate(m);
    if (!rep.ok)
      throw std::invalid_argument("dormancy requires a validated module: " +
                                  rep.message);
  }
  DormancyResult res;
  DMod cur = m;
  for (int stage = 0;; ++stage) {
    ActionContext ctx(cur);
    try {
      res.chain.push_back(detail::stage_sol(cur, ctx));
    } catch (const NotDormant& e) {
      res.dormant = false;
      res.failed_stage = stage;
      res.reason = e.what();
      return res;
    }
    if (cur.level() == 0) break;
    cur = detail::restrict_to_sol(cur, ctx, res.chain.back());
    const ValidationReport rep = validate(cur);
    if (!rep.ok)
      throw std::logic_error("dormancy: descent produced an invalid module: " +
                             rep.message);
  }
  return res;
}

// The pullback of the trivial rank-r module along the N-fold relative
// Frobenius, written in the basis scaled by the given unit: every generator
// acts diagonally by D[p^l](u) / u.
inline DMod frobenius_pullback(std::size_t rank, int N, const RingElem& u) {
  if (N < 1)
    throw std::invalid_argument("frobenius_pullback: need N >= 1");
  if (!u.is_unit())
    throw std::invalid_argument("frobenius_pullback: scaling must be a unit");
  const ChartPtr& c = u.chart();
  const int m = N - 1;
  const RingElem uinv = u.inverse();
  std::vector<std::vector<PolyMat>> gens;
  for (std::size_t var = 0; var < c->dim(); ++var) {
    std::vector<PolyMat> per_var;
    std::int64_t pl = 1;
    for (int l = 0; l <= m; ++l) {
      MultiIndex idx(c->dim(), 0);
      idx[var] = pl;
      const RingElem scale = apply_basis(c, LevelIndex(m), idx, u) * uinv;
      PolyMat b(c, rank, rank);
      for (std::size_t k = 0; k < rank; ++k) b.at(k, k) = scale;
      per_var.push_back(std::move(b));
      pl *= c->p();
    }
    gens.push_back(std::move(per_var));
  }
  return DMod(c, m, rank, std::move(gens));
}

namespace detail {

inline PolyMat kron(const PolyMat& a, const PolyMat& b) {
  PolyMat r(a.chart(), a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i1 = 0; i1 < a.rows(); ++i1)
    for (std::size_t j1 = 0; j1 < a.cols(); ++j1) {
      if (a.at(i1, j1).is_zero()) continue;
      for (std::size_t i2 = 0; i2 < b.rows(); ++i2)
        for (std::size_t j2 = 0; j2 < b.cols(); ++j2)
          r.at(i1 * b.rows() + i2, j1 * b.cols() + j2) =
              a.at(i1, j1) * b.at(i2, j2);
    }
  return r;
}

}  // namespace detail

// Tensor product module on basis e_i (x) f_j, index i * rank2 + j. The
// divided symbols obey the plain convolution rule, so each generator matrix
// is a convolution of divided basis images.
inline DMod tensor(const DMod& m1, const DMod& m2) {
  require_same_chart(m1.chart(), m2.chart());
  if (m1.level() != m2.level())
    throw std::invalid_argument("tensor: levels differ");
  const ChartPtr& c = m1.chart();
  ActionContext c1(m1), c2(m2);
  const std::size_t r = m1.rank() * m2.rank();
  std::vector<std::vector<PolyMat>> gens;
  for (std::size_t var = 0; var < c->dim(); ++var) {
    std::vector<PolyMat> per_var;
    std::int64_t pl = 1;
    for (int l = 0; l <= m1.level(); ++l) {
      PolyMat b(c, r, r);
      for (std::int64_t j = 0; j <= pl; ++j) {
        const PolyMat t1 = c1.divided_theta(var, j);
        if (t1.is_zero()) continue;
        const PolyMat t2 = c2.divided_theta(var, pl - j);
        if (t2.is_zero()) continue;
        b = b + detail::kron(t1, t2);
      }
      per_var.push_back(std::move(b));
      pl *= c->p();
    }
    gens.push_back(std::move(per_var));
  }
  return DMod(c, m1.level(), r, std::move(gens));
}

// Dual module on the dual basis: the divided images Phi(r) on the dual side
// satisfy sum_{j <= r} Phi(j)^T Theta(r - j) = 0, which determines them
// recursively from Phi(0) = I.
inline DMod dual_module(const DMod& m) {
  const ChartPtr& c = m.chart();
  ActionContext ctx(m);
  const std::size_t r = m.rank();
  std::int64_t top = 1;
  for (int l = 0; l < m.level(); ++l) top *= c->p();

  std::vector<std::vector<PolyMat>> gens;
  for (std::size_t var = 0; var < c->dim(); ++var) {
    std::vector<PolyMat> phi;  // transposed divided duals, index by order
    phi.push_back(PolyMat::identity(c, r));
    for (std::int64_t a = 1; a <= top; ++a) {
      PolyMat acc(c, r, r);
      for (std::int64_t j = 0; j < a; ++j)
        acc = acc + phi[static_cast<std::size_t>(j)] *
                        ctx.divided_theta(var, a - j);
      phi.push_back(detail::scaled_int(acc, -1));
    }
    std::vector<PolyMat> per_var;
    std::int64_t pl = 1;
    for (int l = 0; l <= m.level(); ++l) {
      per_var.push_back(phi[static_cast<std::size_t>(pl)].transpose());
      pl *= c->p();
    }
    gens.push_back(std::move(per_var));
  }
  return DMod(c, m.level(), r, std::move(gens));
}

// Determinant module: rank one, with each generator acting by the sum over
// compositions j_1 + ... + j_r = p^l of the determinant of the matrix whose
// k-th column is the k-th column of the divided image of order j_k.
inline DMod det_module(const DMod& m) {
  const ChartPtr& c = m.chart();
  ActionContext ctx(m);
  const std::size_t r = m.rank();
  std::vector<std::vector<PolyMat>> gens;
  for (std::size_t var = 0; var < c->dim(); ++var) {
    std::vector<PolyMat> per_var;
    std::int64_t pl = 1;
    for (int l = 0; l <= m.level(); ++l) {
      RingElem scalar = RingElem::zero(c);
      std::vector<std::int64_t> parts(r, 0);
      parts[0] = pl;
      while (true) {
        PolyMat mixed(c, r, r);
        bool nonzero = true;
        for (std::size_t k = 0; k < r && nonzero; ++k) {
          const PolyMat th = ctx.divided_theta(var, parts[k]);
          nonzero = false;
          for (std::size_t i = 0; i < r; ++i) {
            mixed.at(i, k) = th.at(i, k);
            if (!mixed.at(i, k).is_zero()) nonzero = true;
          }
        }
        if (nonzero) scalar += determinant(mixed);
        // next composition of pl into r ordered nonnegative parts
        if (r == 1) break;
        std::size_t k = 0;
        while (k + 1 < r && parts[k] == 0) ++k;
        if (k + 1 == r) break;
        const std::int64_t head = parts[k];
        parts[k] = 0;
        parts[0] = head - 1;
        parts[k + 1] += 1;
      }
      PolyMat b(c, 1, 1);
      b.at(0, 0) = scalar;
      per_var.push_back(std::move(b));
      pl *= c->p();
    }
    gens.push_back(std::move(per_var));
  }
  return DMod(c, m.level(), 1, std::move(gens));
}

// Rank-one level-0 module d + a from a 1-form a.
inline DMod invertible_from_form(const OneForm& a) {
  const ChartPtr& c = a.chart();
  std::vector<std::vector<PolyMat>> gens;
  for (std::size_t var = 0; var < c->dim(); ++var) {
    PolyMat b(c, 1, 1);
    b.at(0, 0) = a.component(var);
    gens.push_back({std::move(b)});
  }
  return DMod(c, 0, 1, std::move(gens));
}

}  // namespace frobstruct
