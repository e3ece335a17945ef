#pragma once

// Tango structures on polynomial charts and the local bundle they classify.
//
// The quotient of the chart ring by its subring of p^N-th powers splits
// canonically on a polynomial chart: every coset has exactly one
// representative with no monomial whose exponent vector is divisible by
// p^N. BSection stores that representative. A Tango candidate is a full
// set of such sections, one per variable, and verifies when the Jacobian
// of the representatives has unit determinant; the choice of
// representatives does not matter because derivations kill p-th powers.
//
// The second half of the file builds the rank-p^N bundle obtained by
// pulling back the pushforward of the structure sheaf along the N-fold
// Frobenius. Its canonical action is componentwise in the basis 1 (x) x^a.
// The kappa map sends the divided operators of order below p^N applied to
// the staircase section D to a basis of the bundle, and the induced
// decreasing filtration interacts with the action one order at a time.

#include <frobstruct/arith.hpp>
#include <frobstruct/chart.hpp>
#include <frobstruct/dmod.hpp>
#include <frobstruct/indigenous.hpp>
#include <frobstruct/polymat.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace frobstruct {

namespace detail {

inline std::int64_t checked_prime_power(std::int64_t p, int N,
                                        const char* who) {
  if (N < 1) throw std::invalid_argument(std::string(who) + ": N must be >= 1");
  std::int64_t pw = 1;
  for (int i = 0; i < N; ++i) {
    if (pw > (std::int64_t{1} << 60) / p)
      throw std::invalid_argument(std::string(who) + ": p^N overflows");
    pw *= p;
  }
  return pw;
}

inline void require_polynomial_chart(const ChartPtr& c, const char* who) {
  for (std::size_t i = 0; i < c->dim(); ++i)
    if (c->laurent(i))
      throw std::invalid_argument(std::string(who) +
                                  ": needs a polynomial chart");
}

}  // namespace detail

// One element of the quotient by p^N-th powers, held by its canonical
// representative: the input with every monomial whose exponent vector is
// divisible by p^N deleted. Constants are p^N-th powers, so they vanish.
struct BSection {
  ChartPtr chart;
  int N = 1;
  RingElem rep;

  BSection(const RingElem& f, int level_N)
      : chart(f.chart()), N(level_N), rep(RingElem::zero(chart)) {
    detail::require_polynomial_chart(chart, "b_project");
    const std::int64_t pw =
        detail::checked_prime_power(chart->p(), N, "b_project");
    for (const auto& [e, coef] : f.terms()) {
      bool power = true;
      for (std::int64_t h : e) power = power && (h % pw == 0);
      if (!power) rep.add_term(e, coef);
    }
  }
};

inline bool operator==(const BSection& a, const BSection& b) {
  return *a.chart == *b.chart && a.N == b.N && a.rep == b.rep;
}

inline BSection b_project(const RingElem& f, int N) { return BSection(f, N); }

// The differential of any representative. Well defined on cosets because
// d kills p-th powers, and p^N-divisible monomials are p-th powers.
inline OneForm gamma(const BSection& b) { return OneForm::d(b.rep); }

struct TangoCandidate {
  ChartPtr chart;
  int N = 1;
  std::vector<BSection> gens;

  TangoCandidate(ChartPtr c, int level_N, std::vector<BSection> g)
      : chart(std::move(c)), N(level_N), gens(std::move(g)) {
    if (gens.size() != chart->dim())
      throw std::invalid_argument(
          "tango candidate: need one generator per chart variable");
    for (const BSection& b : gens) {
      require_same_chart(b.chart, chart);
      if (b.N != N)
        throw std::invalid_argument("tango candidate: generator level differs");
      if (b.rep.is_zero())
        throw std::invalid_argument(
            "tango candidate: generator projects to zero");
    }
  }

  TangoCandidate(const ChartPtr& c, int level_N,
                 const std::vector<RingElem>& raw)
      : TangoCandidate(c, level_N, [&] {
          std::vector<BSection> g;
          g.reserve(raw.size());
          for (const RingElem& f : raw) g.emplace_back(f, level_N);
          return g;
        }()) {}
};

inline bool operator==(const TangoCandidate& a, const TangoCandidate& b) {
  return *a.chart == *b.chart && a.N == b.N && a.gens == b.gens;
}

// Unit determinant of the Jacobian (du_i / dx_j) of the representatives.
inline bool tango_verify(const TangoCandidate& U) {
  const std::size_t n = U.chart->dim();
  PolyMat jac(U.chart, n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) jac.at(i, j) = derive(U.gens[i].rep, j);
  return determinant(jac).is_unit();
}

// Re-projects the representatives to a lower level. The deleted monomials
// are p^N-divisible, hence killed by every derivation, so the Jacobian is
// untouched and the result verifies whenever the input does.
inline TangoCandidate truncate(const TangoCandidate& U, int N) {
  if (N < 1 || N >= U.N)
    throw std::invalid_argument("truncate: need 1 <= N < current level");
  if (!tango_verify(U))
    throw std::invalid_argument("truncate: candidate does not verify");
  std::vector<BSection> g;
  g.reserve(U.gens.size());
  for (const BSection& b : U.gens) g.emplace_back(b.rep, N);
  return TangoCandidate(U.chart, N, std::move(g));
}

// A rank-one action on the trivialized module of 1-forms is a dual affine
// connection when it is dormant and the order-1 solutions, read as forms
// f dx, are exact, which over the chart ring means killed by the Cartier
// operator.
inline bool dual_affine_check(const DMod& m) {
  detail::require_univariate_module(m, "dual_affine_check");
  if (m.rank() != 1)
    throw std::invalid_argument("dual_affine_check: module must have rank 1");
  DormancyResult dr = dormancy(m);
  if (!dr.dormant) return false;
  const ChartPtr& c = m.chart();
  const OneForm dx = OneForm::d(RingElem::variable(c, 0));
  SolBasis sol = sol_level0(m.level0_truncation());
  for (const auto& v : sol.vectors)
    if (!cartier(v[0] * dx).is_zero()) return false;
  return true;
}

// The affine-indigenous module attached to a univariate Tango structure.
// The preimage of <u> among p^N-th roots is free on 1 and u; pulling back,
// dualizing and keeping the canonical action gives the trivial rank-2
// action, with the evaluation functional (1, u) as line and the
// coefficient-of-1 functional (1, 0) as splitting.
inline AffineIndigenousCandidate tango_to_module(const TangoCandidate& U) {
  if (U.chart->dim() != 1)
    throw std::invalid_argument("tango_to_module: needs a univariate chart");
  if (!tango_verify(U))
    throw std::invalid_argument("tango_to_module: candidate does not verify");
  const ChartPtr& c = U.chart;
  AffineIndigenousCandidate cand(
      dual_module(DMod::trivial(c, U.N - 1, 2)),
      {RingElem::one(c), U.gens[0].rep},
      {RingElem::one(c), RingElem::zero(c)});
  if (!is_indigenous(cand) || !affine_check(cand) ||
      !dormancy(cand.module).dormant)
    throw std::logic_error(
        "tango_to_module: reconstruction failed its structural checks");
  return cand;
}

// Juxtaposes two structures on the product chart. Generators keep their
// own variables, so the Jacobian is block diagonal and verification is
// inherited from the factors.
inline TangoCandidate product(const TangoCandidate& U1,
                              const TangoCandidate& U2) {
  if (U1.chart->p() != U2.chart->p())
    throw std::invalid_argument("product: characteristics differ");
  if (U1.N != U2.N) throw std::invalid_argument("product: levels differ");
  if (!tango_verify(U1) || !tango_verify(U2))
    throw std::invalid_argument("product: both factors must verify");
  std::vector<std::string> names;
  for (std::size_t i = 0; i < U1.chart->dim(); ++i)
    names.push_back(U1.chart->var_name(i));
  for (std::size_t i = 0; i < U2.chart->dim(); ++i)
    names.push_back(U2.chart->var_name(i));
  ChartPtr prod = make_chart(U1.chart->p(), std::move(names));

  auto embed = [&prod](const RingElem& f, std::size_t offset) {
    RingElem g = RingElem::zero(prod);
    for (const auto& [e, coef] : f.terms()) {
      MultiIndex e2(prod->dim(), 0);
      for (std::size_t i = 0; i < e.size(); ++i) e2[offset + i] = e[i];
      g.add_term(std::move(e2), coef);
    }
    return g;
  };

  std::vector<RingElem> reps;
  reps.reserve(prod->dim());
  for (const BSection& b : U1.gens) reps.push_back(embed(b.rep, 0));
  for (const BSection& b : U2.gens)
    reps.push_back(embed(b.rep, U1.chart->dim()));
  return TangoCandidate(prod, U1.N, reps);
}

// The rank-p^N bundle with basis 1 (x) x^a and its canonical action, which
// differentiates the pulled-back factor only and is therefore trivial in
// this basis.
struct ANLBundle {
  ChartPtr chart;
  int N = 1;
  DMod module;
};

inline ANLBundle anl_bundle(const ChartPtr& chart, int N) {
  if (chart->dim() != 1)
    throw std::invalid_argument("anl_bundle: needs a univariate chart");
  detail::require_polynomial_chart(chart, "anl_bundle");
  const std::int64_t r =
      detail::checked_prime_power(chart->p(), N, "anl_bundle");
  if (r > 4096)
    throw std::invalid_argument("anl_bundle: rank p^N exceeds 4096");
  ANLBundle out{chart, N, DMod::trivial(chart, N - 1, std::size_t(r))};
  ValidationReport rep = validate(out.module);
  if (!rep.ok)
    throw std::logic_error("anl_bundle: canonical action fails validation: " +
                           rep.message);
  return out;
}

namespace detail {

// Columns kappa_r = (1/q_r!) D<r>(D) of the staircase section
// D = sum_a x^(p^N - a - 1) (x) x^a, for r = 0 .. p^N - 1. Every q_r! is a
// unit in this range, so the divided operators are available.
inline std::vector<std::vector<RingElem>> kappa_columns(
    const ANLBundle& bundle) {
  const ChartPtr& c = bundle.chart;
  const FpConfig& fp = c->field();
  const std::int64_t r = std::int64_t(bundle.module.rank());
  const LevelIndex lev(bundle.N - 1);
  std::vector<RingElem> D;
  D.reserve(std::size_t(r));
  for (std::int64_t a = 0; a < r; ++a)
    D.push_back(RingElem::monomial(c, {r - a - 1}, 1));
  ActionContext ctx(bundle.module);
  std::vector<std::vector<RingElem>> cols;
  cols.reserve(std::size_t(r));
  cols.push_back(D);
  for (std::int64_t k = 1; k < r; ++k) {
    const std::int64_t unit = fp.inv(q_factorial_mod(k, lev, fp));
    std::vector<RingElem> w = ctx.basis_action(0, k).apply(D);
    for (auto& f : w) f = f.scaled(unit);
    cols.push_back(std::move(w));
  }
  return cols;
}

}  // namespace detail

struct KappaResult {
  PolyMat matrix;
  RingElem det;
};

// The matrix with columns D, d[1](D), ..., d[p^N - 1](D). Its determinant
// being a unit is what makes the divided operators applied to D a basis.
inline KappaResult kappa_matrix(const ChartPtr& chart, int N) {
  ANLBundle bundle = anl_bundle(chart, N);
  const std::size_t r = bundle.module.rank();
  if (r > 16)
    throw std::invalid_argument(
        "kappa_matrix: p^N exceeds the determinant size cap");
  PolyMat mat = PolyMat::from_columns(chart, detail::kappa_columns(bundle));
  RingElem det = determinant(mat);
  if (!det.is_unit())
    throw std::logic_error("kappa_matrix: determinant is not a unit");
  return {std::move(mat), std::move(det)};
}

// Filtration checks on the local bundle. A^i is spanned by the kappa
// columns of order at most p^N - 1 - i, a decreasing chain from the whole
// bundle down to zero. The report verifies that order-j operators carry
// A^i into A^(i-j) for every 0 <= j <= i <= p^N, and that the single-step
// graded maps are isomorphisms for i = 1 .. p-1. Beyond that range the
// single-step maps degenerate (the graded multiplier is -i mod p), which
// is why the isomorphism claim stops at p-1.
inline ValidationReport filtration_check(const ChartPtr& chart, int N) {
  ANLBundle bundle = anl_bundle(chart, N);
  const FpConfig& fp = chart->field();
  const LevelIndex lev(bundle.N - 1);
  const std::int64_t rN = std::int64_t(bundle.module.rank());
  std::vector<std::vector<RingElem>> kap = detail::kappa_columns(bundle);

  // spans[k] holds the columns of order <= k; A^i corresponds to
  // k = rN - 1 - i.
  std::vector<PolyMat> spans;
  spans.reserve(std::size_t(rN));
  for (std::int64_t k = 0; k < rN; ++k)
    spans.push_back(PolyMat::from_columns(
        chart, std::vector<std::vector<RingElem>>(kap.begin(),
                                                  kap.begin() + k + 1)));

  ActionContext ctx(bundle.module);
  auto divided_apply = [&](std::int64_t j, const std::vector<RingElem>& v) {
    const std::int64_t unit = fp.inv(q_factorial_mod(j, lev, fp));
    std::vector<RingElem> w = ctx.basis_action(0, j).apply(v);
    for (auto& f : w) f = f.scaled(unit);
    return w;
  };

  // Only the top order j of each operator filtration step needs testing:
  // lower orders are covered by the pair (i, j') with the tighter target
  // A^(i - j'), and order 0 is the module structure itself.
  for (std::int64_t i = 1; i < rN; ++i) {
    for (std::int64_t j = 1; j <= i; ++j) {
      for (std::int64_t r = 0; r <= rN - 1 - i; ++r) {
        std::vector<RingElem> w = divided_apply(j, kap[std::size_t(r)]);
        if (!solve_columns(spans[std::size_t(rN - 1 - (i - j))], w)) {
          return {false, "order " + std::to_string(j) +
                             " action pushes column " + std::to_string(r) +
                             " of A^" + std::to_string(i) +
                             " outside A^" + std::to_string(i - j)};
        }
      }
    }
  }

  for (std::int64_t i = 1; i < chart->p(); ++i) {
    const std::size_t rgen = std::size_t(rN - 1 - i);
    std::vector<RingElem> w = divided_apply(1, kap[rgen]);
    auto g = solve_columns(spans[std::size_t(rN - i)], w);
    if (!g) {
      return {false,
              "graded step at i = " + std::to_string(i) + " left A^" +
                  std::to_string(i - 1)};
    }
    if (!(*g)[std::size_t(rN - i)].is_unit()) {
      return {false, "graded map at i = " + std::to_string(i) +
                         " is not an isomorphism"};
    }
  }

  return {true,
          "containments hold for all orders; graded maps at i = 1 .. p-1 "
          "are isomorphisms"};
}

}  // namespace frobstruct
