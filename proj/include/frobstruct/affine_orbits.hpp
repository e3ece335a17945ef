#pragma once

// Etale polynomial endomorphisms of the affine line over F_p, considered up
// to the level-N substitution action f |-> g(t^{p^N}) + a*f with a a unit
// and g an arbitrary polynomial. A univariate polynomial has constant
// nonzero derivative exactly when it reads c*t plus monomials whose
// exponents are multiples of p, so the orbits of bounded degree form a
// finite set with a closed-form count. Only the one-variable enumeration is
// provided; the n-variable analogue replaces the scalar a by a matrix acting
// over the substitution subring and is a different problem.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include <frobstruct/chart.hpp>
#include <frobstruct/combin.hpp>
#include <frobstruct/polymat.hpp>
#include <frobstruct/tango.hpp>

namespace frobstruct {

// Jacobian criterion for a polynomial self-map of affine n-space: the tuple
// is etale exactly when det(df_i/dx_j) is a nonzero constant.
inline bool is_etale(const std::vector<RingElem>& fs) {
  if (fs.empty()) throw std::invalid_argument("is_etale: empty tuple");
  const ChartPtr chart = fs.front().chart();
  for (const RingElem& f : fs) require_same_chart(chart, f.chart());
  detail::require_polynomial_chart(chart, "is_etale");
  if (fs.size() != chart->dim())
    throw std::invalid_argument(
        "is_etale: tuple size must match the chart dimension");
  PolyMat jac(chart, fs.size(), fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i)
    for (std::size_t j = 0; j < fs.size(); ++j)
      jac.at(i, j) = derive(fs[i], j);
  const RingElem det = determinant(jac);
  return !det.is_zero() && det.is_constant();
}

inline bool is_etale(const RingElem& f) {
  return is_etale(std::vector<RingElem>{f});
}

// An etale endomorphism of the affine line, tagged with the level N of the
// substitution subring it is considered against.
struct EtaleRep {
  ChartPtr chart;
  int N = 1;
  RingElem f;

  EtaleRep(const RingElem& poly, int level_N)
      : chart(poly.chart()), N(level_N), f(poly) {
    if (chart->dim() != 1)
      throw std::invalid_argument("EtaleRep: needs a univariate chart");
    detail::require_polynomial_chart(chart, "EtaleRep");
    detail::checked_prime_power(chart->p(), N, "EtaleRep");
    if (!is_etale(f))
      throw std::invalid_argument(
          "EtaleRep: derivative must be a nonzero constant");
  }
};

inline bool operator==(const EtaleRep& a, const EtaleRep& b) {
  return *a.chart == *b.chart && a.N == b.N && a.f == b.f;
}
inline bool operator!=(const EtaleRep& a, const EtaleRep& b) {
  return !(a == b);
}

// Unique orbit representative. Scaling by the inverse of the linear
// coefficient normalizes it to one; the additive part g(t^{p^N}) absorbs
// precisely the monomials with p^N-divisible exponent (the constant term
// included), so dropping them is the rest of the reduction. What survives
// is t + sum c_i t^i over indices i with p | i and p^N not dividing i, and
// those coefficients are orbit invariants.
inline EtaleRep canonical_rep(const EtaleRep& r) {
  const std::int64_t lin = r.f.coeff(MultiIndex{1});
  const RingElem unit_scaled = r.f.scaled(r.chart->field().inv(lin));
  return EtaleRep(b_project(unit_scaled, r.N).rep, r.N);
}

// Number of orbits with a representative of degree <= degree_bound. Closed
// form p^{#{i <= d : p | i, p^N does not divide i}}, one factor of p per
// surviving coefficient slot. The count is cross-checked by enumerating
// every etale polynomial of degree <= d over F_p, all
// (p-1) * p^{#{i <= d : p | i, i = 0 included}} of them, and collapsing the
// enumeration through canonical_rep; the check throws on disagreement.
inline boost::multiprecision::cpp_int count_orbits(std::int64_t p, int N,
                                                   std::int64_t degree_bound,
                                                   std::int64_t cap = 1000000) {
  using boost::multiprecision::cpp_int;
  detail::require_prime(p, "count_orbits");
  const std::int64_t q = detail::checked_prime_power(p, N, "count_orbits");
  if (degree_bound < 1)
    throw std::invalid_argument("count_orbits: degree bound must be >= 1");

  std::vector<std::int64_t> slots{0};
  unsigned surviving = 0;
  for (std::int64_t i = p; i <= degree_bound; i += p) {
    slots.push_back(i);
    if (i % q != 0) ++surviving;
  }
  const cpp_int closed = boost::multiprecision::pow(cpp_int(p), surviving);

  const cpp_int work =
      (p - 1) * boost::multiprecision::pow(cpp_int(p), unsigned(slots.size()));
  if (work > cap)
    throw CapExceeded("count_orbits: enumeration size " + work.str() +
                      " exceeds cap " + std::to_string(cap));

  const ChartPtr chart = make_chart(p, {"t"});
  std::set<std::map<MultiIndex, std::int64_t>> reps;
  std::vector<std::int64_t> digits(slots.size(), 0);
  for (std::int64_t lin = 1; lin < p; ++lin) {
    std::fill(digits.begin(), digits.end(), 0);
    while (true) {
      RingElem f = RingElem::monomial(chart, MultiIndex{1}, lin);
      for (std::size_t k = 0; k < digits.size(); ++k)
        if (digits[k] != 0)
          f += RingElem::monomial(chart, MultiIndex{slots[k]}, digits[k]);
      reps.insert(canonical_rep(EtaleRep(f, N)).f.terms());
      std::size_t k = 0;
      while (k < digits.size() && ++digits[k] == p) digits[k++] = 0;
      if (k == digits.size()) break;
    }
  }
  if (cpp_int(reps.size()) != closed)
    throw std::logic_error(
        "count_orbits: enumeration disagrees with the closed form");
  return closed;
}

}  // namespace frobstruct
