#include <catch2/catch_amalgamated.hpp>

#include <frobstruct/affine_orbits.hpp>

#include <cstdint>
#include <random>
#include <vector>

using namespace frobstruct;

namespace {

// Independent count of the surviving coefficient slots: exponents i <= d
// that are divisible by p but not by p^N.
std::int64_t surviving_slots(std::int64_t p, int N, std::int64_t d) {
  std::int64_t q = 1;
  for (int i = 0; i < N; ++i) q *= p;
  std::int64_t out = 0;
  for (std::int64_t i = p; i <= d; i += p)
    if (i % q != 0) ++out;
  return out;
}

boost::multiprecision::cpp_int ipow(std::int64_t b, std::int64_t e) {
  boost::multiprecision::cpp_int r = 1;
  for (std::int64_t i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

TEST_CASE("jacobian criterion classifies etale maps") {
  const auto c = make_chart(3, {"t"});
  const RingElem t = RingElem::variable(c, 0);

  CHECK(is_etale(t));
  CHECK(is_etale(t - t * t * t));
  CHECK(is_etale(t.scaled(2) + RingElem::monomial(c, {9}, 1)));
  CHECK_FALSE(is_etale(t * t));
  CHECK_FALSE(is_etale(t * t * t));
  CHECK_FALSE(is_etale(t + t * t));
  CHECK_FALSE(is_etale(RingElem::zero(c)));

  SECTION("tuples on a surface chart") {
    const auto s = make_chart(3, {"x", "y"});
    const RingElem x = RingElem::variable(s, 0);
    const RingElem y = RingElem::variable(s, 1);
    CHECK(is_etale({x, y}));
    CHECK(is_etale({x - x * x * x + y * y * y, y + x * x * x}));
    CHECK_FALSE(is_etale({x * y, y}));
    CHECK_FALSE(is_etale({x.scaled(2) + y, x + y.scaled(2)}));
    CHECK_FALSE(is_etale({x, x}));
  }

  SECTION("structural misuse is rejected") {
    const auto s = make_chart(3, {"x", "y"});
    const auto l = make_chart(3, {"t"}, {true});
    CHECK_THROWS_AS(is_etale(std::vector<RingElem>{}), std::invalid_argument);
    CHECK_THROWS_AS(is_etale(RingElem::variable(s, 0)), std::invalid_argument);
    CHECK_THROWS_AS(is_etale({t, RingElem::variable(s, 0)}), ChartMismatch);
    CHECK_THROWS_AS(is_etale(RingElem::variable(l, 0)), std::invalid_argument);
  }
}

TEST_CASE("etale representatives validate their shape") {
  const auto c = make_chart(3, {"t"});
  const RingElem t = RingElem::variable(c, 0);

  const EtaleRep r(t - t * t * t, 2);
  CHECK(r.N == 2);
  CHECK(r.chart->p() == 3);
  CHECK(r == EtaleRep(t - t * t * t, 2));
  CHECK(r != EtaleRep(t - t * t * t, 1));
  CHECK(r != EtaleRep(t, 2));

  CHECK_THROWS_AS(EtaleRep(t * t, 1), std::invalid_argument);
  CHECK_THROWS_AS(EtaleRep(RingElem::zero(c), 1), std::invalid_argument);
  CHECK_THROWS_AS(EtaleRep(t, 0), std::invalid_argument);
  const auto s = make_chart(3, {"x", "y"});
  CHECK_THROWS_AS(EtaleRep(RingElem::variable(s, 0), 1), std::invalid_argument);
  const auto l = make_chart(3, {"t"}, {true});
  CHECK_THROWS_AS(EtaleRep(RingElem::variable(l, 0), 1), std::invalid_argument);
}

TEST_CASE("canonical representative matches the frozen examples") {
  const auto c = make_chart(3, {"t"});
  const RingElem t = RingElem::variable(c, 0);
  const RingElem t3 = RingElem::monomial(c, {3}, 1);
  const RingElem t6 = RingElem::monomial(c, {6}, 1);
  const RingElem t9 = RingElem::monomial(c, {9}, 1);

  CHECK(canonical_rep(EtaleRep(t.scaled(2) + t9, 2)).f == t);
  CHECK(canonical_rep(EtaleRep(t - t3, 2)).f == t + t3.scaled(2));
  CHECK(canonical_rep(EtaleRep(t, 1)).f == t);
  CHECK(canonical_rep(EtaleRep(t, 2)).f == t);

  SECTION("the additive part absorbs constants and p^N-th power exponents") {
    CHECK(canonical_rep(EtaleRep(RingElem::one(c) + t, 1)).f == t);
    CHECK(canonical_rep(EtaleRep(RingElem::constant(c, 2) + t + t3, 2)).f ==
          t + t3);
    CHECK(canonical_rep(EtaleRep(t + t9 + RingElem::monomial(c, {18}, 2), 2)).f ==
          t);
    CHECK(canonical_rep(EtaleRep(t + t3 + t9, 2)).f == t + t3);
  }

  SECTION("level one deletes every p-divisible exponent") {
    CHECK(canonical_rep(EtaleRep(t + t3.scaled(2) + t6, 1)).f == t);
  }

  SECTION("scaling commutes with the reduction") {
    const RingElem f = t + t3.scaled(2) + t6;
    CHECK(canonical_rep(EtaleRep(f.scaled(2), 2)).f == f);
  }
}

TEST_CASE("canonical representative is idempotent and constant on orbits") {
  const auto c = make_chart(3, {"t"});
  const RingElem t = RingElem::variable(c, 0);
  const RingElem base = t + RingElem::monomial(c, {3}, 1) +
                        RingElem::monomial(c, {6}, 2);
  const EtaleRep canon = canonical_rep(EtaleRep(base, 2));
  CHECK(canon.f == base);

  std::mt19937 rng(430217);
  std::uniform_int_distribution<std::int64_t> unit(1, 2);
  std::uniform_int_distribution<std::int64_t> coef(0, 2);
  for (int trial = 0; trial < 100; ++trial) {
    RingElem moved = base.scaled(unit(rng));
    for (std::int64_t j = 0; j <= 3; ++j) {
      const std::int64_t g = coef(rng);
      if (g != 0) moved += RingElem::monomial(c, {9 * j}, g);
    }
    const EtaleRep again = canonical_rep(EtaleRep(moved, 2));
    CHECK(again == canon);
    CHECK(canonical_rep(again) == again);
  }

  SECTION("every level-one orbit is the trivial one") {
    std::uniform_int_distribution<std::int64_t> pick(0, 2);
    for (int trial = 0; trial < 50; ++trial) {
      RingElem f = t.scaled(unit(rng));
      for (std::int64_t i = 0; i <= 9; i += 3) {
        const std::int64_t v = pick(rng);
        if (v != 0) f += RingElem::monomial(c, {i}, v);
      }
      CHECK(canonical_rep(EtaleRep(f, 1)).f == t);
    }
  }
}

TEST_CASE("distinct orbits at level two, merged at level one") {
  const auto c = make_chart(3, {"t"});
  const RingElem t = RingElem::variable(c, 0);
  const RingElem twisted = t - t * t * t;
  CHECK(canonical_rep(EtaleRep(t, 2)) != canonical_rep(EtaleRep(twisted, 2)));
  CHECK(canonical_rep(EtaleRep(t, 1)) == canonical_rep(EtaleRep(twisted, 1)));
}

TEST_CASE("orbit counts match the closed form and the frozen values") {
  CHECK(count_orbits(3, 1, 9) == 1);
  CHECK(count_orbits(3, 2, 9) == 9);
  CHECK(count_orbits(3, 2, 3) == 3);
  CHECK(count_orbits(3, 2, 1) == 1);
  CHECK(count_orbits(3, 2, 12) == 27);
  CHECK(count_orbits(5, 2, 25) == 625);
}

TEST_CASE("level-one counts collapse for every degree bound") {
  for (std::int64_t d = 1; d <= 20; ++d) {
    CHECK(count_orbits(3, 1, d) == 1);
    CHECK(count_orbits(5, 1, d) == 1);
  }
}

TEST_CASE("counts are monotone in the degree bound and follow the index rule") {
  boost::multiprecision::cpp_int prev = 0;
  for (std::int64_t d = 1; d <= 18; ++d) {
    const auto cnt = count_orbits(3, 2, d);
    CHECK(cnt == ipow(3, surviving_slots(3, 2, d)));
    CHECK(cnt >= prev);
    prev = cnt;
  }
}

TEST_CASE("enumeration cap and input gates") {
  CHECK_THROWS_AS(count_orbits(3, 2, 30, 100), CapExceeded);
  CHECK_THROWS_AS(count_orbits(4, 1, 3), std::invalid_argument);
  CHECK_THROWS_AS(count_orbits(3, 0, 3), std::invalid_argument);
  CHECK_THROWS_AS(count_orbits(3, 1, 0), std::invalid_argument);
}
