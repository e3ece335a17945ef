#pragma once

// Exact coefficient arithmetic for the level-m divided-power calculus.
//
// Everything downstream (operator rings, module actions, descent) reduces to
// three families of structure constants attached to a prime p and a level m:
//
//   q_r   the quotient of r by p^m (zero when m is infinite),
//   {a+b over a} = q_{a+b}! / (q_a! q_b!)        an integer,
//   <l1 over l2> = binom(l1,l2) / {l1 over l2}   a rational with p-unit
//                                                denominator.
//
// All of them are evaluated over exact big integers or rationals first and
// only then reduced into F_p. Divisibility is asserted, never assumed: a
// failed assertion raises IntegralityViolation instead of truncating.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>

#include <boost/multiprecision/cpp_int.hpp>

namespace frobstruct {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

// Raised when a quantity that must be an integer (or p-integral) is not.
// In a correct run this never fires; it guards the divisibility facts the
// calculus relies on rather than trusting them silently.
struct IntegralityViolation : std::runtime_error {
  explicit IntegralityViolation(const std::string& msg)
      : std::runtime_error(msg) {}
};

namespace detail {

inline bool is_prime(std::int64_t n) {
  if (n < 2) return false;
  for (std::int64_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

}  // namespace detail

// The base prime field F_p. Elements are plain integers kept in [0, p).
// Odd primes by default; p = 2 must be requested explicitly because the
// worked examples this library targets all assume p > 2.
class FpConfig {
 public:
  explicit FpConfig(std::int64_t p, bool allow_two = false) : p_(p) {
    if (!detail::is_prime(p))
      throw std::invalid_argument("FpConfig: " + std::to_string(p) +
                                  " is not prime");
    if (p == 2 && !allow_two)
      throw std::invalid_argument("FpConfig: p = 2 needs explicit opt-in");
    if (p >= (std::int64_t{1} << 31))
      throw std::invalid_argument("FpConfig: prime too large");
  }

  std::int64_t p() const { return p_; }

  std::int64_t reduce(std::int64_t v) const {
    std::int64_t r = v % p_;
    return r < 0 ? r + p_ : r;
  }

  std::int64_t reduce(const BigInt& v) const {
    BigInt r = v % p_;
    if (r < 0) r += p_;
    return r.convert_to<std::int64_t>();
  }

  // Reduction of an exact rational. The denominator (already in lowest
  // terms) must be prime to p.
  std::int64_t reduce(const BigRat& v) const {
    const BigInt den = boost::multiprecision::denominator(v);
    if (den % p_ == 0)
      throw IntegralityViolation("denominator divisible by p: " + v.str());
    return mul(reduce(boost::multiprecision::numerator(v)), inv(reduce(den)));
  }

  std::int64_t add(std::int64_t a, std::int64_t b) const {
    return (a + b) % p_;
  }
  std::int64_t sub(std::int64_t a, std::int64_t b) const {
    return reduce(a - b);
  }
  std::int64_t neg(std::int64_t a) const { return a == 0 ? 0 : p_ - a; }
  std::int64_t mul(std::int64_t a, std::int64_t b) const {
    return (a * b) % p_;  // inputs reduced and p < 2^31, no overflow
  }

  std::int64_t pow(std::int64_t a, std::int64_t e) const {
    if (e < 0) return pow(inv(a), -e);
    std::int64_t base = reduce(a), acc = 1;
    while (e > 0) {
      if (e & 1) acc = mul(acc, base);
      base = mul(base, base);
      e >>= 1;
    }
    return acc;
  }

  std::int64_t inv(std::int64_t a) const {
    std::int64_t r = reduce(a);
    if (r == 0) throw std::domain_error("FpConfig: inverse of zero");
    return pow(r, p_ - 2);
  }

  bool operator==(const FpConfig&) const = default;

 private:
  std::int64_t p_;
};

// The operator level: a nonnegative integer m or infinity. The infinite
// level makes every quotient digit q_r vanish, so braces collapse to 1 and
// angles to plain binomials.
class LevelIndex {
 public:
  LevelIndex(int m) : m_(m) {  // NOLINT: implicit by design, reads naturally
    if (m < 0) throw std::invalid_argument("LevelIndex: negative level");
  }

  static LevelIndex infinity() { return LevelIndex(kInfinity, Tag{}); }

  bool is_infinite() const { return m_ == kInfinity; }

  int value() const {
    if (is_infinite())
      throw std::logic_error("LevelIndex: infinite level has no value");
    return m_;
  }

  bool operator==(const LevelIndex&) const = default;

 private:
  struct Tag {};
  LevelIndex(int m, Tag) : m_(m) {}
  static constexpr int kInfinity = -1;
  int m_;
};

inline BigInt big_pow(std::int64_t base, int exp) {
  BigInt r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

inline BigInt factorial(std::int64_t n) {
  if (n < 0) throw std::invalid_argument("factorial of negative argument");
  BigInt r = 1;
  for (std::int64_t i = 2; i <= n; ++i) r *= i;
  return r;
}

// q_r from the division r = q_r * p^m + l with 0 <= l < p^m.
inline std::int64_t quotient_part(std::int64_t r, LevelIndex m,
                                  const FpConfig& cfg) {
  if (r < 0) throw std::invalid_argument("quotient_part: negative order");
  if (m.is_infinite()) return 0;
  BigInt q = BigInt(r) / big_pow(cfg.p(), m.value());
  return q.convert_to<std::int64_t>();
}

inline BigInt q_factorial(std::int64_t r, LevelIndex m, const FpConfig& cfg) {
  return factorial(quotient_part(r, m, cfg));
}

// binom(h, r) for an arbitrary integer h, as the exact integer
// h(h-1)...(h-r+1)/r!. Defined for every integer h; this is what extends
// the divided derivative to Laurent monomials.
inline BigInt binomial_exact(const BigInt& h, std::int64_t r) {
  if (r < 0) throw std::invalid_argument("binomial_exact: negative lower");
  BigInt num = 1;
  for (std::int64_t i = 0; i < r; ++i) num *= h - i;
  BigInt q, rem;
  boost::multiprecision::divide_qr(num, factorial(r), q, rem);
  if (rem != 0)
    throw IntegralityViolation("falling factorial not divisible by r!");
  return q;
}

// {a+b over a} as an exact integer.
inline BigInt brace_exact(std::int64_t a, std::int64_t b, LevelIndex m,
                          const FpConfig& cfg) {
  BigInt den = q_factorial(a, m, cfg) * q_factorial(b, m, cfg);
  BigInt q, rem;
  boost::multiprecision::divide_qr(q_factorial(a + b, m, cfg), den, q, rem);
  if (rem != 0)
    throw IntegralityViolation("brace quotient " + std::to_string(a) + "," +
                               std::to_string(b) + " not integral");
  return q;
}

namespace detail {

// Memo key for the reduced structure constants. The operator composition
// layer asks for the same handful of coefficients millions of times, so the
// reduced values are cached per (p, level, arguments). thread_local keeps
// the free functions safe for concurrent use.
using CoeffKey = std::tuple<std::int64_t, int, std::int64_t, std::int64_t>;

inline int level_key(LevelIndex m) { return m.is_infinite() ? -1 : m.value(); }

}  // namespace detail

inline std::int64_t brace_coeff(std::int64_t a, std::int64_t b, LevelIndex m,
                                const FpConfig& cfg) {
  thread_local std::map<detail::CoeffKey, std::int64_t> memo;
  const detail::CoeffKey key{cfg.p(), detail::level_key(m), a, b};
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  const std::int64_t v = cfg.reduce(brace_exact(a, b, m, cfg));
  memo.emplace(key, v);
  return v;
}

// <l1 over l2> as an exact rational. Its reduced denominator is prime to p
// for every input this library generates; reduction asserts that.
inline BigRat angle_exact(std::int64_t l1, std::int64_t l2, LevelIndex m,
                          const FpConfig& cfg) {
  if (l2 < 0 || l2 > l1)
    throw std::invalid_argument("angle_exact: need 0 <= l2 <= l1");
  return BigRat(binomial_exact(BigInt(l1), l2),
                brace_exact(l2, l1 - l2, m, cfg));
}

inline std::int64_t angle_coeff(std::int64_t l1, std::int64_t l2, LevelIndex m,
                                const FpConfig& cfg) {
  thread_local std::map<detail::CoeffKey, std::int64_t> memo;
  const detail::CoeffKey key{cfg.p(), detail::level_key(m), l1, l2};
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  const std::int64_t v = cfg.reduce(angle_exact(l1, l2, m, cfg));
  memo.emplace(key, v);
  return v;
}

inline std::int64_t generalized_binomial(std::int64_t h, std::int64_t r,
                                         const FpConfig& cfg) {
  thread_local std::map<detail::CoeffKey, std::int64_t> memo;
  const detail::CoeffKey key{cfg.p(), 0, h, r};
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  const std::int64_t v = cfg.reduce(binomial_exact(BigInt(h), r));
  memo.emplace(key, v);
  return v;
}

// Reduced q_r! with the same memoization.
inline std::int64_t q_factorial_mod(std::int64_t r, LevelIndex m,
                                    const FpConfig& cfg) {
  thread_local std::map<detail::CoeffKey, std::int64_t> memo;
  const detail::CoeffKey key{cfg.p(), detail::level_key(m), r, 0};
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  const std::int64_t v = cfg.reduce(q_factorial(r, m, cfg));
  memo.emplace(key, v);
  return v;
}

// q_r!(at level m1) / q_r!(at level m2) for m1 <= m2, an exact integer.
// This is the coefficient by which the level-raising map rescales the basis
// symbol of order r.
inline BigInt level_factorial_ratio(std::int64_t r, LevelIndex m1,
                                    LevelIndex m2, const FpConfig& cfg) {
  if (!m1.is_infinite() && !m2.is_infinite() && m1.value() > m2.value())
    throw std::invalid_argument("level_factorial_ratio: need m1 <= m2");
  if (m1.is_infinite() && !m2.is_infinite())
    throw std::invalid_argument("level_factorial_ratio: need m1 <= m2");
  BigInt q, rem;
  boost::multiprecision::divide_qr(q_factorial(r, m1, cfg),
                                   q_factorial(r, m2, cfg), q, rem);
  if (rem != 0)
    throw IntegralityViolation("level ratio not integral at order " +
                               std::to_string(r));
  return q;
}

}  // namespace frobstruct
