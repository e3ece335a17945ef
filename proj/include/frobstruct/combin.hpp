#pragma once

// Counting layer: basis tuples of the finite-level Tate module, their
// symmetric and delta quotients, group-invariant classes, Chern-number
// obstruction arithmetic for surfaces, and the closed genus count.
//
// Everything here is elementary arithmetic over Z/p^N. Tuples are stored
// as vectors of row vectors with entries reduced to [0, p^N). Enumeration
// happens odometer-style so outputs are always lexicographically sorted.

#include <frobstruct/arith.hpp>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cstdint>
#include <ios>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace frobstruct {

using TateVec = std::vector<std::int64_t>;
using TateMat = std::vector<TateVec>;
// Rows are the tuple entries b_1, ..., b_n of (Z/p^N)^n.
using BTuple = TateMat;

struct CapExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RatioViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// Rank, level and characteristic of the module (Z/p^N)^n.
struct TateLevel {
  int n = 1;
  int N = 1;
  std::int64_t p = 2;
};

namespace detail {

inline void require_prime(std::int64_t p, const char* who) {
  if (!is_prime(p))
    throw std::invalid_argument(std::string(who) + ": p must be prime");
}

inline void require_level(const TateLevel& lvl, const char* who) {
  require_prime(lvl.p, who);
  if (lvl.n < 1 || lvl.N < 1)
    throw std::invalid_argument(std::string(who) + ": need n >= 1 and N >= 1");
}

inline std::int64_t pow_int(std::int64_t base, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

inline bool unit_det_mod_p(const TateMat& m, std::int64_t p) {
  const std::size_t n = m.size();
  std::vector<std::vector<std::int64_t>> w(n, std::vector<std::int64_t>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) w[i][j] = ((m[i][j] % p) + p) % p;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    while (piv < n && w[piv][col] == 0) ++piv;
    if (piv == n) return false;
    std::swap(w[piv], w[col]);
    std::int64_t inv = 1, a = w[col][col] % p;
    for (std::int64_t x = 1; x < p; ++x)
      if (a * x % p == 1) {
        inv = x;
        break;
      }
    for (std::size_t r = col + 1; r < n; ++r) {
      const std::int64_t f = w[r][col] * inv % p;
      for (std::size_t j = col; j < n; ++j)
        w[r][j] = ((w[r][j] - f * w[col][j]) % p + p) % p;
    }
  }
  return true;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace detail

// All tuples (b_1, ..., b_n) that form a basis, i.e. whose matrix has unit
// determinant mod p, in lexicographic order. The search space has p^{n^2 N}
// candidates and is capped.
inline std::vector<BTuple> enumerate_B(const TateLevel& lvl,
                                       std::int64_t cap = 1000000) {
  detail::require_level(lvl, "enumerate_B");
  const std::int64_t q = detail::pow_int(lvl.p, lvl.N);
  std::int64_t total = 1;
  for (int i = 0; i < lvl.n * lvl.n; ++i) {
    if (total > cap / q)
      throw CapExceeded("enumerate_B: p^(n*n*N) exceeds cap " +
                        std::to_string(cap));
    total *= q;
  }
  const std::size_t cells = std::size_t(lvl.n) * std::size_t(lvl.n);
  std::vector<std::int64_t> digits(cells, 0);
  std::vector<BTuple> out;
  for (;;) {
    BTuple t(std::size_t(lvl.n), TateVec(std::size_t(lvl.n)));
    for (std::size_t i = 0; i < cells; ++i)
      t[i / std::size_t(lvl.n)][i % std::size_t(lvl.n)] = digits[i];
    if (detail::unit_det_mod_p(t, lvl.p)) out.push_back(std::move(t));
    std::size_t pos = cells;
    while (pos > 0 && digits[pos - 1] == q - 1) digits[--pos] = 0;
    if (pos == 0) break;
    ++digits[pos - 1];
  }
  return out;
}

// Closed form for |B|: p^{n^2 (N-1) + n(n-1)/2} * prod_{i=1..n} (p^i - 1).
// A tuple is a basis exactly when its matrix is invertible over Z/p^N, and
// reduction mod p is surjective on invertible matrices with kernel of size
// p^{n^2 (N-1)}, so the count is that power times the order of the mod-p
// general linear group.
inline boost::multiprecision::cpp_int formula_count_B(const TateLevel& lvl) {
  detail::require_level(lvl, "formula_count_B");
  using boost::multiprecision::cpp_int;
  const cpp_int p = lvl.p;
  cpp_int r = boost::multiprecision::pow(
      p, unsigned(lvl.n * lvl.n * (lvl.N - 1) + lvl.n * (lvl.n - 1) / 2));
  cpp_int pi = 1;
  for (int i = 1; i <= lvl.n; ++i) {
    pi *= p;
    r *= pi - 1;
  }
  return r;
}

// Canonical representatives of the symmetric-group quotient. Reordering the
// rows of a tuple reaches exactly one sorted tuple, so sorting rows is the
// lexicographic minimum over the orbit.
inline std::vector<BTuple> sn_classes(const std::vector<BTuple>& tuples) {
  std::vector<BTuple> out;
  out.reserve(tuples.size());
  for (const BTuple& t : tuples) {
    BTuple s = t;
    std::sort(s.begin(), s.end());
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// The displayed generator of the delta relation on an ordered tuple:
// (b_1, ..., b_n) |-> (-b_1, b_2 - b_1, ..., b_n - b_1). Involutive.
inline BTuple delta_image(const BTuple& ordered, const TateLevel& lvl) {
  const std::int64_t q = detail::pow_int(lvl.p, lvl.N);
  BTuple out = ordered;
  for (std::size_t i = 0; i < ordered.size(); ++i)
    for (std::size_t k = 0; k < ordered[i].size(); ++k) {
      const std::int64_t base = i == 0 ? 0 : ordered[i][k];
      out[i][k] = ((base - ordered[0][k]) % q + q) % q;
    }
  return out;
}

namespace detail {

struct DeltaPartition {
  std::vector<BTuple> sn_reps;
  std::map<BTuple, std::size_t> index_of;
  std::vector<std::size_t> root_of;
  std::vector<BTuple> class_reps;

  const BTuple& class_rep_of(const BTuple& sn_rep) const {
    return class_reps[root_of[index_of.at(sn_rep)]];
  }
};

// The relation is generated by applying the delta map to every ordering of
// every class representative and identifying the resulting classes.
inline DeltaPartition delta_partition(const std::vector<BTuple>& tuples,
                                      const TateLevel& lvl) {
  DeltaPartition part;
  part.sn_reps = sn_classes(tuples);
  for (std::size_t i = 0; i < part.sn_reps.size(); ++i)
    part.index_of[part.sn_reps[i]] = i;

  UnionFind uf(part.sn_reps.size());
  for (std::size_t i = 0; i < part.sn_reps.size(); ++i) {
    std::vector<std::size_t> perm(part.sn_reps[i].size());
    std::iota(perm.begin(), perm.end(), 0);
    do {
      BTuple ordered;
      ordered.reserve(perm.size());
      for (std::size_t k : perm) ordered.push_back(part.sn_reps[i][k]);
      BTuple image = delta_image(ordered, lvl);
      std::sort(image.begin(), image.end());
      const auto it = part.index_of.find(image);
      if (it == part.index_of.end())
        throw std::logic_error(
            "delta_partition: image left the enumerated basis set");
      uf.unite(i, it->second);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }

  std::map<std::size_t, BTuple> best;
  part.root_of.resize(part.sn_reps.size());
  for (std::size_t i = 0; i < part.sn_reps.size(); ++i) {
    const std::size_t r = uf.find(i);
    part.root_of[i] = r;
    const auto it = best.find(r);
    if (it == best.end() || part.sn_reps[i] < it->second)
      best[r] = part.sn_reps[i];
  }
  std::map<std::size_t, std::size_t> renumber;
  std::vector<BTuple> reps;
  for (auto& [root, rep] : best) reps.push_back(rep);
  std::sort(reps.begin(), reps.end());
  std::map<BTuple, std::size_t> rep_index;
  for (std::size_t i = 0; i < reps.size(); ++i) rep_index[reps[i]] = i;
  for (auto& [root, rep] : best) renumber[root] = rep_index[rep];
  for (std::size_t i = 0; i < part.root_of.size(); ++i)
    part.root_of[i] = renumber[part.root_of[i]];
  part.class_reps = std::move(reps);
  return part;
}

}  // namespace detail

// Lexicographically minimal symmetric-class representative per delta class.
inline std::vector<BTuple> delta_classes(const std::vector<BTuple>& tuples,
                                         const TateLevel& lvl) {
  return detail::delta_partition(tuples, lvl).class_reps;
}

// |B/S_n| / |delta\B/S_n|, which a counting theorem pins at n + 1. A
// different ratio can only come from a defect in the quotient code, so it
// is reported as a violation rather than returned.
inline std::int64_t quotient_ratio(const TateLevel& lvl,
                                   std::int64_t cap = 1000000) {
  const std::vector<BTuple> tuples = enumerate_B(lvl, cap);
  const detail::DeltaPartition part = detail::delta_partition(tuples, lvl);
  const std::size_t nsn = part.sn_reps.size();
  const std::size_t nd = part.class_reps.size();
  if (nd == 0 || nsn % nd != 0 ||
      nsn / nd != std::size_t(lvl.n) + 1)
    throw RatioViolation("quotient_ratio: |B/Sn| = " + std::to_string(nsn) +
                         ", |delta classes| = " + std::to_string(nd) +
                         ", expected ratio " + std::to_string(lvl.n + 1));
  return lvl.n + 1;
}

// A finite list of invertible matrices acting entrywise on tuples.
struct GroupAction {
  std::int64_t p = 2;
  int N = 1;
  int n = 1;
  std::vector<TateMat> generators;

  GroupAction(std::int64_t p_, int N_, int n_, std::vector<TateMat> gens)
      : p(p_), N(N_), n(n_), generators(std::move(gens)) {
    detail::require_level({n, N, p}, "GroupAction");
    const std::int64_t q = detail::pow_int(p, N);
    for (TateMat& g : generators) {
      if (g.size() != std::size_t(n))
        throw std::invalid_argument("GroupAction: generator is not n x n");
      for (TateVec& row : g) {
        if (row.size() != std::size_t(n))
          throw std::invalid_argument("GroupAction: generator is not n x n");
        for (std::int64_t& e : row) e = ((e % q) + q) % q;
      }
      if (!detail::unit_det_mod_p(g, p))
        throw std::invalid_argument("GroupAction: generator not invertible");
    }
  }
};

// Applies a generator to every row of a tuple.
inline BTuple apply_action(const TateMat& gen, const BTuple& t,
                           const TateLevel& lvl) {
  const std::int64_t q = detail::pow_int(lvl.p, lvl.N);
  BTuple out(t.size(), TateVec(t.empty() ? 0 : t[0].size(), 0));
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t r = 0; r < gen.size(); ++r) {
      std::int64_t acc = 0;
      for (std::size_t c = 0; c < gen[r].size(); ++c)
        acc = (acc + gen[r][c] * t[i][c]) % q;
      out[i][r] = acc;
    }
  return out;
}

// Order of the generated matrix group, by closure; guarded by a bound.
inline std::size_t group_order(const GroupAction& action,
                               std::size_t bound = 256) {
  const TateLevel lvl{action.n, action.N, action.p};
  TateMat id(std::size_t(action.n), TateVec(std::size_t(action.n), 0));
  for (int i = 0; i < action.n; ++i) id[std::size_t(i)][std::size_t(i)] = 1;
  std::vector<TateMat> seen{id};
  std::vector<TateMat> frontier{id};
  while (!frontier.empty()) {
    std::vector<TateMat> next;
    for (const TateMat& m : frontier)
      for (const TateMat& g : action.generators) {
        TateMat prod = apply_action(g, m, lvl);
        if (std::find(seen.begin(), seen.end(), prod) == seen.end()) {
          if (seen.size() >= bound)
            throw CapExceeded("group_order: closure exceeds bound " +
                              std::to_string(bound));
          seen.push_back(prod);
          next.push_back(std::move(prod));
        }
      }
    frontier = std::move(next);
  }
  return seen.size();
}

enum class ClassKind { SN, DELTA };

// Classes fixed setwise by every generator. A symmetric class is fixed
// exactly when the canonical form of the transformed representative is the
// representative itself, and likewise per delta class.
inline std::vector<BTuple> invariant_classes(const GroupAction& action,
                                             ClassKind which,
                                             std::int64_t cap = 1000000) {
  const TateLevel lvl{action.n, action.N, action.p};
  const std::vector<BTuple> tuples = enumerate_B(lvl, cap);
  std::vector<BTuple> out;
  if (which == ClassKind::SN) {
    for (const BTuple& rep : sn_classes(tuples)) {
      bool fixed = true;
      for (const TateMat& g : action.generators) {
        BTuple moved = apply_action(g, rep, lvl);
        std::sort(moved.begin(), moved.end());
        fixed = fixed && moved == rep;
      }
      if (fixed) out.push_back(rep);
    }
    return out;
  }
  const detail::DeltaPartition part = detail::delta_partition(tuples, lvl);
  for (const BTuple& rep : part.class_reps) {
    bool fixed = true;
    for (const TateMat& g : action.generators) {
      BTuple moved = apply_action(g, rep, lvl);
      std::sort(moved.begin(), moved.end());
      fixed = fixed && part.class_rep_of(moved) == rep;
    }
    if (fixed) out.push_back(rep);
  }
  return out;
}

namespace detail {

inline std::int64_t pow_mod(std::int64_t base, std::int64_t e,
                            std::int64_t q) {
  std::int64_t r = 1 % q;
  base %= q;
  while (e > 0) {
    if (e & 1) r = r * base % q;
    base = base * base % q;
    e >>= 1;
  }
  return r;
}

inline std::int64_t inv_mod(std::int64_t a, std::int64_t q) {
  std::int64_t t = 0, nt = 1, r = q, nr = ((a % q) + q) % q;
  while (nr != 0) {
    const std::int64_t quo = r / nr;
    const std::int64_t t2 = t - quo * nt;
    const std::int64_t r2 = r - quo * nr;
    t = nt;
    nt = t2;
    r = nr;
    nr = r2;
  }
  if (r != 1) throw std::invalid_argument("inv_mod: not invertible");
  return ((t % q) + q) % q;
}

inline bool has_order(std::int64_t a, std::int64_t k, std::int64_t q) {
  if (pow_mod(a, k, q) != 1) return false;
  for (std::int64_t d = 1; d < k; ++d)
    if (k % d == 0 && pow_mod(a, d, q) == 1) return false;
  return true;
}

// Smallest root of unity of exact order k mod p, lifted to mod p^N with
// Newton steps on x^k - 1 (the derivative k x^{k-1} stays a unit).
inline std::int64_t root_of_unity(std::int64_t k, std::int64_t p, int N) {
  std::int64_t root = 0;
  for (std::int64_t a = 1; a < p; ++a)
    if (has_order(a, k, p)) {
      root = a;
      break;
    }
  if (root == 0)
    throw std::invalid_argument("root_of_unity: no element of order " +
                                std::to_string(k) + " mod " +
                                std::to_string(p));
  std::int64_t q = p;
  for (int j = 2; j <= N; ++j) {
    q *= p;
    const std::int64_t fx = ((pow_mod(root, k, q) - 1) % q + q) % q;
    const std::int64_t dfx = k % q * pow_mod(root, k - 1, q) % q;
    root = ((root - fx * inv_mod(dfx, q)) % q + q) % q;
  }
  if (!has_order(root, k, detail::pow_int(p, N)))
    throw std::logic_error("root_of_unity: lift has wrong order");
  return root;
}

}  // namespace detail

// The seven finite groups occurring on hyperelliptic surfaces away from
// characteristic 2 and 3, given by the linear part of their action on the
// rank-2 module: a diagonal root of unity, plus an identity generator for
// the types whose extra factor acts by translation and is therefore
// invisible here.
inline std::vector<std::string> hyperelliptic_types() {
  return {"Z/2", "Z/2xZ/2", "Z/4", "Z/4xZ/2", "Z/3", "Z/3xZ/3", "Z/6"};
}

inline GroupAction hyperelliptic_action(const std::string& type,
                                        std::int64_t p, int N) {
  detail::require_level({2, N, p}, "hyperelliptic_action");
  if (p < 5)
    throw std::invalid_argument(
        "hyperelliptic_action: the classification assumes p >= 5");
  static const std::map<std::string, std::pair<std::int64_t, bool>> table{
      {"Z/2", {2, false}},    {"Z/2xZ/2", {2, true}}, {"Z/4", {4, false}},
      {"Z/4xZ/2", {4, true}}, {"Z/3", {3, false}},    {"Z/3xZ/3", {3, true}},
      {"Z/6", {6, false}}};
  const auto it = table.find(type);
  if (it == table.end())
    throw std::invalid_argument("hyperelliptic_action: unknown type " + type);
  const auto [order, extra_identity] = it->second;
  if ((p - 1) % order != 0)
    throw std::invalid_argument("hyperelliptic_action: no root of order " +
                                std::to_string(order) + " mod " +
                                std::to_string(p));
  const std::int64_t zeta = detail::root_of_unity(order, p, N);
  std::vector<TateMat> gens{{{1, 0}, {0, zeta}}};
  if (extra_identity) gens.push_back({{1, 0}, {0, 1}});
  return GroupAction(p, N, 2, std::move(gens));
}

// Chern-number reductions. Projective structures need c1^2 - 3 c2 to vanish
// mod p^N; affine ones need each Chern number to vanish at its own weight,
// c_l mod p^{lN}.
struct ChernData {
  std::int64_t c1sq = 0;
  std::int64_t c2 = 0;
  std::int64_t c1 = 0;
};

enum class ChernMode { PROJ, AFF };

struct ChernVerdict {
  bool obstructed = false;
  std::string message;
};

inline ChernVerdict chern_obstruction(const ChernData& data, ChernMode mode,
                                      std::int64_t p, int N) {
  detail::require_prime(p, "chern_obstruction");
  if (N < 1)
    throw std::invalid_argument("chern_obstruction: need N >= 1");
  const std::int64_t q = detail::pow_int(p, N);
  const auto red = [](std::int64_t v, std::int64_t m) {
    return ((v % m) + m) % m;
  };
  if (mode == ChernMode::PROJ) {
    const std::int64_t r = red(data.c1sq - 3 * data.c2, q);
    return {r != 0, "c1^2 - 3 c2 = " + std::to_string(r) + " mod " +
                        std::to_string(q)};
  }
  const std::int64_t q2 = q * q;
  const std::int64_t r1 = red(data.c1, q);
  const std::int64_t r2 = red(data.c2, q2);
  return {r1 != 0 || r2 != 0,
          "c1 = " + std::to_string(r1) + " mod " + std::to_string(q) +
              ", c2 = " + std::to_string(r2) + " mod " + std::to_string(q2)};
}

// The standard surface classes with their (c1^2, c2). The ruled row depends
// on the base genus.
struct SurfaceEntry {
  std::string name;
  ChernData chern;
};

inline ChernData surface_chern(const std::string& name, std::int64_t g = 0) {
  if (name == "P2") return {9, 3, 0};
  if (name == "Hirzebruch") return {8, 4, 0};
  if (name == "ruled") return {8 * (1 - g), 4 * (1 - g), 0};
  if (name == "Enriques") return {0, 12, 0};
  if (name == "K3") return {0, 24, 0};
  if (name == "abelian") return {0, 0, 0};
  if (name == "hyperelliptic") return {0, 0, 0};
  throw std::invalid_argument("surface_chern: unknown class " + name);
}

inline std::vector<SurfaceEntry> surface_table(std::int64_t ruled_genus = 0) {
  std::vector<SurfaceEntry> out;
  for (const char* name : {"P2", "Hirzebruch", "ruled", "Enriques", "K3",
                           "abelian", "hyperelliptic"})
    out.push_back({name, surface_chern(name, ruled_genus)});
  return out;
}

// Chern numbers of a product of curves of genus g1 and g2, and the
// projective obstruction they reduce to: (1-g1)(1-g2) mod p^N.
inline ChernData product_chern(std::int64_t g1, std::int64_t g2) {
  if (g1 < 0 || g2 < 0)
    throw std::invalid_argument("product_chern: genus must be >= 0");
  const std::int64_t e = (1 - g1) * (1 - g2);
  return {8 * e, 4 * e, 0};
}

inline bool product_obstructed(std::int64_t g1, std::int64_t g2,
                               std::int64_t p, int N) {
  if (g1 < 0 || g2 < 0)
    throw std::invalid_argument("product_obstructed: genus must be >= 0");
  detail::require_prime(p, "product_obstructed");
  if (N < 1)
    throw std::invalid_argument("product_obstructed: need N >= 1");
  const std::int64_t q = detail::pow_int(p, N);
  return ((1 - g1) * (1 - g2) % q + q) % q != 0;
}

// High-precision evaluation of the closed count
// (p^{g-1} / 2^{2g-1}) * sum_{theta=1}^{p-1} sin(pi theta / p)^{-(2g-2)},
// which must land on an integer.
struct GenusCount {
  std::int64_t count = 0;
  double residual = 0.0;
};

inline GenusCount genus_count(std::int64_t p, int g) {
  if (p < 3 || p % 2 == 0 || p > 50)
    throw std::invalid_argument("genus_count: need odd p with 3 <= p <= 50");
  if (g < 2 || g > 5)
    throw std::invalid_argument("genus_count: need 2 <= g <= 5");
  using Real = boost::multiprecision::cpp_bin_float_50;
  const Real pi = boost::math::constants::pi<Real>();
  Real sum = 0;
  for (std::int64_t theta = 1; theta < p; ++theta) {
    const Real s = sin(pi * theta / p);
    sum += pow(s, -(2 * g - 2));
  }
  Real value = sum;
  for (int i = 1; i < g; ++i) value *= p;
  for (int i = 0; i < 2 * g - 1; ++i) value /= 2;
  const Real nearest = floor(value + Real(0.5));
  const Real residual = abs(value - nearest);
  if (residual > Real("1e-6"))
    throw IntegralityViolation("genus_count: residual " +
                               residual.str(10, std::ios_base::scientific) +
                               " exceeds tolerance");
  return {nearest.convert_to<std::int64_t>(), residual.convert_to<double>()};
}

// The coefficient binom(n+1, l) / (n+1)^l expressing the l-th Chern class
// of a structure-admitting n-fold through the first.
inline boost::multiprecision::cpp_rational gunning_coefficient(int n, int l) {
  if (n < 1 || l < 1 || l > n)
    throw std::invalid_argument("gunning_coefficient: need 1 <= l <= n");
  using boost::multiprecision::cpp_int;
  cpp_int num = 1, den = 1;
  for (int i = 1; i <= l; ++i) {
    num *= n + 2 - i;
    den *= i;
  }
  cpp_int scale = 1;
  for (int i = 0; i < l; ++i) scale *= n + 1;
  return boost::multiprecision::cpp_rational(num, den * scale);
}

}  // namespace frobstruct
