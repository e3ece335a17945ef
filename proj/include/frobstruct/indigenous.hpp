#pragma once

// Indigenous and affine-indigenous candidates on a chart.
//
// A candidate couples a module of rank n+1, where n is the chart dimension,
// with a section s that generates a line inside the free module. The
// derivative matrix with columns s, E_1(s), ..., E_n(s) is the chart
// incarnation of the Kodaira-Spencer map evaluated on the order-one
// operators, and the candidate is indigenous exactly when that matrix is
// invertible over the chart ring. An affine candidate fixes in addition a
// splitting row delta with delta * s = 1; it passes the affine check when
// the kernel of delta is stable under every generator action.

#include <frobstruct/chart.hpp>
#include <frobstruct/dmod.hpp>
#include <frobstruct/polymat.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace frobstruct {

// Raised when a splitting row does not pair to 1 against the line section.
struct SplitViolation : std::runtime_error {
  explicit SplitViolation(const std::string& what)
      : std::runtime_error(what) {}
};

struct IndigenousCandidate {
  DMod module;
  std::vector<RingElem> line;

  IndigenousCandidate(DMod mod, std::vector<RingElem> s)
      : module(std::move(mod)), line(std::move(s)) {
    if (line.size() != module.rank())
      throw std::invalid_argument(
          "candidate: line section length must equal the module rank");
    bool has_unit = false;
    for (const RingElem& f : line) {
      require_same_chart(f.chart(), module.chart());
      has_unit = has_unit || f.is_unit();
    }
    if (!has_unit)
      throw std::invalid_argument(
          "candidate: the line section needs a unit coordinate");
  }
};

struct AffineIndigenousCandidate : IndigenousCandidate {
  // Row vector of the splitting V ->> N. The pairing delta * s = 1 is not
  // checked here; affine_check reports violations so that malformed
  // splittings can be handed over for diagnosis.
  std::vector<RingElem> delta;

  AffineIndigenousCandidate(DMod mod, std::vector<RingElem> s,
                            std::vector<RingElem> d)
      : IndigenousCandidate(std::move(mod), std::move(s)),
        delta(std::move(d)) {
    if (delta.size() != module.rank())
      throw std::invalid_argument(
          "candidate: splitting row length must equal the module rank");
    for (const RingElem& f : delta)
      require_same_chart(f.chart(), module.chart());
  }
};

// Matrix of the map sending the order-<=1 operator basis {1, d_1, ..., d_n}
// to {s, E_1(s), ..., E_n(s)}, in the standard module basis.
inline PolyMat ks_matrix(const IndigenousCandidate& c) {
  const ChartPtr& chart = c.module.chart();
  const std::size_t n = chart->dim();
  if (c.module.rank() != n + 1)
    throw std::invalid_argument(
        "ks_matrix: module rank must be the chart dimension plus one");
  ValidationReport rep = validate(c.module);
  if (!rep.ok)
    throw std::invalid_argument("ks_matrix: module fails validation: " +
                                rep.message);
  ActionContext ctx(c.module);
  std::vector<std::vector<RingElem>> cols;
  cols.reserve(n + 1);
  cols.push_back(c.line);
  for (std::size_t i = 0; i < n; ++i)
    cols.push_back(ctx.basis_action(i, 1).apply(c.line));
  return PolyMat::from_columns(chart, cols);
}

inline bool is_indigenous(const IndigenousCandidate& c) {
  return determinant(ks_matrix(c)).is_unit();
}

// Stability of Ker(delta) under the generator actions. The columns of
// I - s * delta generate the kernel, because that matrix is the projector
// onto Ker(delta) along the line, and stability for the generating columns
// extends to the whole kernel through the commutation rule.
inline bool affine_check(const AffineIndigenousCandidate& c) {
  if (!is_indigenous(c))
    throw std::invalid_argument(
        "affine_check: candidate is not indigenous");
  const ChartPtr& chart = c.module.chart();
  const std::size_t r = c.module.rank();
  RingElem pairing = RingElem::zero(chart);
  for (std::size_t k = 0; k < r; ++k) pairing = pairing + c.delta[k] * c.line[k];
  if (!(pairing == RingElem::one(chart)))
    throw SplitViolation("affine_check: delta * s = " + pairing.to_string() +
                         ", expected 1");

  std::vector<std::vector<RingElem>> gens;
  gens.reserve(r);
  for (std::size_t j = 0; j < r; ++j) {
    std::vector<RingElem> col;
    col.reserve(r);
    for (std::size_t k = 0; k < r; ++k) {
      RingElem e = k == j ? RingElem::one(chart) : RingElem::zero(chart);
      col.push_back(e - c.line[k] * c.delta[j]);
    }
    gens.push_back(std::move(col));
  }

  ActionContext ctx(c.module);
  for (std::size_t i = 0; i < chart->dim(); ++i) {
    std::int64_t a = 1;
    for (int l = 0; l <= c.module.level(); ++l, a *= chart->p()) {
      const MatDiffOp& action = ctx.basis_action(i, a);
      for (const auto& g : gens) {
        std::vector<RingElem> w = action.apply(g);
        RingElem out = RingElem::zero(chart);
        for (std::size_t k = 0; k < r; ++k) out = out + c.delta[k] * w[k];
        if (!out.is_zero()) return false;
      }
    }
  }
  return true;
}

// Tensors the module and the line by a rank-one module. In the Kronecker
// ordering the basis e_i (x) f maps to slot i, so the coordinates of the
// twisted section and splitting are carried over unchanged.
inline IndigenousCandidate twist(const IndigenousCandidate& c, const DMod& L) {
  if (L.rank() != 1)
    throw std::invalid_argument("twist: twisting module must have rank one");
  return IndigenousCandidate(tensor(c.module, L), c.line);
}

inline AffineIndigenousCandidate twist(const AffineIndigenousCandidate& c,
                                       const DMod& L) {
  if (L.rank() != 1)
    throw std::invalid_argument("twist: twisting module must have rank one");
  return AffineIndigenousCandidate(tensor(c.module, L), c.line, c.delta);
}

// The free module O^(n+1) with the trivial action at level N-1, the section
// s = (1, t_1, ..., t_n) and the projection onto the first coordinate as
// splitting. Its derivative matrix is lower unitriangular.
inline AffineIndigenousCandidate trivial_on_affine_chart(const ChartPtr& chart,
                                                         int N) {
  if (!chart || chart->dim() < 1)
    throw std::invalid_argument(
        "trivial_on_affine_chart: chart must have at least one variable");
  if (N < 1)
    throw std::invalid_argument("trivial_on_affine_chart: N must be >= 1");
  const std::size_t n = chart->dim();
  std::vector<RingElem> s;
  std::vector<RingElem> d;
  s.reserve(n + 1);
  d.reserve(n + 1);
  s.push_back(RingElem::one(chart));
  d.push_back(RingElem::one(chart));
  for (std::size_t i = 0; i < n; ++i) {
    s.push_back(RingElem::variable(chart, i));
    d.push_back(RingElem::zero(chart));
  }
  return AffineIndigenousCandidate(DMod::trivial(chart, N - 1, n + 1),
                                   std::move(s), std::move(d));
}

// Whether the determinant module of the candidate matches theta after
// conjugating the generator matrices by a unit. Both sides have rank one,
// and conjugating a 1-by-1 matrix by a unit of the ring is the identity, so
// the comparison collapses to equality of the stored generator matrices.
inline bool is_normalized(const IndigenousCandidate& c, const DMod& theta) {
  if (theta.rank() != 1)
    throw std::invalid_argument("is_normalized: theta must have rank one");
  if (!is_indigenous(c))
    throw std::invalid_argument(
        "is_normalized: candidate is not indigenous");
  return det_module(c.module) == theta;
}

}  // namespace frobstruct
