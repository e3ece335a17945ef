#pragma once

// Exact linear algebra over chart rings.
//
// Generic matrices over any chart support ring arithmetic and a
// division-free determinant (subset expansion, fine for the small sizes this
// library meets). On a univariate polynomial chart the ring is Euclidean, and
// column Hermite reduction provides kernels and linear solves with fully
// deterministic pivoting: pivots are chosen by lowest degree, then
// lexicographic coefficient order, then column index.

#include <frobstruct/chart.hpp>

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace frobstruct {

class PolyMat {
 public:
  PolyMat(ChartPtr chart, std::size_t rows, std::size_t cols)
      : chart_(std::move(chart)),
        rows_(rows),
        cols_(cols),
        data_(rows * cols, RingElem::zero(chart_)) {}

  static PolyMat identity(const ChartPtr& c, std::size_t n) {
    PolyMat m(c, n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = RingElem::one(c);
    return m;
  }

  static PolyMat from_columns(const ChartPtr& c,
                              const std::vector<std::vector<RingElem>>& cols) {
    if (cols.empty()) return PolyMat(c, 0, 0);
    PolyMat m(c, cols.front().size(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (cols[j].size() != m.rows_)
        throw std::invalid_argument("from_columns: ragged input");
      for (std::size_t i = 0; i < m.rows_; ++i) m.at(i, j) = cols[j][i];
    }
    return m;
  }

  const ChartPtr& chart() const { return chart_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  RingElem& at(std::size_t i, std::size_t j) {
    if (i >= rows_ || j >= cols_)
      throw std::out_of_range("PolyMat: index out of range");
    return data_[i * cols_ + j];
  }
  const RingElem& at(std::size_t i, std::size_t j) const {
    if (i >= rows_ || j >= cols_)
      throw std::out_of_range("PolyMat: index out of range");
    return data_[i * cols_ + j];
  }

  std::vector<RingElem> column(std::size_t j) const {
    std::vector<RingElem> out;
    out.reserve(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out.push_back(at(i, j));
    return out;
  }

  bool is_zero() const {
    for (const auto& f : data_)
      if (!f.is_zero()) return false;
    return true;
  }

  PolyMat transpose() const {
    PolyMat m(chart_, cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) m.at(j, i) = at(i, j);
    return m;
  }

  friend PolyMat operator+(const PolyMat& a, const PolyMat& b) {
    a.check_shape(b);
    PolyMat r = a;
    for (std::size_t k = 0; k < r.data_.size(); ++k) r.data_[k] += b.data_[k];
    return r;
  }

  friend PolyMat operator-(const PolyMat& a, const PolyMat& b) {
    a.check_shape(b);
    PolyMat r = a;
    for (std::size_t k = 0; k < r.data_.size(); ++k) r.data_[k] -= b.data_[k];
    return r;
  }

  friend PolyMat operator*(const PolyMat& a, const PolyMat& b) {
    require_same_chart(a.chart_, b.chart_);
    if (a.cols_ != b.rows_)
      throw std::invalid_argument("PolyMat: shape mismatch in product");
    PolyMat r(a.chart_, a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        if (a.at(i, k).is_zero()) continue;
        for (std::size_t j = 0; j < b.cols_; ++j)
          r.at(i, j) += a.at(i, k) * b.at(k, j);
      }
    return r;
  }

  std::vector<RingElem> apply_to(const std::vector<RingElem>& v) const {
    if (v.size() != cols_)
      throw std::invalid_argument("PolyMat: vector length mismatch");
    std::vector<RingElem> out(rows_, RingElem::zero(chart_));
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j)
        if (!at(i, j).is_zero()) out[i] += at(i, j) * v[j];
    return out;
  }

  PolyMat scaled(const RingElem& f) const {
    PolyMat r = *this;
    for (auto& e : r.data_) e = e * f;
    return r;
  }

  bool operator==(const PolyMat& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && *chart_ == *o.chart_ &&
           data_ == o.data_;
  }

 private:
  void check_shape(const PolyMat& o) const {
    require_same_chart(chart_, o.chart_);
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw std::invalid_argument("PolyMat: shape mismatch");
  }

  ChartPtr chart_;
  std::size_t rows_, cols_;
  std::vector<RingElem> data_;
};

// Division-free determinant by expansion over column subsets, processing one
// row at a time. Exponential in the size, which stays below the cap here.
inline RingElem determinant(const PolyMat& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("determinant: matrix not square");
  const std::size_t n = m.rows();
  if (n > 16) throw std::invalid_argument("determinant: size cap exceeded");
  if (n == 0) return RingElem::one(m.chart());
  std::vector<RingElem> dp(std::size_t{1} << n, RingElem::zero(m.chart()));
  dp[0] = RingElem::one(m.chart());
  for (std::size_t i = 0; i < n; ++i) {
    // Extend every subset of size i by one column used in row i.
    for (std::size_t mask = (std::size_t{1} << n) - 1; mask + 1 > 0; --mask) {
      if (static_cast<std::size_t>(__builtin_popcountll(mask)) != i + 1)
        continue;
      RingElem acc = RingElem::zero(m.chart());
      std::size_t pos = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (!(mask & (std::size_t{1} << j))) continue;
        if (!dp[mask ^ (std::size_t{1} << j)].is_zero() &&
            !m.at(i, j).is_zero()) {
          // Expansion along the last processed row: cofactor sign (-1)^{i+pos}.
          RingElem term = m.at(i, j) * dp[mask ^ (std::size_t{1} << j)];
          acc += ((i + pos) % 2 == 0) ? term : -term;
        }
        ++pos;
      }
      dp[mask] = acc;
      if (mask == 0) break;
    }
  }
  return dp[(std::size_t{1} << n) - 1];
}

namespace detail {

inline void require_univariate_poly(const ChartPtr& c, const char* who) {
  if (c->dim() != 1)
    throw MultivariateNotSupported(std::string(who) +
                                   " needs a univariate chart");
  if (c->laurent(0))
    throw LaurentNotSupported(std::string(who) +
                              " needs a polynomial (non-Laurent) chart");
}

inline std::int64_t poly_deg(const RingElem& f) {
  if (f.is_zero()) return -1;
  return f.terms().rbegin()->first[0];
}

inline std::int64_t leading_coeff(const RingElem& f) {
  if (f.is_zero()) return 0;
  return f.terms().rbegin()->second;
}

// Euclidean division a = q*b + r with deg r < deg b, univariate.
inline std::pair<RingElem, RingElem> poly_divmod(const RingElem& a,
                                                 const RingElem& b) {
  require_univariate_poly(a.chart(), "poly_divmod");
  require_same_chart(a.chart(), b.chart());
  if (b.is_zero()) throw std::domain_error("poly_divmod: division by zero");
  const FpConfig& fp = a.chart()->field();
  const std::int64_t binv = fp.inv(leading_coeff(b));
  const std::int64_t bdeg = poly_deg(b);
  RingElem q = RingElem::zero(a.chart());
  RingElem r = a;
  while (!r.is_zero() && poly_deg(r) >= bdeg) {
    const std::int64_t shift = poly_deg(r) - bdeg;
    const std::int64_t c = fp.mul(leading_coeff(r), binv);
    RingElem t = RingElem::monomial(a.chart(), {shift}, c);
    q += t;
    r -= t * b;
  }
  return {q, r};
}

// True when a is lexicographically smaller than b as a pivot candidate:
// lower degree first, then smaller coefficient vector read from the top
// degree down.
inline bool pivot_less(const RingElem& a, const RingElem& b) {
  const std::int64_t da = poly_deg(a), db = poly_deg(b);
  if (da != db) return da < db;
  for (std::int64_t d = da; d >= 0; --d) {
    const std::int64_t ca = a.coeff({d}), cb = b.coeff({d});
    if (ca != cb) return ca < cb;
  }
  return false;
}

}  // namespace detail

struct HermiteResult {
  PolyMat h;                      // m * u, column-reduced
  PolyMat u;                      // unimodular column transform
  std::vector<std::size_t> pivot_cols;  // one per pivot, in pivot-row order
  std::vector<std::size_t> pivot_rows;
  std::vector<std::size_t> kernel_cols;  // columns of u spanning the kernel
};

// Column Hermite reduction over the univariate polynomial ring. Column
// operations are mirrored in u, so m * u = h throughout and the columns of u
// marked in kernel_cols form a free basis of the right kernel of m.
inline HermiteResult column_hermite(const PolyMat& m) {
  detail::require_univariate_poly(m.chart(), "column_hermite");
  const FpConfig& fp = m.chart()->field();
  HermiteResult res{m, PolyMat::identity(m.chart(), m.cols()), {}, {}, {}};
  std::vector<std::size_t> active(m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) active[j] = j;

  auto col_axpy = [&](std::size_t dst, std::size_t src, const RingElem& q) {
    // column dst -= q * column src, in both h and u
    for (std::size_t i = 0; i < res.h.rows(); ++i)
      res.h.at(i, dst) -= q * res.h.at(i, src);
    for (std::size_t i = 0; i < res.u.rows(); ++i)
      res.u.at(i, dst) -= q * res.u.at(i, src);
  };
  auto col_scale = [&](std::size_t j, std::int64_t s) {
    for (std::size_t i = 0; i < res.h.rows(); ++i)
      res.h.at(i, j) = res.h.at(i, j).scaled(s);
    for (std::size_t i = 0; i < res.u.rows(); ++i)
      res.u.at(i, j) = res.u.at(i, j).scaled(s);
  };

  for (std::size_t row = 0; row < m.rows() && !active.empty(); ++row) {
    while (true) {
      std::vector<std::size_t> nz;
      for (auto j : active)
        if (!res.h.at(row, j).is_zero()) nz.push_back(j);
      if (nz.empty()) break;
      // Deterministic pivot: lowest degree, then lexicographic coefficients,
      // then column index (nz is already index-sorted).
      std::size_t best = nz.front();
      for (auto j : nz)
        if (detail::pivot_less(res.h.at(row, j), res.h.at(row, best)))
          best = j;
      bool reduced_any = false;
      for (auto j : nz) {
        if (j == best) continue;
        auto [q, r] = detail::poly_divmod(res.h.at(row, j), res.h.at(row, best));
        if (!q.is_zero()) {
          col_axpy(j, best, q);
          reduced_any = true;
        }
      }
      if (!reduced_any) {
        // best is the unique nonzero entry (or all others already have
        // smaller degree than it, which after full reduction means zero).
        col_scale(best, fp.inv(detail::leading_coeff(res.h.at(row, best))));
        res.pivot_cols.push_back(best);
        res.pivot_rows.push_back(row);
        active.erase(std::find(active.begin(), active.end(), best));
        break;
      }
    }
  }
  res.kernel_cols = active;
  return res;
}

// Free basis of the right kernel of m over the univariate polynomial ring,
// returned as the columns of a matrix, canonically echelonized with monic
// pivots.
inline PolyMat kernel_basis(const PolyMat& m) {
  HermiteResult h = column_hermite(m);
  PolyMat raw(m.chart(), m.cols(), h.kernel_cols.size());
  for (std::size_t k = 0; k < h.kernel_cols.size(); ++k)
    for (std::size_t i = 0; i < m.cols(); ++i)
      raw.at(i, k) = h.u.at(i, h.kernel_cols[k]);
  if (raw.cols() == 0) return raw;
  // Canonicalize the basis itself.
  HermiteResult canon = column_hermite(raw);
  PolyMat out(m.chart(), m.cols(), raw.cols());
  // canon has no kernel columns (basis columns are independent), and its
  // pivots arrive in row order, giving the echelon ordering.
  for (std::size_t k = 0; k < canon.pivot_cols.size(); ++k)
    for (std::size_t i = 0; i < m.cols(); ++i)
      out.at(i, k) = canon.h.at(i, canon.pivot_cols[k]);
  return out;
}

// Solves m * x = b over the univariate polynomial ring. Returns a solution
// with all kernel coordinates set to zero, or nothing when none exists.
inline std::optional<std::vector<RingElem>> solve_columns(
    const PolyMat& m, const std::vector<RingElem>& b) {
  detail::require_univariate_poly(m.chart(), "solve_columns");
  if (b.size() != m.rows())
    throw std::invalid_argument("solve_columns: rhs length mismatch");
  HermiteResult h = column_hermite(m);
  std::vector<RingElem> z(m.cols(), RingElem::zero(m.chart()));
  std::vector<RingElem> residual = b;
  // h's pivot columns are staircase-ordered by pivot row; entries of a pivot
  // column vanish above its pivot row, so forward substitution works.
  std::size_t next_pivot = 0;
  for (std::size_t row = 0; row < m.rows(); ++row) {
    if (next_pivot < h.pivot_rows.size() && h.pivot_rows[next_pivot] == row) {
      const std::size_t pc = h.pivot_cols[next_pivot];
      auto [q, r] = detail::poly_divmod(residual[row], h.h.at(row, pc));
      if (!r.is_zero()) return std::nullopt;
      if (!q.is_zero()) {
        z[pc] = q;
        for (std::size_t i = row; i < m.rows(); ++i)
          residual[i] -= q * h.h.at(i, pc);
      }
      ++next_pivot;
    } else if (!residual[row].is_zero()) {
      return std::nullopt;
    }
  }
  return h.u.apply_to(z);
}

}  // namespace frobstruct
