#include "perfhom/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "perfhom/error.hpp"

namespace perfhom {

void CsrMatrix::multiply(const std::vector<double>& x, std::vector<double>& y) const {
  y.resize(n);
  const std::size_t* rp = row_ptr.data();
  const std::int32_t* c = col.data();
  const double* v = val.data();
  const double* xp = x.data();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) s += v[k] * xp[c[k]];
    y[i] = s;
  }
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
      if (std::size_t(col[k]) == i) d[i] = val[k];
  return d;
}

bool CsrMatrix::well_formed() const {
  if (row_ptr.size() != n + 1 || row_ptr.back() != val.size() || col.size() != val.size())
    return false;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      if (col[k] < 0 || std::size_t(col[k]) >= n) return false;
      if (k > row_ptr[i] && col[k] <= col[k - 1]) return false;
    }
  return true;
}

bool CsrMatrix::row_dominant(std::size_t row) const {
  double diag = 0.0, off = 0.0;
  for (std::size_t k = row_ptr[row]; k < row_ptr[row + 1]; ++k)
    (std::size_t(col[k]) == row ? diag : off) += std::abs(val[k]);
  return diag >= off * (1 - 1e-14);
}

CsrBuilder::CsrBuilder(std::size_t n, std::size_t nnz_hint) {
  m_.n = n;
  m_.row_ptr.reserve(n + 1);
  m_.col.reserve(nnz_hint);
  m_.val.reserve(nnz_hint);
}

void CsrBuilder::finish_row() {
  std::sort(pending_.begin(), pending_.end(),
            [](const Entry& a, const Entry& b) { return a.col < b.col; });
  for (std::size_t k = 0; k < pending_.size(); ++k) {
    if (k > 0 && pending_[k].col == pending_[k - 1].col) {
      m_.val.back() += pending_[k].value;
      continue;
    }
    m_.col.push_back(pending_[k].col);
    m_.val.push_back(pending_[k].value);
  }
  pending_.clear();
  m_.row_ptr.push_back(m_.val.size());
}

CsrMatrix CsrBuilder::build() {
  require(m_.row_ptr.size() == m_.n + 1, ErrorKind::Argument, "CsrBuilder: row count mismatch");
  return std::move(m_);
}

CsrMatrix identity_matrix(std::size_t n) {
  CsrBuilder b(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    b.add(std::int32_t(i), 1.0);
    b.finish_row();
  }
  return b.build();
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

namespace {

double true_residual(const CsrMatrix& a, const std::vector<double>& x,
                     const std::vector<double>& b, std::vector<double>& r) {
  a.multiply(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  return norm2(r);
}

}  // namespace

std::vector<double> solve(const CsrMatrix& a, const std::vector<double>& b,
                          const SolveOptions& opt, SolveStats* stats) {
  const std::size_t n = a.n;
  require(b.size() == n, ErrorKind::Argument, "solve: right-hand side has the wrong size");
  require(opt.tol > 0 && opt.tol < 1, ErrorKind::Argument, "solve: tol must lie in (0,1)");
  const std::size_t cap =
      opt.max_iter ? opt.max_iter : std::size_t(std::ceil(50.0 * std::sqrt(double(n)))) + 10;

  std::vector<double> x = opt.x0 ? *opt.x0 : std::vector<double>(n, 0.0);
  require(x.size() == n, ErrorKind::Argument, "solve: initial guess has the wrong size");
  std::vector<double> dinv = a.diagonal();
  for (auto& d : dinv) {
    require(d != 0.0, ErrorKind::Singular, "solve: zero on the diagonal");
    d = 1.0 / d;
  }

  SolveStats local;
  SolveStats& st = stats ? *stats : local;
  st = {};
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    st.converged = true;
    return std::vector<double>(n, 0.0);
  }
  const double target = opt.tol * bnorm;

  std::vector<double> r(n), rhat(n), p(n, 0.0), v(n, 0.0), s(n), t(n), ph(n), sh(n);
  double rnorm = true_residual(a, x, b, r);
  std::size_t it = 0;
  const char* failure = nullptr;
  ErrorKind failure_kind = ErrorKind::NoConvergence;
  int restarts = 0;

  while (rnorm > target && it < cap) {
    // (Re)start: shadow residual equals the current residual.
    rhat = r;
    std::fill(p.begin(), p.end(), 0.0);
    std::fill(v.begin(), v.end(), 0.0);
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    bool restart = false;
    while (it < cap) {
      ++it;
      const double rho_new = dot(rhat, r);
      if (std::abs(rho_new) < 1e-300 || !std::isfinite(rho_new)) {
        restart = true;
        break;
      }
      const double beta = (rho_new / rho) * (alpha / omega);
      rho = rho_new;
      for (std::size_t i = 0; i < n; ++i) {
        p[i] = r[i] + beta * (p[i] - omega * v[i]);
        ph[i] = dinv[i] * p[i];
      }
      a.multiply(ph, v);
      const double rv = dot(rhat, v);
      if (std::abs(rv) < 1e-300 * std::max(1.0, std::abs(rho))) {
        restart = true;
        break;
      }
      alpha = rho / rv;
      double snorm2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        s[i] = r[i] - alpha * v[i];
        snorm2 += s[i] * s[i];
      }
      if (std::sqrt(snorm2) <= target) {
        for (std::size_t i = 0; i < n; ++i) x[i] += alpha * ph[i];
        rnorm = std::sqrt(snorm2);
        break;
      }
      for (std::size_t i = 0; i < n; ++i) sh[i] = dinv[i] * s[i];
      a.multiply(sh, t);
      const double tt = dot(t, t);
      if (tt == 0.0) {
        restart = true;
        break;
      }
      omega = dot(t, s) / tt;
      double rn2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * ph[i] + omega * sh[i];
        r[i] = s[i] - omega * t[i];
        rn2 += r[i] * r[i];
      }
      rnorm = std::sqrt(rn2);
      if (!std::isfinite(rnorm)) {
        failure = "solve: iteration diverged";
        failure_kind = ErrorKind::Breakdown;
        break;
      }
      if (rnorm <= target) break;
      if (omega == 0.0) {
        restart = true;
        break;
      }
    }
    if (failure) break;
    // Recurrence residuals drift; trust only the recomputed one.
    rnorm = true_residual(a, x, b, r);
    if (restart && ++restarts > 20) {
      failure = "solve: BiCGStab breakdown (vanishing inner product)";
      failure_kind = ErrorKind::Breakdown;
      break;
    }
  }

  st.iterations = it;
  st.relative_residual = rnorm / bnorm;
  st.converged = !failure && rnorm <= target;
  if (!st.converged && opt.throw_on_failure) {
    if (failure) fail(failure_kind, failure);
    fail(ErrorKind::NoConvergence, "solve: no convergence after " + std::to_string(it) +
                                       " iterations, relative residual " +
                                       std::to_string(st.relative_residual));
  }
  return x;
}

DenseMatrix to_dense(const CsrMatrix& m) {
  require(m.n <= 20000, ErrorKind::Argument, "to_dense: matrix too large");
  DenseMatrix d(m.n);
  for (std::size_t i = 0; i < m.n; ++i)
    for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) d(i, m.col[k]) += m.val[k];
  return d;
}

std::vector<double> solve_dense(DenseMatrix a, std::vector<double> b) {
  const std::size_t n = a.n;
  require(n <= 2000, ErrorKind::Argument, "solve_dense: n must not exceed 2000");
  require(b.size() == n, ErrorKind::Argument, "solve_dense: right-hand side has the wrong size");
  double scale = 0.0;
  for (double v : a.a) scale = std::max(scale, std::abs(v));
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (std::abs(a(piv, k)) <= 1e-14 * scale || scale == 0.0)
      fail(ErrorKind::Singular, "solve_dense: matrix is singular to working precision");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(b[k], b[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

}  // namespace perfhom
