#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace perfhom {

/// Square matrix in compressed sparse row form.
struct CsrMatrix {
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::int32_t> col;
  std::vector<double> val;

  std::size_t nnz() const { return val.size(); }
  void multiply(const std::vector<double>& x, std::vector<double>& y) const;
  std::vector<double> diagonal() const;
  /// Strictly increasing columns within each row.
  bool well_formed() const;
  /// |a_ii| >= sum_{j != i} |a_ij| for this row.
  bool row_dominant(std::size_t row) const;
};

/// Appends rows in order; duplicate columns inside a row are summed.
class CsrBuilder {
 public:
  explicit CsrBuilder(std::size_t n, std::size_t nnz_hint = 0);
  void add(std::int32_t col, double value) { pending_.push_back({col, value}); }
  void finish_row();
  CsrMatrix build();

 private:
  struct Entry {
    std::int32_t col;
    double value;
  };
  CsrMatrix m_;
  std::vector<Entry> pending_;
};

CsrMatrix identity_matrix(std::size_t n);

struct SolveOptions {
  double tol = 1e-10;        // relative residual ||b - Ax|| <= tol ||b||
  std::size_t max_iter = 0;  // 0: 50 sqrt(n)
  const std::vector<double>* x0 = nullptr;
  bool throw_on_failure = true;
};

struct SolveStats {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Jacobi-preconditioned BiCGStab. The returned residual is recomputed from
/// scratch; failure to meet tol throws NoConvergence or Breakdown unless the
/// caller opts out.
std::vector<double> solve(const CsrMatrix& a, const std::vector<double>& b,
                          const SolveOptions& options = {}, SolveStats* stats = nullptr);

struct DenseMatrix {
  std::size_t n = 0;
  std::vector<double> a;  // row-major

  explicit DenseMatrix(std::size_t size = 0) : n(size), a(size * size, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

DenseMatrix to_dense(const CsrMatrix& m);

/// Gaussian elimination with partial pivoting, n <= 2000.
std::vector<double> solve_dense(DenseMatrix a, std::vector<double> b);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& a);
double max_abs(const std::vector<double>& a);

}  // namespace perfhom
