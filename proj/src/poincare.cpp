#include "perfhom/poincare.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <sstream>

#include "perfhom/error.hpp"
#include "perfhom/io.hpp"

namespace perfhom {

namespace {

CsrMatrix shifted(const CsrMatrix& k, const std::vector<double>& m, double sigma) {
  CsrMatrix a = k;
  for (std::size_t r = 0; r < a.n; ++r)
    for (std::size_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p)
      if (std::size_t(a.col[p]) == r) a.val[p] -= sigma * m[r];
  return a;
}

double rayleigh(const CsrMatrix& k, const std::vector<double>& m, const std::vector<double>& x,
                std::vector<double>& kx) {
  k.multiply(x, kx);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += x[i] * kx[i];
    den += m[i] * x[i] * x[i];
  }
  return num / den;
}

// Collatz-Wielandt lower bound; only meaningful for a positive iterate.
std::optional<double> lower_bound(const std::vector<double>& kx, const std::vector<double>& m,
                                  const std::vector<double>& x) {
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) return std::nullopt;
    lo = std::min(lo, kx[i] / (m[i] * x[i]));
  }
  return lo;
}

}  // namespace

RayleighResult rayleigh_min(const Classification& cls, double tol, int max_outer) {
  const auto sys = assemble_energy(cls);
  bool constrained = !cls.arms.empty();
  for (std::size_t i = 0; i < cls.kind.size() && !constrained; ++i)
    constrained = cls.kind[i] == NodeKind::Boundary;
  require(constrained, ErrorKind::Singular, "rayleigh_min: no constrained node, constants are free");
  const std::size_t n = sys.node_of.size();
  const auto& m = sys.m;
  for (double v : m) require(v > 0.0, ErrorKind::Argument, "rayleigh_min: free node without mass");

  RayleighResult out;
  out.residual = 1.0;
  std::vector<double> x(n, 1.0), kx, mx(n), r(n);
  double lambda = rayleigh(sys.k, m, x, kx);
  double sigma = lower_bound(kx, m, x).value_or(0.0);
  for (int it = 1; it <= max_outer; ++it) {
    // Keep some distance from lambda: the shifted solve stays tractable and
    // each step still gains about two digits.
    sigma = std::clamp(sigma, 0.0, lambda * (1 - 1e-2));
    for (std::size_t i = 0; i < n; ++i) mx[i] = m[i] * x[i];
    SolveOptions opt;
    opt.tol = 1e-8;
    opt.throw_on_failure = false;
    opt.x0 = &x;
    SolveStats st;
    auto y = solve(shifted(sys.k, m, sigma), mx, opt, &st);
    out.inner_iterations += st.iterations;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += m[i] * y[i] * y[i];
    s = std::sqrt(s);
    require(s > 0 && std::isfinite(s), ErrorKind::Breakdown, "rayleigh_min: inverse iterate vanished");
    if (std::accumulate(y.begin(), y.end(), 0.0) < 0) s = -s;
    for (auto& v : y) v /= s;
    x = std::move(y);
    lambda = rayleigh(sys.k, m, x, kx);
    double rn = 0.0, mn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      rn += std::pow(kx[i] - lambda * m[i] * x[i], 2);
      mn += std::pow(m[i] * x[i], 2);
    }
    out.residual = std::sqrt(rn / mn) / lambda;
    out.outer_iterations = std::size_t(it);
    if (out.residual <= tol) break;
    if (const auto lo = lower_bound(kx, m, x)) sigma = std::max(sigma, *lo);
  }
  if (out.residual > tol)
    fail(ErrorKind::NoConvergence, "rayleigh_min: eigen residual " + format_double(out.residual) +
                                       " after " + std::to_string(max_outer) + " outer iterations");
  out.lambda_min = lambda;
  out.poincare_constant = 1.0 / lambda;
  out.eigenvector.assign(cls.grid.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) out.eigenvector[sys.node_of[i]] = x[i];
  return out;
}

Box inscribed_square(Point c, double r) {
  const double s = r / std::sqrt(2.0);
  return {{c.x - s, c.y - s}, {c.x + s, c.y + s}};
}

BoxCheck check_box_constant(const LevelFunction& u, const Box& r, int n) {
  require(r.hi.x > r.lo.x && r.hi.y > r.lo.y, ErrorKind::Argument, "box is empty");
  constexpr int kSamples = 64;
  for (int j = 0; j <= kSamples; ++j)
    for (int i = 0; i <= kSamples; ++i) {
      const Point p{r.lo.x + (r.hi.x - r.lo.x) * i / kSamples, r.lo.y + (r.hi.y - r.lo.y) * j / kSamples};
      if (u(p) > 1e-12) fail(ErrorKind::Geometry, "box is not inside U");
    }
  BoxCheck out;
  out.bound = 2.0 / r.area();
  const auto cls = classify_nodes(CartesianGrid::square({0, 0}, 1.0 / n, n, OuterBC::Neumann), u);
  if (cls->count(NodeKind::Solid) == cls->grid.size()) return out;  // U = Q: only v = 0 is admissible
  out.constant = rayleigh_min(*cls).poincare_constant;
  return out;
}

ScalingStudy eps_scaling_study(const PerforationField& field, const MacroProblem& omega,
                               const std::vector<double>& eps, int n, int jobs) {
  require(!eps.empty(), ErrorKind::Argument, "eps_scaling_study: empty eps list");
  ScalingStudy out;
  out.applicable = field.pattern().has_value();
  MacroProblem p = omega;
  p.source = Source::constant(1.0);  // only the geometry matters here
  out.rows.resize(eps.size());
  const std::size_t batch = std::max(1, jobs);
  for (std::size_t start = 0; start < eps.size(); start += batch) {
    std::vector<std::future<ScalingRow>> fut;
    for (std::size_t k = start; k < std::min(eps.size(), start + batch); ++k)
      fut.push_back(std::async(batch > 1 ? std::launch::async : std::launch::deferred, [&, k] {
        MacroProblem q = p;
        q.eps = eps[k];
        const auto d = build_domain(q, field, n);
        const auto r = rayleigh_min(*d.cls);
        return ScalingRow{eps[k], r.lambda_min, r.poincare_constant, r.poincare_constant / (eps[k] * eps[k])};
      }));
    for (std::size_t k = 0; k < fut.size(); ++k) out.rows[start + k] = fut[k].get();
  }
  std::sort(out.rows.begin(), out.rows.end(), [](const auto& a, const auto& b) { return a.eps > b.eps; });
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : out.rows) {
    lo = std::min(lo, r.c_eps);
    hi = std::max(hi, r.c_eps);
  }
  out.ratio = hi / lo;
  return out;
}

std::string to_csv(const ScalingStudy& s) {
  std::ostringstream out;
  out << "epsilon,lambda_min,poincare_constant,c_eps\n";
  for (const auto& r : s.rows)
    out << format_double(r.eps) << ',' << format_double(r.lambda_min) << ','
        << format_double(r.poincare_constant) << ',' << format_double(r.c_eps) << '\n';
  if (!s.applicable)
    out << "# verdict n/a no perforation, lemma inapplicable; ratio " << format_double(s.ratio) << '\n';
  else
    out << "# verdict " << (s.pass() ? "PASS" : "FAIL") << " ratio " << format_double(s.ratio)
        << " expected <= 2\n";
  return out.str();
}

CouplingCheck coupling_check(const MacroDomain& d, const CompositeCorrector& w) {
  CouplingCheck out;
  out.eps = d.problem.eps;
  const auto nm = error_report(d, solve_eps_problem(d), two_scale_approx(d, w));
  out.phi_l2 = nm.l2;
  out.phi_h1 = nm.h1;
  out.poincare_constant = rayleigh_min(*d.cls).poincare_constant;
  return out;
}

}  // namespace perfhom
