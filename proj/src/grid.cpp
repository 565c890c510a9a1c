#include "mesa/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mesa {

void Geometry::validate() const {
  if (!(inner < outer))
    throw std::invalid_argument("geometry: inner must be < outer");
  if (kind == GeometryKind::radial) {
    if (dim < 1 || dim > 3)
      throw std::invalid_argument("geometry: radial dimension must be 1, 2 or 3");
    if (inner <= 0.0)
      throw std::invalid_argument("geometry: radial inner radius must be positive");
  }
}

Grid::Grid(Geometry geometry, int n_cells) : geom_(geometry), n_cells_(n_cells) {
  geom_.validate();
  if (n_cells < 4) throw std::invalid_argument("grid: n_cells must be >= 4");
  h_ = (geom_.outer - geom_.inner) / n_cells;
  nodes_.resize(static_cast<std::size_t>(n_cells) + 1);
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    nodes_[i] = geom_.inner + static_cast<double>(i) * h_;
  nodes_.front() = geom_.inner;
  nodes_.back() = geom_.outer;
}

std::size_t Grid::nearest_node(double x) const {
  double idx = (x - geom_.inner) / h_;
  long k = std::lround(idx);
  k = std::clamp(k, 0L, static_cast<long>(n_cells_));
  return static_cast<std::size_t>(k);
}

std::string Grid::to_json() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "{\"kind\":\"%s\",\"n\":%d,\"inner\":%.17g,\"outer\":%.17g,"
                "\"n_cells\":%d}",
                geom_.is_radial() ? "radial" : "cartesian1d", geom_.dim,
                geom_.inner, geom_.outer, n_cells_);
  return buf;
}

GridPtr build_grid(Geometry geometry, int n_cells) {
  return std::make_shared<const Grid>(geometry, n_cells);
}

Field::Field(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->n_nodes())
    throw std::invalid_argument("field: value count does not match node count");
}

bool Field::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }
double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }

double Field::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double Field::interior_l1() const {
  long double s = 0.0L;
  for (std::size_t i = 1; i + 1 < values_.size(); ++i) s += std::abs(values_[i]);
  return static_cast<double>(s) * grid_->h();
}

double laplacian_at(const Grid& g, std::span<const double> u, std::size_t i) {
  const double h = g.h();
  double d2 = (u[i - 1] - 2.0 * u[i] + u[i + 1]) / (h * h);
  if (g.is_radial() && g.dim() > 1) {
    double r = g.node(i);
    d2 += (g.dim() - 1) / r * (u[i + 1] - u[i - 1]) / (2.0 * h);
  }
  return d2;
}

Field laplacian(const Field& u, BoundaryValues bc) {
  const Grid& g = u.grid();
  const std::size_t n = u.size();
  std::vector<double> ub(u.data());
  ub.front() = bc.inner;
  ub.back() = bc.outer;
  Field out(u.grid_ptr(), 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = laplacian_at(g, ub, i);
  return out;
}

std::vector<double> solve_tridiagonal(std::span<const double> lower,
                                      std::span<const double> diag,
                                      std::span<const double> upper,
                                      std::span<const double> rhs) {
  const std::size_t n = diag.size();
  if (lower.size() != n || upper.size() != n || rhs.size() != n)
    throw std::invalid_argument("tridiagonal: inconsistent sizes");
  std::vector<double> c(n), d(n), x(n);
  c[0] = upper[0] / diag[0];
  d[0] = rhs[0] / diag[0];
  for (std::size_t i = 1; i < n; ++i) {
    double denom = diag[i] - lower[i] * c[i - 1];
    c[i] = upper[i] / denom;
    d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
  }
  x[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

Field solve_dirichlet_poisson(const GridPtr& grid, std::span<const double> rhs,
                              double left, double right, std::size_t last) {
  const Grid& g = *grid;
  if (last >= g.n_nodes()) last = g.n_nodes() - 1;
  if (last < 2) throw std::invalid_argument("poisson: subrange too small");
  const double h = g.h();
  const std::size_t m = last - 1;  // unknowns: nodes 1..last-1
  std::vector<double> lo(m), di(m), up(m), b(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = k + 1;
    double cl = 1.0 / (h * h), cu = 1.0 / (h * h);
    if (g.is_radial() && g.dim() > 1) {
      double c1 = (g.dim() - 1) / g.node(i) / (2.0 * h);
      cl -= c1;
      cu += c1;
    }
    lo[k] = -cl;
    di[k] = cl + cu;
    up[k] = -cu;
    b[k] = rhs[i];
    if (i == 1) b[k] += cl * left;
    if (i == last - 1) b[k] += cu * right;
  }
  auto sol = solve_tridiagonal(lo, di, up, b);
  Field out(grid, right);
  out[0] = left;
  for (std::size_t k = 0; k < m; ++k) out[k + 1] = sol[k];
  out[last] = right;
  return out;
}

}  // namespace mesa
