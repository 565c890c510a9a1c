#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mesa {

/// Raised when a numerical run fails (blow-up, margin violation, non-convergence).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class GeometryKind { cartesian1d, radial };

/// 1D computational domain [inner, outer]. For the radial kind the coordinate
/// is the radius and `dim` is the ambient dimension n entering the Laplacian
/// u'' + (n-1)/r u'. The injection boundary sits at `inner`.
struct Geometry {
  GeometryKind kind = GeometryKind::cartesian1d;
  int dim = 1;
  double inner = 0.0;
  double outer = 1.0;

  static Geometry cartesian(double inner, double outer) {
    Geometry g{GeometryKind::cartesian1d, 1, inner, outer};
    g.validate();
    return g;
  }
  static Geometry radial(int n, double inner, double outer) {
    Geometry g{GeometryKind::radial, n, inner, outer};
    g.validate();
    return g;
  }
  void validate() const;
  bool is_radial() const { return kind == GeometryKind::radial; }
};

/// Uniform node-centered mesh on [inner, outer]: n_cells+1 nodes,
/// node[0] = inner, node[n_cells] = outer.
class Grid {
 public:
  Grid(Geometry geometry, int n_cells);

  const Geometry& geometry() const { return geom_; }
  int n_cells() const { return n_cells_; }
  std::size_t n_nodes() const { return nodes_.size(); }
  double h() const { return h_; }
  double node(std::size_t i) const { return nodes_[i]; }
  std::span<const double> nodes() const { return nodes_; }
  double inner() const { return geom_.inner; }
  double outer() const { return geom_.outer; }
  int dim() const { return geom_.dim; }
  bool is_radial() const { return geom_.is_radial(); }

  /// Nearest node index to coordinate x (clamped to the domain).
  std::size_t nearest_node(double x) const;

  std::string to_json() const;

 private:
  Geometry geom_;
  int n_cells_;
  double h_;
  std::vector<double> nodes_;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr build_grid(Geometry geometry, int n_cells);

/// Real-valued grid function, one value per node. Value semantics; shares the
/// grid through a const pointer so copies are cheap to pass between threads.
class Field {
 public:
  Field() = default;
  explicit Field(GridPtr grid, double fill = 0.0)
      : grid_(std::move(grid)), values_(grid_->n_nodes(), fill) {}
  Field(GridPtr grid, std::vector<double> values);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& data() { return values_; }
  const std::vector<double>& data() const { return values_; }

  bool all_finite() const;
  double max() const;
  double min() const;
  double max_abs() const;
  /// Plain l1 sum scaled by h (interior nodes only).
  double interior_l1() const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

struct BoundaryValues {
  double inner = 0.0;
  double outer = 0.0;
};

/// Discrete Laplacian. Interior nodes get the 3-point second-order stencil;
/// the radial kind adds the centered (n-1)/r u' term. The supplied boundary
/// values replace u at the two boundary nodes inside the stencil, and the
/// output is 0 at the boundary nodes (they are constrained, not evolved).
Field laplacian(const Field& u, BoundaryValues bc = {});

/// Laplacian stencil applied at a single interior node with raw value access.
double laplacian_at(const Grid& g, std::span<const double> u, std::size_t i);

/// Thomas algorithm for a tridiagonal system. `lower[0]` and
/// `upper[n-1]` are ignored. Overwrites nothing; returns the solution.
std::vector<double> solve_tridiagonal(std::span<const double> lower,
                                      std::span<const double> diag,
                                      std::span<const double> upper,
                                      std::span<const double> rhs);

/// Solve -Laplacian(u) = rhs on the subrange of nodes [0, last] of the grid
/// with Dirichlet values u(inner)=left, u(node[last])=right; nodes beyond
/// `last` are filled with `right`. Used for barrier construction.
Field solve_dirichlet_poisson(const GridPtr& grid, std::span<const double> rhs,
                              double left, double right, std::size_t last);

}  // namespace mesa
