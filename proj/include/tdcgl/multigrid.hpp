#pragma once

#include <vector>

#include "tdcgl/field_grid.hpp"

namespace tdcgl {

/// Multigrid-preconditioned conjugate gradients for the node-centred finite
/// volume form of -div(c grad u) = b with zero normal flux on the square edge.
///
/// Nodes carry control volumes of area w_x*w_y*h^2 with w = 1/2 on the edge and
/// 1 inside, so the operator is symmetric and its null space is the constants.
/// Coarse levels halve the node count per side while (n-1) stays even; their
/// face coefficients combine fine faces in series along the face direction.
class NeumannMultigrid {
 public:
  struct Options {
    int smoothing_sweeps = 2;
    int max_iterations = 300;
  };

  struct Stats {
    int iterations = 0;
    /// max over nodes of |r| / (volume * c * h^2), i.e. the residual of the
    /// non-divergence form (1/c) div(c grad u) = rhs.
    double scaled_residual = 0.0;
    bool converged = false;
  };

  explicit NeumannMultigrid(const ScalarField2D& coefficient);
  NeumannMultigrid(const ScalarField2D& coefficient, Options options);

  /// Solves (1/c) div(c grad u) = rhs for a compatible rhs (sum of volume*c*rhs = 0),
  /// starting from u. Stops when the scaled residual is below tol.
  Stats solve(const ScalarField2D& rhs, ScalarField2D& u, double tol) const;

  /// Node control-volume weights (1, 1/2, 1/4) times c.
  const std::vector<double>& mass() const { return levels_.front().mass; }
  int level_count() const { return static_cast<int>(levels_.size()); }

 private:
  struct Level {
    int n = 0;
    std::vector<double> ax;  // faces between (i, j) and (i+1, j), (n-1) x n
    std::vector<double> ay;  // faces between (i, j) and (i, j+1), n x (n-1)
    std::vector<double> diag;
    std::vector<double> mass;
    mutable std::vector<double> u, b, r;
  };

  static Level make_level(int n, const std::vector<double>& c);
  static Level coarsen(const Level& fine);
  void apply(const Level& L, const std::vector<double>& u, std::vector<double>& out) const;
  void smooth(const Level& L, std::vector<double>& u, const std::vector<double>& b, bool forward) const;
  void vcycle(std::size_t depth) const;
  void coarse_solve(const Level& L) const;
  void factor_coarsest();

  Options options_;
  std::vector<Level> levels_;
  std::vector<double> chol_;  // dense Cholesky factor of the regularized coarsest operator
  int chol_n_ = 0;
};

}  // namespace tdcgl
