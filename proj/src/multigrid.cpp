#include "tdcgl/multigrid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tdcgl {

namespace {

inline double edge_weight(int i, int n) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; }

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

constexpr std::size_t kDenseLimit = 4096;
constexpr int kFallbackSweeps = 40;

}  // namespace

NeumannMultigrid::NeumannMultigrid(const ScalarField2D& coefficient) : NeumannMultigrid(coefficient, Options{}) {}

NeumannMultigrid::NeumannMultigrid(const ScalarField2D& coefficient, Options options) : options_(options) {
  const GridSpec& g = coefficient.spec();
  g.validate();
  if (!(coefficient.min() > 0.0) || !coefficient.all_finite())
    throw std::invalid_argument("multigrid coefficient must be finite and strictly positive");
  levels_.push_back(make_level(g.nx, coefficient.values()));
  while (levels_.back().n > 5 && (levels_.back().n - 1) % 2 == 0) levels_.push_back(coarsen(levels_.back()));
  factor_coarsest();
}

NeumannMultigrid::Level NeumannMultigrid::make_level(int n, const std::vector<double>& c) {
  Level L;
  L.n = n;
  const std::size_t N = static_cast<std::size_t>(n) * n;
  L.ax.assign(static_cast<std::size_t>(n - 1) * n, 0.0);
  L.ay.assign(static_cast<std::size_t>(n) * (n - 1), 0.0);
  L.diag.assign(N, 0.0);
  L.mass.assign(N, 0.0);
  auto at = [&](int i, int j) { return c[static_cast<std::size_t>(j) * n + i]; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i + 1 < n; ++i) {
      const double a = 0.5 * (at(i, j) + at(i + 1, j)) * edge_weight(j, n);
      L.ax[static_cast<std::size_t>(j) * (n - 1) + i] = a;
      L.diag[static_cast<std::size_t>(j) * n + i] += a;
      L.diag[static_cast<std::size_t>(j) * n + i + 1] += a;
    }
  }
  for (int j = 0; j + 1 < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double a = 0.5 * (at(i, j) + at(i, j + 1)) * edge_weight(i, n);
      L.ay[static_cast<std::size_t>(j) * n + i] = a;
      L.diag[static_cast<std::size_t>(j) * n + i] += a;
      L.diag[static_cast<std::size_t>(j + 1) * n + i] += a;
    }
  }
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) L.mass[static_cast<std::size_t>(j) * n + i] = edge_weight(i, n) * edge_weight(j, n) * at(i, j);
  L.u.assign(N, 0.0);
  L.b.assign(N, 0.0);
  L.r.assign(N, 0.0);
  return L;
}

NeumannMultigrid::Level NeumannMultigrid::coarsen(const Level& F) {
  const int n = F.n;
  const int nc = (n - 1) / 2 + 1;
  Level C;
  C.n = nc;
  const std::size_t N = static_cast<std::size_t>(nc) * nc;
  C.ax.assign(static_cast<std::size_t>(nc - 1) * nc, 0.0);
  C.ay.assign(static_cast<std::size_t>(nc) * (nc - 1), 0.0);
  C.diag.assign(N, 0.0);
  C.mass.assign(N, 0.0);
  // Two fine faces in series, then the fine rows (columns) a coarse face spans,
  // weighted 1/2, 1, 1/2. Constant coefficients reproduce the rediscretized stencil.
  auto series = [](double a, double b) { return a * b / (a + b); };
  for (int J = 0; J < nc; ++J) {
    for (int I = 0; I + 1 < nc; ++I) {
      double a = 0.0;
      for (int dj = -1; dj <= 1; ++dj) {
        const int j = 2 * J + dj;
        if (j < 0 || j >= n) continue;
        const std::size_t row = static_cast<std::size_t>(j) * (n - 1);
        a += (dj == 0 ? 1.0 : 0.5) * series(F.ax[row + 2 * I], F.ax[row + 2 * I + 1]);
      }
      C.ax[static_cast<std::size_t>(J) * (nc - 1) + I] = a;
      C.diag[static_cast<std::size_t>(J) * nc + I] += a;
      C.diag[static_cast<std::size_t>(J) * nc + I + 1] += a;
    }
  }
  for (int J = 0; J + 1 < nc; ++J) {
    for (int I = 0; I < nc; ++I) {
      double a = 0.0;
      for (int di = -1; di <= 1; ++di) {
        const int i = 2 * I + di;
        if (i < 0 || i >= n) continue;
        a += (di == 0 ? 1.0 : 0.5) *
             series(F.ay[static_cast<std::size_t>(2 * J) * n + i], F.ay[static_cast<std::size_t>(2 * J + 1) * n + i]);
      }
      C.ay[static_cast<std::size_t>(J) * nc + I] = a;
      C.diag[static_cast<std::size_t>(J) * nc + I] += a;
      C.diag[static_cast<std::size_t>(J + 1) * nc + I] += a;
    }
  }
  for (int J = 0; J < nc; ++J)
    for (int I = 0; I < nc; ++I)
      C.mass[static_cast<std::size_t>(J) * nc + I] = F.mass[static_cast<std::size_t>(2 * J) * n + 2 * I];
  C.u.assign(N, 0.0);
  C.b.assign(N, 0.0);
  C.r.assign(N, 0.0);
  return C;
}

void NeumannMultigrid::apply(const Level& L, const std::vector<double>& u, std::vector<double>& out) const {
  const int n = L.n;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const std::size_t p = static_cast<std::size_t>(j) * n + i;
      double s = L.diag[p] * u[p];
      if (i > 0) s -= L.ax[static_cast<std::size_t>(j) * (n - 1) + i - 1] * u[p - 1];
      if (i + 1 < n) s -= L.ax[static_cast<std::size_t>(j) * (n - 1) + i] * u[p + 1];
      if (j > 0) s -= L.ay[static_cast<std::size_t>(j - 1) * n + i] * u[p - n];
      if (j + 1 < n) s -= L.ay[static_cast<std::size_t>(j) * n + i] * u[p + n];
      out[p] = s;
    }
  }
}

void NeumannMultigrid::smooth(const Level& L, std::vector<double>& u, const std::vector<double>& b, bool forward) const {
  const int n = L.n;
  auto relax = [&](int i, int j) {
    const std::size_t p = static_cast<std::size_t>(j) * n + i;
    double s = b[p];
    if (i > 0) s += L.ax[static_cast<std::size_t>(j) * (n - 1) + i - 1] * u[p - 1];
    if (i + 1 < n) s += L.ax[static_cast<std::size_t>(j) * (n - 1) + i] * u[p + 1];
    if (j > 0) s += L.ay[static_cast<std::size_t>(j - 1) * n + i] * u[p - n];
    if (j + 1 < n) s += L.ay[static_cast<std::size_t>(j) * n + i] * u[p + n];
    u[p] = s / L.diag[p];
  };
  if (forward) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) relax(i, j);
  } else {
    for (int j = n - 1; j >= 0; --j)
      for (int i = n - 1; i >= 0; --i) relax(i, j);
  }
}

void NeumannMultigrid::factor_coarsest() {
  const Level& L = levels_.back();
  const std::size_t N = static_cast<std::size_t>(L.n) * L.n;
  chol_.clear();
  chol_n_ = 0;
  if (N > kDenseLimit) return;
  std::vector<double> A(N * N, 0.0);
  std::vector<double> e(N, 0.0), col(N, 0.0);
  for (std::size_t k = 0; k < N; ++k) {
    e[k] = 1.0;
    apply(L, e, col);
    for (std::size_t r = 0; r < N; ++r) A[r * N + k] = col[r];
    e[k] = 0.0;
  }
  // A + s*1*1^T is positive definite; on compatible data its solution solves A x = b with sum(x) = 0.
  double s = 0.0;
  for (double d : L.diag) s += d;
  s /= static_cast<double>(N * N);
  for (double& a : A) a += s;
  for (std::size_t j = 0; j < N; ++j) {
    double d = A[j * N + j];
    for (std::size_t k = 0; k < j; ++k) d -= A[j * N + k] * A[j * N + k];
    if (!(d > 0.0)) throw std::runtime_error("coarse-grid factorization failed");
    d = std::sqrt(d);
    A[j * N + j] = d;
    for (std::size_t i = j + 1; i < N; ++i) {
      double v = A[i * N + j];
      for (std::size_t k = 0; k < j; ++k) v -= A[i * N + k] * A[j * N + k];
      A[i * N + j] = v / d;
    }
  }
  chol_ = std::move(A);
  chol_n_ = static_cast<int>(N);
}

void NeumannMultigrid::coarse_solve(const Level& L) const {
  if (chol_n_ == 0) {
    std::fill(L.u.begin(), L.u.end(), 0.0);
    for (int s = 0; s < kFallbackSweeps; ++s) smooth(L, L.u, L.b, true);
    for (int s = 0; s < kFallbackSweeps; ++s) smooth(L, L.u, L.b, false);
    return;
  }
  const std::size_t N = static_cast<std::size_t>(chol_n_);
  std::vector<double>& x = L.u;
  for (std::size_t i = 0; i < N; ++i) {
    double v = L.b[i];
    for (std::size_t k = 0; k < i; ++k) v -= chol_[i * N + k] * x[k];
    x[i] = v / chol_[i * N + i];
  }
  for (std::size_t ii = N; ii-- > 0;) {
    double v = x[ii];
    for (std::size_t k = ii + 1; k < N; ++k) v -= chol_[k * N + ii] * x[k];
    x[ii] = v / chol_[ii * N + ii];
  }
}

void NeumannMultigrid::vcycle(std::size_t depth) const {
  const Level& L = levels_[depth];
  if (depth + 1 == levels_.size()) {
    coarse_solve(L);
    return;
  }
  std::fill(L.u.begin(), L.u.end(), 0.0);
  for (int s = 0; s < options_.smoothing_sweeps; ++s) smooth(L, L.u, L.b, true);
  apply(L, L.u, L.r);
  for (std::size_t p = 0; p < L.r.size(); ++p) L.r[p] = L.b[p] - L.r[p];

  const Level& C = levels_[depth + 1];
  const int n = L.n;
  const int nc = C.n;
  for (int J = 0; J < nc; ++J) {
    for (int I = 0; I < nc; ++I) {
      double s = 0.0;
      for (int dj = -1; dj <= 1; ++dj) {
        const int j = 2 * J + dj;
        if (j < 0 || j >= n) continue;
        const double wj = dj == 0 ? 1.0 : 0.5;
        for (int di = -1; di <= 1; ++di) {
          const int i = 2 * I + di;
          if (i < 0 || i >= n) continue;
          const double wi = di == 0 ? 1.0 : 0.5;
          s += wi * wj * L.r[static_cast<std::size_t>(j) * n + i];
        }
      }
      C.b[static_cast<std::size_t>(J) * nc + I] = s;
    }
  }

  vcycle(depth + 1);

  for (int j = 0; j < n; ++j) {
    const int J0 = j / 2;
    const int J1 = (j % 2 == 0) ? J0 : J0 + 1;
    for (int i = 0; i < n; ++i) {
      const int I0 = i / 2;
      const int I1 = (i % 2 == 0) ? I0 : I0 + 1;
      const double v = 0.25 * (C.u[static_cast<std::size_t>(J0) * nc + I0] + C.u[static_cast<std::size_t>(J0) * nc + I1] +
                               C.u[static_cast<std::size_t>(J1) * nc + I0] + C.u[static_cast<std::size_t>(J1) * nc + I1]);
      L.u[static_cast<std::size_t>(j) * n + i] += v;
    }
  }
  for (int s = 0; s < options_.smoothing_sweeps; ++s) smooth(L, L.u, L.b, false);
}

NeumannMultigrid::Stats NeumannMultigrid::solve(const ScalarField2D& rhs, ScalarField2D& u, double tol) const {
  const Level& F = levels_.front();
  const std::size_t N = F.diag.size();
  if (rhs.size() != N || u.size() != N) throw std::invalid_argument("multigrid: field size does not match the operator");
  const double h2 = rhs.spec().h * rhs.spec().h;

  std::vector<double> b(N), r(N), z(N), p(N), Ap(N);
  for (std::size_t k = 0; k < N; ++k) b[k] = -F.mass[k] * h2 * rhs[k];
  std::vector<double>& x = u.values();

  auto scaled_max = [&](const std::vector<double>& res) {
    double m = 0.0;
    for (std::size_t k = 0; k < N; ++k) m = std::max(m, std::abs(res[k]) / (F.mass[k] * h2));
    return m;
  };
  auto true_residual = [&] {
    apply(F, x, r);
    for (std::size_t k = 0; k < N; ++k) r[k] = b[k] - r[k];
    return scaled_max(r);
  };
  auto precondition = [&](const std::vector<double>& res, std::vector<double>& out) {
    F.b = res;
    vcycle(0);
    out = F.u;
  };

  Stats st;
  st.scaled_residual = true_residual();
  if (st.scaled_residual < tol) {
    st.converged = true;
    return st;
  }

  precondition(r, z);
  p = z;
  double rz = dot(r, z);
  for (int it = 1; it <= options_.max_iterations; ++it) {
    apply(F, p, Ap);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0) || !(rz > 0.0)) break;
    const double a = rz / pAp;
    for (std::size_t k = 0; k < N; ++k) {
      x[k] += a * p[k];
      r[k] -= a * Ap[k];
    }
    st.iterations = it;
    st.scaled_residual = scaled_max(r);
    if (st.scaled_residual < tol) break;
    precondition(r, z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < N; ++k) p[k] = z[k] + beta * p[k];
  }
  // The recursive residual can drift from the true one.
  st.scaled_residual = true_residual();
  st.converged = st.scaled_residual < tol;
  if (st.converged) return st;

  // CG measures progress in the energy norm, which barely sees nodes where c is
  // tiny; plain V-cycle corrections keep reducing the residual there.
  for (int it = 0; it < options_.max_iterations && !st.converged; ++it) {
    precondition(r, z);
    for (std::size_t k = 0; k < N; ++k) x[k] += z[k];
    ++st.iterations;
    st.scaled_residual = true_residual();
    st.converged = st.scaled_residual < tol;
  }
  return st;
}

}  // namespace tdcgl
