#include "tdcgl/parameter_inference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tdcgl/phase_retrieval.hpp"

namespace tdcgl {

void RelaxationConfig::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("relaxation: epsilon must be positive");
  if (!(initial_bump > 0.0 && initial_bump < 1.0)) throw std::invalid_argument("relaxation: initial_bump must lie in (0, 1)");
  if (max_outer_iters < 2) throw std::invalid_argument("relaxation: max_outer_iters must be at least 2");
  if (n_iso_levels < 1) throw std::invalid_argument("relaxation: n_iso_levels must be positive");
  if (!(histogram_bin_width > 0.0)) throw std::invalid_argument("relaxation: histogram_bin_width must be positive");
  if (retrieval_max_iters < 1) throw std::invalid_argument("relaxation: retrieval_max_iters must be positive");
  if (!(grad_norm_tol > 0.0)) throw std::invalid_argument("relaxation: grad_norm_tol must be positive");
}

namespace {

double median_of(std::vector<double> v) {
  const std::size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m), v.end());
  double med = v[m];
  if (v.size() % 2 == 0) {
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m));
    med = 0.5 * (med + lower);
  }
  return med;
}

}  // namespace

HistogramEstimate histogram_estimate(const std::vector<double>& values, double bin_width) {
  if (values.empty()) throw std::invalid_argument("histogram: no values");
  if (!(bin_width > 0.0)) throw std::invalid_argument("histogram: bin width must be positive");
  const double med = median_of(values);
  const double lo = std::min(med / 4.0, med * 4.0);
  const double hi = std::max(med / 4.0, med * 4.0);
  std::vector<double> kept;
  kept.reserve(values.size());
  for (double v : values)
    if (v >= lo && v <= hi) kept.push_back(v);

  HistogramEstimate h;
  h.bin_width = bin_width;
  h.skipped = values.size() - kept.size();
  h.samples = kept.size();
  if (kept.empty()) throw std::invalid_argument("histogram: all values clipped");
  const double vmin = *std::min_element(kept.begin(), kept.end());
  const double vmax = *std::max_element(kept.begin(), kept.end());
  h.origin = vmin;
  const std::size_t nbins = static_cast<std::size_t>(std::floor((vmax - vmin) / bin_width)) + 1;
  if (nbins > 50'000'000) throw std::invalid_argument("histogram: too many bins for the given width");
  h.counts.assign(nbins, 0);
  for (double v : kept) {
    const std::size_t b = std::min(nbins - 1, static_cast<std::size_t>((v - vmin) / bin_width));
    ++h.counts[b];
  }
  const std::size_t ip = static_cast<std::size_t>(std::max_element(h.counts.begin(), h.counts.end()) - h.counts.begin());
  h.peak = h.bin_center(ip);
  const double half = 0.5 * static_cast<double>(h.counts[ip]);
  std::size_t l = ip;
  while (l > 0 && static_cast<double>(h.counts[l]) > half) --l;
  std::size_t r = ip;
  while (r + 1 < nbins && static_cast<double>(h.counts[r]) > half) ++r;
  h.fwhm = std::max(1.0, static_cast<double>(r - l)) * bin_width;
  return h;
}

std::vector<IsoIntensityPair> find_iso_pairs(const ScalarField2D& I, int n_levels, const PairingOptions& opts) {
  if (n_levels < 1) throw std::invalid_argument("find_iso_pairs: n_levels must be positive");
  const GridSpec& g = I.spec();
  const double lo = I.min();
  const double hi = I.max();
  if (!(hi > lo)) throw std::invalid_argument("find_iso_pairs: intensity is constant");
  const double spacing = (hi - lo) / (n_levels + 1);
  const double band = 0.25 * spacing;
  const double tau = opts.match_tolerance * (hi - lo);
  const int m = opts.edge_margin;

  struct Cand {
    double v;
    int ix, iy;
  };
  std::vector<IsoIntensityPair> out;
  std::vector<Cand> cand;
  std::vector<char> used;
  for (int l = 1; l <= n_levels; ++l) {
    const double level = lo + spacing * l;
    cand.clear();
    for (int iy = m; iy < g.ny - m; ++iy)
      for (int ix = m; ix < g.nx - m; ++ix)
        if (std::abs(I(ix, iy) - level) <= band) cand.push_back({I(ix, iy), ix, iy});
    if (cand.size() < 2) continue;
    std::stable_sort(cand.begin(), cand.end(), [](const Cand& a, const Cand& b) { return a.v < b.v; });
    used.assign(cand.size(), 0);
    std::size_t b0 = 0;
    for (std::size_t a = 0; a < cand.size(); ++a) {
      while (cand[b0].v < cand[a].v - tau) ++b0;
      if (used[a]) continue;
      long best = -1;
      long best_d = -1;
      for (std::size_t b = b0; b < cand.size() && cand[b].v <= cand[a].v + tau; ++b) {
        if (b == a || used[b]) continue;
        const long dx = cand[a].ix - cand[b].ix;
        const long dy = cand[a].iy - cand[b].iy;
        const long d = dx * dx + dy * dy;
        if (d > best_d) {
          best_d = d;
          best = static_cast<long>(b);
        }
      }
      if (best >= 0) {
        used[a] = used[static_cast<std::size_t>(best)] = 1;
        const Cand& c2 = cand[static_cast<std::size_t>(best)];
        out.push_back({{cand[a].ix, cand[a].iy}, {c2.ix, c2.iy}, level});
      }
    }
  }
  return out;
}

HistogramEstimate seed_eta_over_alpha(const IntensityTriple& triple, const RelaxationConfig& cfg) {
  triple.validate();
  const ScalarField2D I1 = triple.mid_intensity(1);
  const ScalarField2D Iz = triple.mid_dIdz(1);
  const ScalarField2D D = amplitude_curvature(I1);
  ScalarField2D P(I1.spec());  // sqrt(I) lap sqrt(I)
  for (std::size_t k = 0; k < P.size(); ++k) P[k] = I1[k] * D[k];
  const double floor = 1e-10 * 2.0 * P.max_abs();

  const auto pairs = find_iso_pairs(I1, cfg.n_iso_levels);
  std::vector<double> ratios;
  std::size_t skipped = 0;
  for (const auto& p : pairs) {
    const double den = 2.0 * (P(p.p1.ix, p.p1.iy) - P(p.p2.ix, p.p2.iy));
    const double num = Iz(p.p1.ix, p.p1.iy) - Iz(p.p2.ix, p.p2.iy);
    if (std::abs(den) <= floor || !std::isfinite(num / den)) {
      ++skipped;
      continue;
    }
    ratios.push_back(num / den);
  }
  if (ratios.empty()) throw std::invalid_argument("seed_eta_over_alpha: no valid iso-intensity pairs");
  HistogramEstimate h = histogram_estimate(ratios, cfg.histogram_bin_width);
  h.skipped += skipped;
  return h;
}

MomentumTerms momentum_terms(const ScalarField2D& phi_tilde, const ScalarField2D& dphi_tilde_dz, const ScalarField2D& I,
                             double eta_over_alpha) {
  require_same_grid(phi_tilde, dphi_tilde_dz, "momentum_terms");
  require_same_grid(phi_tilde, I, "momentum_terms");
  MomentumTerms t;
  t.D = amplitude_curvature(I);
  const ScalarField2D wl = weighted_laplacian(I, phi_tilde);
  const ScalarField2D q = gradient_norm_squared(phi_tilde);
  t.K = ScalarField2D(I.spec());
  for (std::size_t k = 0; k < I.size(); ++k) t.K[k] = dphi_tilde_dz[k] - eta_over_alpha * wl[k] + 0.5 * q[k];
  return t;
}

MomentumTerms momentum_terms_between(const ScalarField2D& phi_z1, const ScalarField2D& phi_z3, const ScalarField2D& I_z2,
                                     double dz_plane, double eta_over_alpha) {
  ScalarField2D mid = phi_z1;
  mid += phi_z3;
  mid *= 0.5;
  return momentum_terms(mid, central_dz(phi_z1, phi_z3, 0.5 * dz_plane), I_z2, eta_over_alpha);
}

std::optional<double> alpha_from_pair(const IsoIntensityPair& pair, const MomentumTerms& terms, double k_floor) {
  const double dK = terms.K(pair.p1.ix, pair.p1.iy) - terms.K(pair.p2.ix, pair.p2.iy);
  const double dD = terms.D(pair.p1.ix, pair.p1.iy) - terms.D(pair.p2.ix, pair.p2.iy);
  if (!(std::abs(dK) > k_floor)) return std::nullopt;
  const double ratio = 2.0 * dD / dK;
  if (!(ratio > 0.0) || !std::isfinite(ratio)) return std::nullopt;
  return std::sqrt(ratio);
}

std::optional<double> alpha_from_pair(const IsoIntensityPair& pair, const ScalarField2D& phi_tilde,
                                      const ScalarField2D& dphi_tilde_dz, const ScalarField2D& I, double eta_over_alpha) {
  const MomentumTerms t = momentum_terms(phi_tilde, dphi_tilde_dz, I, eta_over_alpha);
  return alpha_from_pair(pair, t, 1e-10 * t.K.max_abs());
}

double diffusion_update(double N_k, double N_k1, double X) {
  if (N_k1 * N_k < 0.0) return -N_k1 / (N_k1 - N_k) * X;
  if (N_k == 0.0) return 0.0;
  if (std::abs(N_k1) > std::abs(N_k)) return -(N_k1 / N_k) * X;
  return (N_k1 / N_k) * X;
}

namespace {

struct Planes {
  ScalarField2D I1, Iz1, I3, Iz3;
  const ScalarField2D* I2;
  double dz_plane;
};

HistogramEstimate alpha_histogram(const std::vector<IsoIntensityPair>& pairs, const MomentumTerms& terms, double bin_width) {
  const double floor = 1e-10 * terms.K.max_abs();
  std::vector<double> alphas;
  alphas.reserve(pairs.size());
  std::size_t skipped = 0;
  for (const auto& p : pairs) {
    if (auto a = alpha_from_pair(p, terms, floor))
      alphas.push_back(*a);
    else
      ++skipped;
  }
  if (alphas.empty()) throw std::invalid_argument("alpha estimate: no valid iso-intensity pairs");
  HistogramEstimate h = histogram_estimate(alphas, bin_width);
  h.skipped += skipped;
  return h;
}

ScalarField2D scaled(const ScalarField2D& f, double s) {
  ScalarField2D out = f;
  out *= s;
  return out;
}

}  // namespace

RelaxationTrace relaxation_run(const IntensityTriple& triple, const NonlinearFn& g_over_alpha, double eta_over_alpha_0,
                               const RelaxationConfig& cfg) {
  cfg.validate();
  triple.validate();
  if (!std::isfinite(eta_over_alpha_0)) throw std::invalid_argument("relaxation: initial eta/alpha must be finite");

  const ScalarField2D I1 = triple.mid_intensity(1);
  const ScalarField2D Iz1 = triple.mid_dIdz(1);
  const ScalarField2D I3 = triple.mid_intensity(3);
  const ScalarField2D Iz3 = triple.mid_dIdz(3);
  const EllipticSolver solver1(I1);
  const EllipticSolver solver3(I3);
  const auto pairs = find_iso_pairs(triple.I2, cfg.n_iso_levels);
  const BoundaryContour contour = BoundaryContour::inscribed_circle(triple.spec());

  PhaseRetrievalConfig rc;
  rc.g_over_alpha = g_over_alpha;
  rc.max_iters = cfg.retrieval_max_iters;
  rc.grad_norm_tol = cfg.grad_norm_tol;

  RelaxationTrace trace;
  double eoa = eta_over_alpha_0;
  double alpha_prev = 0.0;
  double X = cfg.initial_bump;
  for (int k = 1; k <= cfg.max_outer_iters; ++k) {
    rc.eta_over_alpha = eoa;
    rc.eta_alpha_product = (k == 1) ? 0.0 : eoa * alpha_prev * alpha_prev;
    const bool warm = k > 1;
    RetrievedPhase r1 = retrieve_phase(solver1, I1, Iz1, rc, warm ? &trace.phi_z1 : nullptr);
    RetrievedPhase r3 = retrieve_phase(solver3, I3, Iz3, rc, warm ? &trace.phi_z3 : nullptr);
    if (!r1.converged() || !r3.converged()) {
      const RetrievedPhase& bad = r1.converged() ? r3 : r1;
      const std::string msg = std::string("phase retrieval ") + to_string(bad.status) + " at outer iteration " +
                              std::to_string(k) + " (eta/alpha = " + std::to_string(eoa) + ")";
      throw RelaxationError(msg, {trace});
    }
    trace.phi_z1 = std::move(r1.phi_tilde);
    trace.phi_z3 = std::move(r3.phi_tilde);

    const MomentumTerms terms = momentum_terms_between(trace.phi_z1, trace.phi_z3, triple.I2, triple.dz_plane, eoa);
    trace.alpha_histogram = alpha_histogram(pairs, terms, cfg.histogram_bin_width);
    const double alpha_k = trace.alpha_histogram.peak;
    const double scale = (k == 1) ? 1.0 : 0.5 * alpha_prev;
    const double N = boundary_flux(scaled(trace.phi_z1, scale), contour);

    if (k > 1) X = diffusion_update(trace.records.back().N, N, X);
    trace.records.push_back({k, eoa, eoa * alpha_k, alpha_k, N, X});
    if (k > 1 && std::abs(X) < cfg.epsilon) {
      trace.converged = true;
      break;
    }
    eoa *= 1.0 + X;
    alpha_prev = alpha_k;
  }
  return trace;
}

NonlinearFn extract_f(const ScalarField2D& phi_tilde_z1, const ScalarField2D& phi_tilde_z3, const ScalarField2D& I_z2,
                      double dz_plane, double eta_hat, double alpha_hat, int n_bins) {
  if (!(alpha_hat > 0.0)) throw std::invalid_argument("extract_f: alpha must be positive");
  if (n_bins < 1) throw std::invalid_argument("extract_f: n_bins must be positive");
  const MomentumTerms t = momentum_terms_between(phi_tilde_z1, phi_tilde_z3, I_z2, dz_plane, eta_hat / alpha_hat);
  const GridSpec& g = I_z2.spec();
  const double c = 0.5 * alpha_hat * alpha_hat;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int iy = 1; iy < g.ny - 1; ++iy)
    for (int ix = 1; ix < g.nx - 1; ++ix) {
      lo = std::min(lo, I_z2(ix, iy));
      hi = std::max(hi, I_z2(ix, iy));
    }
  const double width = (hi - lo) / n_bins;
  std::vector<std::vector<double>> bin_I(static_cast<std::size_t>(n_bins)), bin_f(static_cast<std::size_t>(n_bins));
  for (int iy = 1; iy < g.ny - 1; ++iy)
    for (int ix = 1; ix < g.nx - 1; ++ix) {
      const double I = I_z2(ix, iy);
      const std::size_t b = width > 0.0 ? std::min<std::size_t>(static_cast<std::size_t>(n_bins - 1),
                                                                 static_cast<std::size_t>((I - lo) / width))
                                        : 0;
      bin_I[b].push_back(I);
      bin_f[b].push_back(c * t.K(ix, iy) - t.D(ix, iy));
    }
  std::vector<double> xs, ys;
  for (std::size_t b = 0; b < bin_I.size(); ++b) {
    if (bin_I[b].empty()) continue;
    const double x = median_of(bin_I[b]);
    if (!xs.empty() && !(x > xs.back())) continue;
    xs.push_back(x);
    ys.push_back(median_of(bin_f[b]));
  }
  return NonlinearFn::tabulated(std::move(xs), std::move(ys));
}

SineFit fit_sine(const NonlinearFn& table) {
  const auto& xs = table.xs();
  const auto& ys = table.ys();
  const std::size_t n = xs.size();
  if (n < 2) throw std::invalid_argument("fit_sine: need at least two table entries");
  double ss = 0, s = 0, sy = 0, y = 0, yy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double v = std::sin(std::numbers::pi * xs[k]);
    s += v;
    ss += v * v;
    sy += v * ys[k];
    y += ys[k];
    yy += ys[k] * ys[k];
  }
  const double N = static_cast<double>(n);
  const double var_s = ss - s * s / N;
  const double cov = sy - s * y / N;
  const double var_y = yy - y * y / N;
  SineFit fit;
  fit.amplitude = var_s > 0.0 ? cov / var_s : 0.0;
  fit.offset = (y - fit.amplitude * s) / N;
  fit.correlation = (var_s > 0.0 && var_y > 0.0) ? cov / std::sqrt(var_s * var_y) : 0.0;
  return fit;
}

InferenceResult infer(const IntensityTriple& triple, const NonlinearFn& g_over_alpha, const RelaxationConfig& cfg) {
  cfg.validate();
  InferenceResult res;
  res.seed = seed_eta_over_alpha(triple, cfg);
  const double seed = res.seed.peak;

  RelaxationTrace first;
  RelaxationTrace second;
  try {
    first = relaxation_run(triple, g_over_alpha, seed, cfg);
  } catch (const RelaxationError& e) {
    throw RelaxationError(std::string("first relaxation run: ") + e.what(), e.traces());
  }
  const double asymptote = first.final_eta_over_alpha();
  double reflected = 2.0 * asymptote - seed;
  // A reflection through zero would flip the sign of the diffusion; fall back to a ratio reflection.
  if (!(reflected > 0.0) && asymptote > 0.0 && seed > 0.0) reflected = asymptote * asymptote / seed;
  try {
    second = relaxation_run(triple, g_over_alpha, reflected, cfg);
  } catch (const RelaxationError& e) {
    std::vector<RelaxationTrace> both{first};
    both.insert(both.end(), e.traces().begin(), e.traces().end());
    throw RelaxationError(std::string("reflected relaxation run: ") + e.what(), both);
  }

  res.eta_hat = 0.5 * (first.final_eta() + second.final_eta());
  res.eta_over_alpha_hat = 0.5 * (first.final_eta_over_alpha() + second.final_eta_over_alpha());
  const double alpha_runs = 0.5 * (first.final_alpha() + second.final_alpha());
  if (seed >= asymptote) {
    res.trace_up = std::move(first);
    res.trace_down = std::move(second);
  } else {
    res.trace_up = std::move(second);
    res.trace_down = std::move(first);
  }

  PhaseRetrievalConfig rc;
  rc.eta_over_alpha = res.eta_over_alpha_hat;
  rc.eta_alpha_product = res.eta_over_alpha_hat * alpha_runs * alpha_runs;
  rc.g_over_alpha = g_over_alpha;
  rc.max_iters = cfg.retrieval_max_iters;
  rc.grad_norm_tol = cfg.grad_norm_tol;
  const RetrievedPhase r1 = retrieve_phase(triple.mid_intensity(1), triple.mid_dIdz(1), rc);
  const RetrievedPhase r3 = retrieve_phase(triple.mid_intensity(3), triple.mid_dIdz(3), rc);
  if (!r1.converged() || !r3.converged())
    throw RelaxationError("final phase retrieval did not converge", {res.trace_up, res.trace_down});

  const MomentumTerms terms =
      momentum_terms_between(r1.phi_tilde, r3.phi_tilde, triple.I2, triple.dz_plane, res.eta_over_alpha_hat);
  res.alpha_histogram = alpha_histogram(find_iso_pairs(triple.I2, cfg.n_iso_levels), terms, cfg.histogram_bin_width);
  res.alpha_hat = res.alpha_histogram.peak;
  res.alpha_fwhm = res.alpha_histogram.fwhm;

  res.phi_z1 = scaled(r1.phi_tilde, 0.5 * res.alpha_hat);
  res.phi_z3 = scaled(r3.phi_tilde, 0.5 * res.alpha_hat);
  res.N_final = boundary_flux(res.phi_z1, BoundaryContour::inscribed_circle(triple.spec()));
  res.f_table = extract_f(r1.phi_tilde, r3.phi_tilde, triple.I2, triple.dz_plane, res.eta_hat, res.alpha_hat);
  return res;
}

}  // namespace tdcgl
