#include "onebit/diag.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "onebit/numerics.hpp"
#include "onebit/prior_bgm.hpp"

namespace onebit::diag {

namespace {

double gauss(double x, double mean, double var) {
  const double d = x - mean;
  return num::kInvSqrt2Pi / std::sqrt(var) * std::exp(-0.5 * d * d / var);
}

// Independent normal tail CDF for quadrature weights, routed through libm's
// erfc -- a codepath the implementation under test never touches.
double erfc_cdf_neg(double t) { return 0.5 * std::erfc(t / num::kSqrt2); }

// Composite-Simpson estimate of the L1 mass of f across the anchor panels.
// Used only to set the absolute tolerance scale for the adaptive pass; a
// fixed grid avoids the zero scale a 3-point rule would report when its
// samples all land on negligible regions of an odd integrand.
double l1_scale(const std::function<double(double)>& f, const std::vector<double>& anchors) {
  constexpr int kSub = 8;
  double total = 0.0;
  for (std::size_t p = 0; p + 1 < anchors.size(); ++p) {
    const double a = anchors[p], b = anchors[p + 1];
    const double h = (b - a) / kSub;
    double acc = std::abs(f(a)) + std::abs(f(b));
    for (int i = 1; i < kSub; ++i) acc += (i % 2 ? 4.0 : 2.0) * std::abs(f(a + i * h));
    total += acc * h / 3.0;
  }
  return total;
}

// Fixed anchor ladder spaced by the feature width of the integrand, so a
// bump of that width can never sit undetected between the initial samples
// of the adaptive pass (which would make it accept ~0 for the panel).
void add_ladder(std::vector<double>& anchors, double center, double width, double lo, double hi) {
  for (int j = -16; j <= 16; ++j) {
    const double x = center + j * width;
    if (x > lo && x < hi) anchors.push_back(x);
  }
}

// Adaptive integral of f over the anchor panels with the tolerance scale set
// by the L1 mass (floored so negligible panels are not refined into the
// subnormal range).
double integrate_panels(const std::function<double(double)>& f,
                        const std::vector<double>& anchors) {
  const double coarse = l1_scale(f, anchors);
  const double tol = std::max(coarse, 1e-60) * 1e-12 / static_cast<double>(anchors.size() - 1);
  double total = 0.0;
  for (std::size_t p = 0; p + 1 < anchors.size(); ++p)
    total += adaptive_simpson(f, anchors[p], anchors[p + 1], tol);
  return total;
}

double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                   double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

// Relative error with a small absolute floor for quantities that may cross 0.
double rel_err(double impl, double oracle, double floor_scale) {
  return std::abs(impl - oracle) / std::max(std::abs(oracle), floor_scale);
}

struct ErrTracker {
  double worst = 0.0;
  std::string detail;
  void track(double err, const char* what, int instance) {
    if (err > worst) {
      worst = err;
      std::ostringstream os;
      os << what << " at instance " << instance << " (rel err " << err << ")";
      detail = os.str();
    }
  }
};

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

double oracle_std_cdf_neg(double t) {
  if (t < 0.0) return 1.0 - oracle_std_cdf_neg(-t);
  if (t > 37.0) return 0.0;  // ~5e-300, negligible against every compared scale
  // Integrate the density rescaled by exp(t^2/2) so the integrand starts at 1
  // and the tolerance never sinks into the subnormal range.
  const auto g = [t](double u) { return std::exp(0.5 * (t - u) * (t + u)); };
  const double iscaled = adaptive_simpson(g, t, t + 42.0, 1e-12 / (1.0 + t));
  const double hi = 0.5 * t * t;
  const double lo = std::fma(0.5 * t, t, -hi);
  return num::kInvSqrt2Pi * std::exp(-hi) * (1.0 - lo) * iscaled;
}

SignalQuad quad_signal_posterior(double r, double tau_r, const SignalPriorParams& lambda) {
  SignalQuad out;
  out.psi = (1.0 - lambda.kappa) * gauss(r, 0.0, tau_r);  // spike mass, handled exactly
  const double spike_psi = out.psi;

  // Panels for each slab component: the product of the two Gaussians is a
  // single bump at `center` of width `width`, covered by a ladder of anchors.
  const auto component_anchors = [&](const GaussComponent& comp) {
    const double v = comp.variance + tau_r;
    const double center = (comp.mean * tau_r + r * comp.variance) / v;
    const double width = std::sqrt(comp.variance * tau_r / v);
    std::vector<double> anchors{center - 16.0 * width, center + 16.0 * width};
    add_ladder(anchors, center, width, anchors[0], anchors[1]);
    if (0.0 > anchors[0] && 0.0 < anchors[1]) anchors.push_back(0.0);
    std::sort(anchors.begin(), anchors.end());
    return anchors;
  };

  double mean_num = 0.0;
  for (const auto& comp : lambda.components) {
    const double coef = lambda.kappa * comp.weight;
    if (coef == 0.0) continue;
    const std::vector<double> anchors = component_anchors(comp);
    const auto base = [&](double x) { return gauss(x, comp.mean, comp.variance) * gauss(r, x, tau_r); };
    out.psi += coef * integrate_panels(base, anchors);
    mean_num += coef * integrate_panels([&](double x) { return x * base(x); }, anchors);
  }
  out.mean = mean_num / out.psi;

  // Variance as a central moment: integrating (x - mean)^2 directly avoids
  // the cancellation that second_moment - mean^2 suffers for tight
  // posteriors.  The spike at 0 contributes mean^2 times its mass.
  double var_num = spike_psi * out.mean * out.mean;
  for (const auto& comp : lambda.components) {
    const double coef = lambda.kappa * comp.weight;
    if (coef == 0.0) continue;
    const std::vector<double> anchors = component_anchors(comp);
    const auto fc = [&](double x) {
      const double d = x - out.mean;
      return d * d * gauss(x, comp.mean, comp.variance) * gauss(r, x, tau_r);
    };
    var_num += coef * integrate_panels(fc, anchors);
  }
  out.variance = var_num / out.psi;
  out.second = out.variance + out.mean * out.mean;
  return out;
}

ChannelQuad quad_channel(double q, double tau_q, double gamma_w, double y) {
  const double v = tau_q + gamma_w;
  const double spread = std::sqrt(v);
  const double sqw = gamma_w > 0.0 ? std::sqrt(gamma_w) : 0.0;

  // Raw moments 0..2 plus the central second moment for one sign value.
  const auto moments_for = [&](double yy, double* ik) {
    double lo, hi;
    if (gamma_w == 0.0) {
      // Hard sign: restrict to the consistent half-line instead of using an
      // indicator inside a panel.
      if (yy < 0.0) {
        lo = std::min(q, 0.0) - 16.0 * spread;
        hi = 0.0;
      } else {
        lo = 0.0;
        hi = std::max(q, 0.0) + 16.0 * spread;
      }
    } else {
      lo = std::min(q, 0.0) - 16.0 * spread;
      hi = std::max(q, 0.0) + 16.0 * spread;
    }
    std::vector<double> anchors{lo, hi};
    // Ladder over the Gaussian bump, plus one at the sign-probability
    // transition (scale sqrt(gamma_w)) when the noise is soft.
    add_ladder(anchors, q, std::sqrt(tau_q), lo, hi);
    if (gamma_w > 0.0) add_ladder(anchors, 0.0, sqw, lo, hi);
    if (q > lo && q < hi) anchors.push_back(q);
    if (0.0 > lo && 0.0 < hi) anchors.push_back(0.0);
    std::sort(anchors.begin(), anchors.end());
    anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());

    const auto base = [&](double z) {
      double val = gauss(z, q, tau_q);
      if (gamma_w > 0.0) val *= erfc_cdf_neg(-yy * z / sqw);
      return val;
    };
    for (int k = 0; k < 3; ++k) {
      const auto f = [&](double z) {
        double val = base(z);
        for (int p = 0; p < k; ++p) val *= z;
        return val;
      };
      ik[k] = integrate_panels(f, anchors);
    }
    const double m = ik[1] / ik[0];
    ik[3] = integrate_panels(
        [&](double z) {
          const double d = z - m;
          return d * d * base(z);
        },
        anchors);
  };

  ChannelQuad out;
  double neg[4], req[4];
  moments_for(-1.0, neg);
  out.h0 = neg[0];
  out.h1 = neg[1];
  out.h2 = neg[2];
  if (y < 0.0) {
    for (int k = 0; k < 4; ++k) req[k] = neg[k];
  } else {
    moments_for(+1.0, req);
  }
  out.u0 = req[0];
  out.mean = req[1] / req[0];
  out.second = req[2] / req[0];
  out.variance = req[3] / req[0];
  return out;
}

BatteryResult battery_signal_quadrature(int instances, std::uint64_t seed, double tol) {
  std::mt19937_64 rng(seed);
  const auto unif = [&](double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
  };
  ErrTracker tr;
  for (int k = 0; k < instances; ++k) {
    SignalPriorParams lambda;
    lambda.kappa = unif(0.05, 0.95);
    const int d = 1 + k % 3;
    lambda.components.resize(d);
    double wsum = 0.0;
    for (auto& c : lambda.components) {
      c.weight = unif(0.2, 1.0);
      c.mean = unif(-3.0, 3.0);
      c.variance = unif(0.05, 4.0);
      wsum += c.weight;
    }
    for (auto& c : lambda.components) c.weight /= wsum;
    const double tau_r = unif(0.02, 5.0);
    const double r = unif(-6.0, 6.0);

    const SignalQuad oracle = quad_signal_posterior(r, tau_r, lambda);
    const double ovar = oracle.variance;

    Eigen::VectorXd rv(1);
    rv << r;
    const SignalMoments impl = posterior_moments_x(rv, tau_r, lambda);

    tr.track(rel_err(psi_norm(r, tau_r, lambda), oracle.psi, 1e-300), "psi", k);
    tr.track(rel_err(impl.x_hat[0], oracle.mean, 1e-10 * std::sqrt(oracle.second)), "mean", k);
    tr.track(rel_err(impl.tau_x, ovar, 1e-10 * oracle.second), "variance", k);
  }
  BatteryResult res{"signal posterior vs quadrature", tr.worst <= tol, instances, tr.worst, ""};
  if (!res.passed) res.detail = tr.detail;
  return res;
}

BatteryResult battery_channel_quadrature(int instances, std::uint64_t seed, double tol,
                                         const ChannelHooks* hooks) {
  ChannelHooks fns;
  fns.h0 = [](double q, double t, double g) { return h0(q, t, g); };
  fns.h1 = [](double q, double t, double g) { return h1(q, t, g); };
  fns.h2 = [](double q, double t, double g) { return h2(q, t, g); };
  if (hooks) {
    if (hooks->h0) fns.h0 = hooks->h0;
    if (hooks->h1) fns.h1 = hooks->h1;
    if (hooks->h2) fns.h2 = hooks->h2;
  }

  std::mt19937_64 rng(seed);
  const auto unif = [&](double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
  };
  ErrTracker tr;
  bool bounds_ok = true;
  std::string bounds_detail;
  for (int k = 0; k < instances; ++k) {
    const double tau_q = unif(0.05, 3.0);
    const double gw = (k % 2 == 0) ? 0.0 : unif(0.001, 1.0);
    const double q = unif(-3.0, 3.0);
    const double y = unif(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    const double v = tau_q + gw;

    const ChannelQuad oracle = quad_channel(q, tau_q, gw, y);
    const double ovar = oracle.variance;

    const double scale1 = std::abs(q) * oracle.h0 + tau_q * gauss(q, 0.0, v);
    const double scale2 = (q * q + tau_q) * oracle.h0 +
                          std::abs(q) * (tau_q * tau_q + 2.0 * tau_q * gw) / v * gauss(q, 0.0, v);
    tr.track(rel_err(fns.h0(q, tau_q, gw), oracle.h0, 1e-300), "h0", k);
    tr.track(rel_err(fns.h1(q, tau_q, gw), oracle.h1, 1e-10 * scale1), "h1", k);
    tr.track(rel_err(fns.h2(q, tau_q, gw), oracle.h2, 1e-10 * scale2), "h2", k);

    Eigen::VectorXd qv(1), yv(1);
    qv << q;
    yv << y;
    const ChannelMoments impl = posterior_moments_z(qv, tau_q, yv, gw);
    tr.track(rel_err(impl.mean_z[0], oracle.mean, 1e-10 * (std::abs(q) + std::sqrt(v))), "mean",
             k);
    tr.track(rel_err(impl.var_z[0], ovar, 1e-10 * tau_q), "variance", k);
    tr.track(rel_err(std::exp(impl.log_evidence), oracle.u0, 1e-300), "evidence", k);
    if (!(impl.var_z[0] >= 0.0 && impl.var_z[0] <= tau_q)) {
      bounds_ok = false;
      bounds_detail = "variance bound violated at instance " + std::to_string(k);
    }
  }
  BatteryResult res{"channel moments vs quadrature", bounds_ok && tr.worst <= tol, instances,
                    tr.worst, ""};
  if (!res.passed) res.detail = bounds_ok ? tr.detail : bounds_detail;
  return res;
}

BatteryResult battery_signal_derivatives(int instances, std::uint64_t seed, double tol_first,
                                         double tol_second) {
  std::mt19937_64 rng(seed);
  const auto unif = [&](double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
  };
  ErrTracker tr;
  bool pass = true;
  std::string detail;
  for (int k = 0; k < instances; ++k) {
    const int n = 50;
    Eigen::VectorXd psi(n), r(n);
    for (int i = 0; i < n; ++i) {
      psi[i] = unif(0.0, 1.0);
      r[i] = unif(-4.0, 4.0);
    }
    const double mu = unif(-2.0, 2.0);
    const double gamma = unif(0.1, 3.0);
    const double tau_r = unif(0.05, 2.0);

    // Independent evaluation of the objective's gamma-dependent part.
    const auto f = [&](double g) {
      const double v = g + tau_r;
      double val = 0.0;
      for (int i = 0; i < n; ++i) {
        const double d = r[i] - mu;
        val += psi[i] * (-num::kLogSqrt2Pi - 0.5 * std::log(v) - 0.5 * d * d / v);
      }
      return val;
    };
    const double h = 1e-4 * (gamma + tau_r);
    const double fd_first = (f(gamma + h) - f(gamma - h)) / (2.0 * h);
    const double fd_second = (f(gamma + h) - 2.0 * f(gamma) + f(gamma - h)) / (h * h);

    const GmVarianceDerivs impl = gm_variance_derivatives(psi, r, tau_r, gamma, mu);

    const double vv = gamma + tau_r;
    double scale1 = 0.0, scale2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d2 = (r[i] - mu) * (r[i] - mu);
      scale1 += psi[i] * (0.5 * d2 / (vv * vv) + 0.5 / vv);
      scale2 += psi[i] * (d2 / (vv * vv * vv) + 0.5 / (vv * vv));
    }
    const double e1 = rel_err(impl.first, fd_first, 1e-7 * scale1);
    const double e2 = rel_err(impl.second, fd_second, 1e-7 * scale2);
    tr.track(e1, "f'", k);
    tr.track(e2 * tol_first / tol_second, "f''(scaled)", k);  // common worst-err scale
    if (e1 > tol_first || e2 > tol_second) {
      pass = false;
      if (detail.empty())
        detail = "instance " + std::to_string(k) + ": f' err " + std::to_string(e1) +
                 ", f'' err " + std::to_string(e2);
    }
  }
  BatteryResult res{"variance-step derivatives vs finite differences", pass, instances, tr.worst,
                    detail};
  return res;
}

BatteryResult battery_noise_derivatives(int instances, std::uint64_t seed, double tol_first,
                                        double tol_second) {
  std::mt19937_64 rng(seed);
  const auto unif = [&](double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
  };
  ErrTracker tr;
  bool pass = true;
  std::string detail;
  for (int k = 0; k < instances; ++k) {
    const int m = 40;
    Eigen::VectorXd q(m), y(m);
    for (int i = 0; i < m; ++i) {
      q[i] = unif(-2.5, 2.5);
      y[i] = unif(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    }
    const double tau_q = unif(0.1, 2.0);
    const double gw = unif(0.005, 0.5);
    const double v = tau_q + gw;

    const auto g1_at = [&](double g) { return noise_objective_and_derivatives(q, tau_q, y, g).g1; };
    const double h1s = 1e-4 * v;
    const double h2s = 7e-4 * v;
    const double fd_first = (g1_at(gw + h1s) - g1_at(gw - h1s)) / (2.0 * h1s);
    const double fd_second = (g1_at(gw + h2s) - 2.0 * g1_at(gw) + g1_at(gw - h2s)) / (h2s * h2s);

    const NoiseObjective impl = noise_objective_and_derivatives(q, tau_q, y, gw);

    double scale1 = 0.0, scale2 = 0.0;
    const double sv = std::sqrt(v);
    for (int i = 0; i < m; ++i) {
      const double gbar = -y[i] * q[i] / sv;
      const double u = num::inv_mills(gbar);
      const double d1 = gbar * u / (2.0 * v);
      scale1 += std::abs(d1);
      scale2 += d1 * d1 + std::abs(gbar * gbar * gbar - 3.0 * gbar) * u / (4.0 * v * v);
    }
    const double e1 = rel_err(impl.g1p, fd_first, 1e-7 * std::max(scale1, 1e-6));
    const double e2 = rel_err(impl.g1pp, fd_second, 1e-7 * std::max(scale2, 1e-6));
    tr.track(e1, "g1'", k);
    tr.track(e2 * tol_first / tol_second, "g1''(scaled)", k);
    if (e1 > tol_first || e2 > tol_second) {
      pass = false;
      if (detail.empty())
        detail = "instance " + std::to_string(k) + ": g1' err " + std::to_string(e1) +
                 ", g1'' err " + std::to_string(e2);
    }
  }
  BatteryResult res{"noise-objective derivatives vs finite differences", pass, instances, tr.worst,
                    detail};
  return res;
}

BatteryResult battery_em_monotonic(int instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto unif = [&](double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
  };
  std::normal_distribution<double> normal(0.0, 1.0);

  bool pass = true;
  std::string detail;
  double worst_drop = 0.0;
  for (int k = 0; k < instances; ++k) {
    const int n = 200;
    const double tau_r = unif(0.05, 1.0);
    const double kappa_gen = unif(0.2, 0.8);
    const double mu_gen = unif(-1.0, 1.0);
    const double sd_gen = std::sqrt(unif(0.3, 2.0));
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) {
      const double x = unif(0.0, 1.0) < kappa_gen ? mu_gen + sd_gen * normal(rng) : 0.0;
      r[i] = x + std::sqrt(tau_r) * normal(rng);
    }

    SignalPriorParams lambda;
    lambda.kappa = unif(0.1, 0.9);
    lambda.components.resize(1 + k % 3);
    double wsum = 0.0;
    for (auto& c : lambda.components) {
      c.weight = unif(0.2, 1.0);
      c.mean = unif(-2.0, 2.0);
      c.variance = unif(0.2, 2.0);
      wsum += c.weight;
    }
    for (auto& c : lambda.components) c.weight /= wsum;

    // Closed-form substeps only; the objective trace must be nondecreasing.
    for (int round = 0; round < 6; ++round) {
      const double before = log_marginal(r, tau_r, lambda);
      const Responsibilities resp = responsibilities(r, tau_r, lambda);
      const WeightsMeansUpdate upd = em_update_weights_means(resp, r, lambda);
      lambda.kappa = upd.kappa;
      for (int i = 0; i < lambda.num_components(); ++i) {
        lambda.components[i].weight = upd.xi[i];
        lambda.components[i].mean = upd.mu[i];
      }
      const double after = log_marginal(r, tau_r, lambda);
      worst_drop = std::max(worst_drop, before - after);
      if (after < before - 1e-10) {
        pass = false;
        if (detail.empty())
          detail = "objective dropped by " + std::to_string(before - after) + " at instance " +
                   std::to_string(k) + " round " + std::to_string(round);
      }
    }

    // Noise-side ascent: the guarded line search never decreases g1.
    const int m = 60;
    Eigen::VectorXd q(m), y(m);
    for (int i = 0; i < m; ++i) {
      q[i] = unif(-2.0, 2.0);
      y[i] = unif(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    }
    const double tau_q = unif(0.1, 2.0);
    const double g0 = unif(1e-4, 2.0);
    const double g0c = std::clamp(g0, kGammaWFloor, kGammaWCeiling);
    const double g_before = noise_objective_and_derivatives(q, tau_q, y, g0c).g1;
    const double g1_new = estimate_noise_param(q, tau_q, y, g0, 5);
    const double g_after = noise_objective_and_derivatives(q, tau_q, y, g1_new).g1;
    worst_drop = std::max(worst_drop, g_before - g_after);
    if (g_after < g_before - 1e-12) {
      pass = false;
      if (detail.empty())
        detail = "g1 dropped by " + std::to_string(g_before - g_after) + " at instance " +
                 std::to_string(k);
    }
  }
  return BatteryResult{"EM closed-form and noise-step ascent", pass, instances, worst_drop,
                       detail};
}

BatteryResult battery_sign_symmetry(int instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto unif = [&](double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
  };
  std::normal_distribution<double> normal(0.0, 1.0);

  bool pass = true;
  std::string detail;
  double worst = 0.0;
  for (int k = 0; k < instances; ++k) {
    const int m = 30;
    const double scale = unif(0.5, 2.0);
    Eigen::VectorXd q(m), y(m);
    for (int i = 0; i < m; ++i) {
      q[i] = scale * normal(rng);
      y[i] = unif(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    }
    const double tau_q = unif(0.05, 2.0);
    const double gw = (k % 2 == 0) ? 0.0 : unif(0.001, 0.5);

    const ChannelMoments m1 = posterior_moments_z(q, tau_q, y, gw);
    const ChannelMoments m2 = posterior_moments_z(-q, tau_q, -y, gw);
    for (int i = 0; i < m; ++i) {
      if (m1.mean_z[i] != -m2.mean_z[i] || m1.var_z[i] != m2.var_z[i]) {
        pass = false;
        if (detail.empty()) detail = "moment symmetry broke at instance " + std::to_string(k);
      }
    }
    if (m1.log_evidence != m2.log_evidence) {
      pass = false;
      if (detail.empty()) detail = "evidence symmetry broke at instance " + std::to_string(k);
    }
    const NoiseObjective o1 = noise_objective_and_derivatives(q, tau_q, y, std::max(gw, 1e-6));
    const NoiseObjective o2 = noise_objective_and_derivatives(-q, tau_q, -y, std::max(gw, 1e-6));
    if (o1.g1 != o2.g1 || o1.g1p != o2.g1p || o1.g1pp != o2.g1pp) {
      pass = false;
      if (detail.empty()) detail = "objective symmetry broke at instance " + std::to_string(k);
    }

    // Complement and total-probability identities.
    const double t = unif(-4.0, 4.0);
    const double dev = std::abs(h0(t, tau_q, gw) + h0(-t, tau_q, gw) - 1.0);
    Eigen::VectorXd q1(1), yp(1), yn(1);
    q1 << t;
    yp << 1.0;
    yn << -1.0;
    const double total = std::exp(posterior_moments_z(q1, tau_q, yp, gw).log_evidence) +
                         std::exp(posterior_moments_z(q1, tau_q, yn, gw).log_evidence);
    const double dev2 = std::abs(total - 1.0);
    worst = std::max({worst, dev, dev2});
    if (dev > 1e-13 || dev2 > 1e-12) {
      pass = false;
      if (detail.empty()) detail = "complement identity off by " + std::to_string(std::max(dev, dev2));
    }
  }
  return BatteryResult{"sign equivariance and complement identities", pass, instances, worst,
                       detail};
}

std::vector<BatteryResult> run_all_batteries() {
  std::vector<BatteryResult> out;
  out.push_back(battery_signal_quadrature(60, 0xA1, 1e-6));
  out.push_back(battery_channel_quadrature(60, 0xB2, 1e-7));
  out.push_back(battery_signal_derivatives(40, 0xC3, 1e-5, 1e-3));
  out.push_back(battery_noise_derivatives(40, 0xD4, 1e-5, 1e-3));
  out.push_back(battery_em_monotonic(25, 0xE5));
  out.push_back(battery_sign_symmetry(40, 0xF6));
  return out;
}

}  // namespace onebit::diag
