#include "colombeau/testing.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "colombeau/quadrature.hpp"

namespace colombeau {

// ---------------------------------------------------------------------------
// worker budget and deterministic parallel map

namespace {
std::atomic<int> g_workers{0};
}

int worker_budget() {
  int w = g_workers.load();
  if (w > 0) return w;
  if (const char* env = std::getenv("COLOMBEAU_WORKERS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(std::min(hc, 8u));
}

void set_worker_budget(int workers) { g_workers.store(workers); }

void parallel_for_index(size_t count, const std::function<void(size_t)>& fn) {
  int workers = worker_budget();
  if (workers <= 1 || count < 4) {
    for (size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  int nthreads = std::min<size_t>(workers, count);
  std::vector<std::thread> pool;
  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (int t = 0; t < nthreads; ++t) {
    pool.emplace_back([&] {
      while (true) {
        size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// slope fitting

std::vector<double> eps_grid(double eps_min, double eps_max, int points) {
  if (points < 2 || eps_min <= 0 || eps_max <= eps_min)
    throw ConstructionError("invalid eps grid parameters");
  std::vector<double> g;
  for (int i = 0; i < points; ++i)
    g.push_back(eps_max * std::pow(eps_min / eps_max, static_cast<double>(i) / (points - 1)));
  return g;
}

AsymptoticReport fit_order(const std::vector<std::pair<double, double>>& samples, double target,
                           double tolerance, bool two_sided) {
  if (samples.size() < 6)
    throw ConstructionError("order fit needs at least 6 sweep points");
  AsymptoticReport rep;
  rep.samples = samples;
  rep.target = target;
  rep.tolerance = tolerance;
  rep.two_sided = two_sided;

  constexpr double kZeroFloor = 1e-250;
  std::vector<std::pair<double, double>> logs;
  for (auto& [e, s] : samples)
    if (std::abs(s) > kZeroFloor) logs.push_back({std::log(e), std::log(std::abs(s))});

  if (logs.empty()) {
    rep.exact_zero = true;
    rep.slope = std::numeric_limits<double>::infinity();
    rep.intercept = 0;
    rep.r_squared = 1;
    rep.verdict = Verdict::Pass;
    return rep;
  }
  if (logs.size() < 3) {
    rep.verdict = Verdict::Inconclusive;
    return rep;
  }

  double n = static_cast<double>(logs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (auto& [lx, ly] : logs) {
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  double denom = n * sxx - sx * sx;
  rep.slope = (n * sxy - sx * sy) / denom;
  rep.intercept = (sy - rep.slope * sx) / n;
  double ss_tot = syy - sy * sy / n;
  double ss_res = 0;
  for (auto& [lx, ly] : logs) {
    double r = ly - (rep.slope * lx + rep.intercept);
    ss_res += r * r;
  }
  rep.r_squared = ss_tot < 1e-30 ? 1.0 : std::max(0.0, 1.0 - ss_res / ss_tot);

  bool ok = two_sided ? std::abs(rep.slope - target) <= tolerance : rep.slope >= target - tolerance;
  rep.verdict = ok ? Verdict::Pass : Verdict::Fail;
  return rep;
}

double sup_abs_refined(const TestFunction& phi, int samples_per_axis) {
  const Box& s = phi.support();
  if (s.is_empty() || phi.expr().is_zero()) return 0;
  int m = samples_per_axis > 0 ? samples_per_axis : (phi.dim() == 1 ? 201 : 25);
  double best = 0;
  Point argmax = s.center();
  for (const Point& y : s.grid(m)) {
    double v = std::abs(phi.evaluate(y));
    if (v > best) {
      best = v;
      argmax = y;
    }
  }
  // one local refinement pass around the coarse argmax
  Box local(phi.dim());
  for (int i = 0; i < phi.dim(); ++i) {
    double h = 2.0 * s.iv[i].width() / (m - 1);
    local.iv[i] = {argmax[i] - h, argmax[i] + h};
  }
  local = local.intersect(s);
  for (const Point& y : local.grid(m)) best = std::max(best, std::abs(phi.evaluate(y)));
  return best;
}

// ---------------------------------------------------------------------------
// batteries

std::vector<int> KernelBattery::orders() const {
  std::vector<int> qs;
  for (auto& k : kernels)
    if (std::find(qs.begin(), qs.end(), k.order()) == qs.end()) qs.push_back(k.order());
  std::sort(qs.begin(), qs.end());
  return qs;
}

std::vector<size_t> KernelBattery::of_order(int q) const {
  std::vector<size_t> idx;
  for (size_t i = 0; i < kernels.size(); ++i)
    if (kernels[i].order() == q) idx.push_back(i);
  return idx;
}

KernelBattery standard_battery(int n, const std::vector<int>& orders) {
  KernelBattery b;
  LambdaPartition lp = lambda_partition(geometric_eps_seq(12));
  Domain glue_domain = Domain::box(Box::cube(n, -2, 2));
  Domain diffeo_domain = Domain::box(Box::cube(n, -4, 4));
  Diffeomorphism mu;
  if (n == 1) {
    mu = Diffeomorphism::affine({0.8, 0, 0, 1}, {0.05, 0}, diffeo_domain);
  } else {
    PolyN g(2);
    g.add_term(MultiIndex(2, {0, 1}), 0.15);
    g.add_term(MultiIndex(2, {0, 2}), 0.05);
    mu = Diffeomorphism::shear(Expr::polynomial(g), diffeo_domain);
  }
  for (int q : orders) {
    SmoothingKernel model = model_kernel(build_mollifier(q, n, false));
    SmoothingKernel shifted = model_kernel(build_mollifier(q, n, false, 0.6, 0.3));
    b.add(model, "model_q" + std::to_string(q));
    b.add(shifted, "model_shifted_q" + std::to_string(q));
    b.add(glue_to_domain(model, glue_domain, lp), "glued_q" + std::to_string(q));
    b.add(pullback_kernel(mu, model), "pullback_q" + std::to_string(q));
    std::map<MultiIndex, SmoothingKernel, bool (*)(const MultiIndex&, const MultiIndex&)> phis(
        multi_index_less);
    VectorField e1 = VectorField::coordinate_field(n, 0, Domain::whole_space(n));
    phis.insert({MultiIndex::unit(n, 0), derive_kernel(model, e1)});
    std::vector<double> eseq = geometric_eps_seq(12);
    std::vector<Point> xseq(eseq.size(), Point{0, 0});
    b.add(lsk7_build(model, phis, MultiIndex::unit(n, 0), eseq, xseq, lambda_partition(eseq)),
          "lsk7_q" + std::to_string(q));
  }
  return b;
}

// ---------------------------------------------------------------------------
// sweeps

std::vector<SweepSample> sweep(const GenFun& R, const SmoothingKernel& k, const CompactProbe& K,
                               const MultiIndex& alpha, const std::vector<double>& eps) {
  for (double e : eps) k.require_valid_eps(e);
  // The probe grid alone cannot see suprema that concentrate at scale eps
  // (kernel-width features between grid points), so each grid point gets a
  // cluster of eps-scaled satellites along the axes.
  const double C = k.support_constant();
  const int n = R.dim();
  std::vector<size_t> block_start;
  std::vector<std::pair<size_t, Point>> jobs;  // (eps index, probe point)
  for (size_t ie = 0; ie < eps.size(); ++ie) {
    block_start.push_back(jobs.size());
    for (const Point& x : K.grid) {
      jobs.push_back({ie, x});
      for (int axis = 0; axis < n; ++axis) {
        for (double off : {-1.0, -0.5, 0.5, 1.0}) {
          Point y = x;
          y[axis] += off * C * eps[ie];
          if (K.hull.contains(y)) jobs.push_back({ie, y});
        }
      }
    }
  }
  std::vector<SweepSample> out(jobs.size());
  parallel_for_index(jobs.size(), [&](size_t idx) {
    auto& [ie, x] = jobs[idx];
    out[idx] = {eps[ie], x, composite_derivative(R, k, {}, eps[ie], x, alpha)};
  });
  return out;
}

double sweep_value_finite_difference(const GenFun& R, const SmoothingKernel& k, double eps,
                                     const Point& x, const MultiIndex& alpha, double h) {
  if (alpha.order() == 0) return evaluate_with_kernel(R, k, eps, x);
  int axis = alpha.e[0] > 0 ? 0 : 1;
  MultiIndex lower = alpha;
  lower.e[axis] -= 1;
  Point xp = x, xm = x;
  xp[axis] += h;
  xm[axis] -= h;
  return (sweep_value_finite_difference(R, k, eps, xp, lower, h) -
          sweep_value_finite_difference(R, k, eps, xm, lower, h)) /
         (2 * h);
}

std::vector<std::pair<double, double>> reduce_sweep(const std::vector<SweepSample>& samples) {
  std::vector<std::pair<double, double>> out;
  for (const auto& s : samples) {
    if (!out.empty() && out.back().first == s.epsilon)
      out.back().second = std::max(out.back().second, std::abs(s.value));
    else
      out.push_back({s.epsilon, std::abs(s.value)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// moderateness / negligibility

namespace {

int slope_to_N(double min_slope) {
  if (std::isinf(min_slope)) return 0;
  return std::max(0, static_cast<int>(std::ceil(-min_slope - 0.1)));
}

}  // namespace

ModeratenessResult moderateness_test(const GenFun& R, const KernelBattery& battery,
                                     const CompactProbe& K, int alpha_max,
                                     const std::vector<double>& eps, double slope_tol,
                                     const SweepLogger& log) {
  ModeratenessResult res;
  res.pass = true;
  for (const MultiIndex& alpha : multi_indices_up_to_order(R.dim(), alpha_max)) {
    ModeratenessResult::PerAlpha pa;
    pa.alpha = alpha;
    int best_N = -1;
    for (int q : battery.orders()) {
      OrderFit of;
      of.q = q;
      double min_slope = std::numeric_limits<double>::infinity();
      for (size_t idx : battery.of_order(q)) {
        auto samples = sweep(R, battery.kernels[idx], K, alpha, eps);
        if (log) log(battery.names[idx], alpha, samples);
        auto rep = fit_order(reduce_sweep(samples), -1e9, slope_tol, false);
        rep.subject = battery.names[idx];
        of.all_finite = of.all_finite && rep.verdict != Verdict::Inconclusive;
        if (!rep.exact_zero) min_slope = std::min(min_slope, rep.slope);
        of.reports.push_back(std::move(rep));
      }
      of.min_slope = min_slope;
      if (of.all_finite) {
        int N = slope_to_N(min_slope);
        if (best_N < 0 || N < best_N) {
          best_N = N;
          pa.chosen_q = q;
        }
      }
      pa.fits.push_back(std::move(of));
    }
    pa.verdict = best_N >= 0 ? Verdict::Pass : Verdict::Fail;
    pa.N = std::max(best_N, 0);
    res.worst_N = std::max(res.worst_N, pa.N);
    res.pass = res.pass && pa.verdict == Verdict::Pass;
    res.per_alpha.push_back(std::move(pa));
  }
  return res;
}

NegligibilityResult negligibility_test(const GenFun& R, const KernelBattery& battery,
                                       const CompactProbe& K, const std::vector<int>& m_targets,
                                       bool use_alpha0_only, const std::vector<double>& eps,
                                       double slope_tol, int alpha_max, const SweepLogger& log) {
  NegligibilityResult res;
  res.pass = true;
  std::vector<MultiIndex> alphas = use_alpha0_only
                                       ? std::vector<MultiIndex>{MultiIndex::zero(R.dim())}
                                       : multi_indices_up_to_order(R.dim(), alpha_max);
  for (int m : m_targets) {
    for (const MultiIndex& alpha : alphas) {
      NegligibilityResult::PerTarget pt;
      pt.m = m;
      pt.alpha = alpha;
      // cache one report per kernel, then look for a witnessing order
      std::vector<AsymptoticReport> reports;
      for (size_t i = 0; i < battery.kernels.size(); ++i) {
        auto samples = sweep(R, battery.kernels[i], K, alpha, eps);
        if (log) log(battery.names[i], alpha, samples);
        auto rep = fit_order(reduce_sweep(samples), static_cast<double>(m), slope_tol, false);
        rep.subject = battery.names[i];
        reports.push_back(std::move(rep));
      }
      for (int q : battery.orders()) {
        OrderFit of;
        of.q = q;
        bool all_pass = true;
        double min_slope = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < battery.kernels.size(); ++i) {
          if (battery.kernels[i].order() < q) continue;
          of.reports.push_back(reports[i]);
          all_pass = all_pass && reports[i].passed();
          if (!reports[i].exact_zero) min_slope = std::min(min_slope, reports[i].slope);
        }
        of.min_slope = min_slope;
        of.all_finite = all_pass;
        pt.fits.push_back(std::move(of));
        if (all_pass && pt.chosen_q < 0) pt.chosen_q = q;
      }
      pt.verdict = pt.chosen_q >= 0 ? Verdict::Pass : Verdict::Fail;
      res.pass = res.pass && pt.verdict == Verdict::Pass;
      res.per_target.push_back(std::move(pt));
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// association

namespace {

double psi_l1_norm(const TestFunction& psi) {
  auto f = [&](const Point& x) { return std::abs(psi.evaluate(x)); };
  QuadratureOptions loose{1e-6, 1e-8, 0};
  return integrate(f, psi.support(), psi.dim(), loose).value;
}

}  // namespace

AssociationResult association_test(const GenFun& R, const GenFun& S, const TestFunction& psi,
                                   const KernelBattery& battery, const std::vector<double>& eps,
                                   double assoc_tol) {
  if (eps.size() < 6) throw ConstructionError("association test needs at least 6 eps points");
  GenFun diff = R - S;
  double scale = psi_l1_norm(psi);
  double tol = assoc_tol > 0 ? assoc_tol : 1e-3 * std::max(scale, 1e-30);

  AssociationResult res;
  // narrow integrand features (support ~ C eps) need a floor on refinement
  QuadratureOptions outer{1e-7, 1e-9, 0, 4};
  for (size_t ki = 0; ki < battery.kernels.size(); ++ki) {
    const SmoothingKernel& k = battery.kernels[ki];
    AssociationResult::PerKernel pk;
    pk.kernel = battery.names[ki];
    pk.q = k.order();
    std::vector<double> I(eps.size(), 0.0);
    parallel_for_index(eps.size(), [&](size_t ie) {
      auto f = [&](const Point& x) {
        return evaluate_with_kernel(diff, k, eps[ie], x) * psi.evaluate(x);
      };
      I[ie] = integrate(f, psi.support(), psi.dim(), outer).value;
    });
    for (size_t ie = 0; ie < eps.size(); ++ie) pk.I.push_back({eps[ie], I[ie]});

    double absmax = 0;
    for (double v : I) absmax = std::max(absmax, std::abs(v));
    if (absmax <= std::max(1e-11, 1e-9 * scale)) {
      pk.verdict = Verdict::Pass;
      pk.limit = 0;
      pk.detail = "identically zero within quadrature tolerance";
      res.per_kernel.push_back(std::move(pk));
      continue;
    }

    AsymptoticReport decay = fit_order(pk.I, 0, kSlopeTol, false);
    if (decay.slope < -0.05 && !decay.exact_zero) {
      pk.verdict = Verdict::Fail;
      pk.divergence_order = -decay.slope;
      pk.r_squared = decay.r_squared;
      pk.detail = "not associated, divergence order " + std::to_string(-decay.slope);
      res.per_kernel.push_back(std::move(pk));
      continue;
    }

    // Richardson extrapolation assuming a single leading power
    size_t nE = eps.size();
    double d_last = I[nE - 2] - I[nE - 1];
    double d_prev = I[nE - 3] - I[nE - 2];
    double r = eps[nE - 1] / eps[nE - 2];  // < 1 on a descending grid
    double L = I[nE - 1];
    if (std::abs(d_last) > 1e-14 && std::abs(d_prev) > 1e-14 && d_prev * d_last > 0) {
      double p = std::log(d_prev / d_last) / std::log(eps[nE - 3] / eps[nE - 2]);
      if (p > 0.05 && p < 20) {
        double rho = std::pow(r, p);
        if (std::abs(1 - rho) > 1e-6) L = I[nE - 1] - d_last * rho / (1 - rho);
      }
    }
    pk.limit = L;

    std::vector<std::pair<double, double>> residual;
    for (size_t ie = 0; ie < nE; ++ie) residual.push_back({eps[ie], std::abs(I[ie] - L)});
    AsymptoticReport resid_fit = fit_order(residual, 0, kSlopeTol, false);
    pk.r_squared = resid_fit.exact_zero ? 1.0 : resid_fit.r_squared;

    bool monotone = true;
    for (size_t ie = nE - 4; ie + 1 < nE; ++ie)
      if (std::abs(I[ie + 1]) > 1.02 * std::abs(I[ie]) + 1e-12) monotone = false;

    if (pk.r_squared < 0.9) {
      pk.verdict = Verdict::Inconclusive;
      pk.detail = "single-power extrapolation unreliable (r^2 " + std::to_string(pk.r_squared) + ")";
    } else if (std::abs(L) <= tol && monotone) {
      pk.verdict = Verdict::Pass;
      pk.detail = "associated";
    } else {
      pk.verdict = Verdict::Fail;
      pk.detail = monotone ? "nonzero extrapolated limit" : "|I| not non-increasing";
    }
    res.per_kernel.push_back(std::move(pk));
  }

  // overall: some order q with every kernel of order >= q passing
  res.verdict = Verdict::Fail;
  for (int q : battery.orders()) {
    bool all = true;
    for (size_t i = 0; i < battery.kernels.size(); ++i)
      if (battery.kernels[i].order() >= q && res.per_kernel[i].verdict != Verdict::Pass) all = false;
    if (all) {
      res.verdict = Verdict::Pass;
      break;
    }
  }
  std::vector<double> limits, divs;
  for (auto& pk : res.per_kernel) {
    if (pk.verdict != Verdict::Inconclusive) limits.push_back(pk.limit);
    if (pk.divergence_order != 0) divs.push_back(pk.divergence_order);
  }
  auto median = [](std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  res.limit = median(limits);
  res.divergence_order = median(divs);
  if (res.verdict == Verdict::Fail) {
    bool any_inconclusive = false;
    for (auto& pk : res.per_kernel) any_inconclusive |= pk.verdict == Verdict::Inconclusive;
    if (any_inconclusive && divs.empty()) res.verdict = Verdict::Inconclusive;
  }
  return res;
}

}  // namespace colombeau
