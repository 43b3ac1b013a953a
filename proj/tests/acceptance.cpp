// Acceptance gate: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include "qvdp/config.hpp"
#include "qvdp/ensemble.hpp"
#include "qvdp/errors.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <string>

using namespace qvdp;

namespace {

constexpr double pi = std::numbers::pi;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Point {
  RunConfig cfg;
  VdpParams params;
  LindbladModel model;
};

// Preset with the base point moved to (V, dw, theta) in units of gamma_up.
Point at(const std::string& name, double v, double dw, double theta = 0.0) {
  RunConfig c = preset(name);
  c.coupling = v;
  c.detuning = dw;
  c.theta = theta;
  c.sweep.clear();
  c.validate();
  const VdpParams p = c.params();
  return {c, p, build_vdp_model(p, c.space())};
}

std::map<std::string, EnsembleResult> cache;

const EnsembleResult& ensemble(const std::string& name, double v, double dw, double theta = 0.0) {
  const Point pt = at(name, v, dw, theta);
  // presets that differ only by name share results
  auto j = to_json(pt.cfg);
  j.erase("preset");
  const std::string key = j.dump();
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  return cache.emplace(key, run_ensemble(pt.model, pt.params, pt.cfg.ensemble)).first->second;
}

Verdict oracle_equivalence() {
  double worst = 0.0, residual = 0.0;
  int points = 0;
  for (double v : {0.1, 1.0, 5.0, 20.0, 50.0, 100.0})
    for (double dw : {0.0, 0.5, 1.0, 10.0, 30.0})
      for (double th : {0.0, pi / 3, pi / 2}) {
        const VdpParams p = VdpParams::quantum(0.01, v, dw, 2 * pi, th);
        const LindbladModel m = build_vdp_model(p);
        const Density a = analytic_steady_state(p);
        worst = std::max(worst, (a.matrix - steady_state_numeric(m).matrix).cwiseAbs().maxCoeff());
        residual = std::max(residual, apply_lindbladian(m, a.matrix).norm());
        ++points;
      }
  return {points == 90 && worst <= 1e-8 && residual <= 1e-10,
          fmt("%d points, max entry difference %.3g, max residual %.3g", points, worst, residual)};
}

Verdict steady_phase_fig1() {
  const double phi = steady_phase(preset("fig1").params());
  return {std::abs(phi - (-0.008)) <= 5e-4, fmt("phase %.6f vs -0.008", phi)};
}

Verdict population_limits() {
  const double p0 = marginal_excitation(VdpParams::quantum(0.01, 0, 0, 2 * pi));
  const double pa = marginal_excitation(VdpParams::quantum(0.01, 1e4, 0, 2 * pi));
  const double pb = marginal_excitation(VdpParams::quantum(0.01, 1e4, 30, 2 * pi));
  const bool ok = std::abs(p0 - 1.0 / 3) <= 1e-12 && std::abs(pa - 0.125) <= 1e-3 && std::abs(pb - 0.125) <= 1e-3;
  return {ok, fmt("p(V=0) - 1/3 = %.2g, p(1e4, 0) = %.6f, p(1e4, 30) = %.6f", p0 - 1.0 / 3, pa, pb)};
}

// Replicate ensembles of 1000 trajectories from a fixed |+>|+> start. The
// n = 250 and 500 means are prefixes of each replicate.
Verdict unraveling_consistency() {
  const Point pt = at("fig1", 10, 0.1);
  IntegratorConfig ic = pt.cfg.ensemble.resolved(pt.params, pt.model).integrator;
  const State start(Vector::Constant(4, Complex(0.5)), pt.model.space);
  const Density rho0 = Density::pure(start);
  const std::vector<double> times{1.0, 5.0, 10.0};
  std::vector<Matrix> exact;
  for (double t : times) exact.push_back(propagate(pt.model, rho0, t).matrix);
  const std::vector<std::size_t> sizes{250, 500, 1000};
  const int replicates = 32;

  bool ok = true;
  std::string detail;
  for (Unraveling u : {Unraveling::diffusive, Unraveling::jump}) {
    std::vector<double> mean_td(sizes.size(), 0.0);
    double worst_single = 0.0;
    for (int r = 0; r < replicates; ++r) {
      std::vector<Matrix> sum(times.size(), Matrix::Zero(4, 4));
      std::size_t done = 0;
      for (std::size_t k = 0; k < sizes.size(); ++k) {
        for (; done < sizes[k]; ++done) {
          const auto states = evolve_to(pt.model, start, times, ic, NoiseStream(1000 + r, done), u);
          for (std::size_t i = 0; i < times.size(); ++i)
            sum[i] += states[i].amplitudes() * states[i].amplitudes().adjoint();
        }
        for (std::size_t i = 0; i < times.size(); ++i) {
          const double td = trace_distance(Matrix(sum[i] / static_cast<double>(sizes[k])), exact[i]);
          mean_td[k] += td / (replicates * times.size());
          if (r == 0 && k + 1 == sizes.size()) worst_single = std::max(worst_single, td);
        }
      }
    }
    // least-squares slope of log mean distance against log n
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      const double x = std::log(static_cast<double>(sizes[k])), y = std::log(mean_td[k]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double n = static_cast<double>(sizes.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const bool decreasing = mean_td[0] > mean_td[1] && mean_td[1] > mean_td[2];
    const bool this_ok = worst_single <= 0.05 && decreasing && std::abs(slope + 0.5) <= 0.1;
    ok = ok && this_ok;
    detail += fmt("%s: max TD at n=1000 %.4f, mean TD %.4f/%.4f/%.4f, exponent %.3f; ",
                  u == Unraveling::diffusive ? "diffusive" : "jump", worst_single, mean_td[0], mean_td[1],
                  mean_td[2], slope);
  }
  return {ok, detail};
}

Verdict correlator_mean() {
  const EnsembleResult& r = ensemble("fig3", 50, 1);
  const Complex c_pi = correlator_steady(r.params);
  const double zr = (r.mean_c.real() - c_pi.real()) / r.mean_c_se.real();
  const double zi = (r.mean_c.imag() - c_pi.imag()) / r.mean_c_se.imag();
  const bool ok = r.failed.empty() && std::abs(zr) <= 3.0 && std::abs(zi) <= 3.0;
  return {ok, fmt("mean C %.4f%+.4fi (se %.4f, %.4f) vs C_pi %.4f%+.4fi, z = %.1f, %.1f", r.mean_c.real(),
                  r.mean_c.imag(), r.mean_c_se.real(), r.mean_c_se.imag(), c_pi.real(), c_pi.imag(), zr, zi)};
}

Verdict coupling_trend() {
  const std::vector<double> vs{5, 20, 50, 100};
  std::vector<double> vp, vc;
  for (double v : vs) {
    const EnsembleResult& r = ensemble("fig2c", v, 1);
    vp.push_back(r.phase_stat.variance);
    vc.push_back(r.abs_c_stat.variance);
  }
  bool ok = true;
  for (std::size_t i = 1; i < vs.size(); ++i) ok = ok && vp[i] < vp[i - 1] && vc[i] < vc[i - 1];
  const EnsembleResult& lo = ensemble("fig2c", 5, 1);
  const EnsembleResult& hi = ensemble("fig2c", 100, 1);
  const Interval p5 = bootstrap_variance(lo, &TrajectoryResult::phase);
  const Interval p100 = bootstrap_variance(hi, &TrajectoryResult::phase);
  const Interval c5 = bootstrap_variance(lo, &TrajectoryResult::abs_c);
  const Interval c100 = bootstrap_variance(hi, &TrajectoryResult::abs_c);
  ok = ok && !p5.overlaps(p100) && !c5.overlaps(c100);
  return {ok, fmt("Var dphi %.4f > %.4f > %.4f > %.4f, Var|C| %.5f > %.5f > %.5f > %.5f, "
                  "95%% CI dphi [%.4f,%.4f] vs [%.4f,%.4f], |C| [%.5f,%.5f] vs [%.5f,%.5f]",
                  vp[0], vp[1], vp[2], vp[3], vc[0], vc[1], vc[2], vc[3], p5.lo, p5.hi, p100.lo, p100.hi, c5.lo,
                  c5.hi, c100.lo, c100.hi)};
}

Verdict locking_peaks() {
  bool ok = true;
  std::string detail;
  for (double th : {0.0, pi / 3, pi / 2}) {
    const EnsembleResult& r = ensemble("figS2b", 100, 1, th);
    const double peak = r.phase.center(r.phase.mode());
    const double off = std::abs(wrap_phase(peak - th));
    ok = ok && off <= 2 * pi / 40 + 1e-12;
    detail += fmt("theta %.4f: mode bin at %.4f; ", th, peak);
  }
  return {ok, detail};
}

Verdict entanglement_tails() {
  const EnsembleResult& a = ensemble("fig3", 5, 1);
  const EnsembleResult& b = ensemble("fig3", 50, 1);
  const double z = tail_difference_z(a, b);
  return {z > 2.326, fmt("P(S>0.5) %.4f (se %.4f) at V=5, %.4f (se %.4f) at V=50, z = %.2f", a.entropy_tail_mass,
                         a.entropy_tail_se, b.entropy_tail_mass, b.entropy_tail_se, z)};
}

Verdict detuning_scan() {
  std::vector<double> dws, vp, vs;
  for (int i = 0; i <= 10; ++i) dws.push_back(-30.0 + 6.0 * i);
  for (double dw : dws) {
    const EnsembleResult& r = ensemble("figS2a", 20, dw);
    vp.push_back(r.phase_stat.variance);
    vs.push_back(r.entropy_stat.variance);
  }
  const auto min_at = std::min_element(vp.begin(), vp.end()) - vp.begin();
  const auto max_at = std::max_element(vs.begin(), vs.end()) - vs.begin();
  std::string detail = fmt("argmin Var dphi at dw=%g, argmax Var S at dw=%g; Var dphi", dws[min_at], dws[max_at]);
  for (double v : vp) detail += fmt(" %.3f", v);
  detail += "; Var S";
  for (double v : vs) detail += fmt(" %.4f", v);
  return {min_at == 5 && max_at == 5, detail};
}

Verdict properties() {
  const Point pt = at("fig2c", 50, 1);
  const EnsembleConfig e = pt.cfg.ensemble.resolved(pt.params, pt.model);
  const NoiseStream noise(3, 0);
  const State psi0 = sample_initial(analytic_steady_state(pt.params), noise);

  double norm_err = 0.0;
  State psi = psi0;
  for (std::uint64_t k = 1; k <= 20000; ++k) {
    psi = step_diffusive(psi, pt.model, e.integrator, noise, k).state;
    norm_err = std::max(norm_err, std::abs(psi.amplitudes().norm() - 1.0));
  }

  RecordOptions opts;
  const TrajectoryRecord rec = run_trajectory(pt.model, psi0, 60.0, *e.sample_interval, e.integrator, noise, opts);
  const auto samples = indicator_samples(rec, *e.pearson_width);
  bool bounds = true;
  for (const auto& s : samples) {
    if (s.c) bounds = bounds && std::abs(*s.c) <= 1.0 + 1e-12;
    if (s.pearson) bounds = bounds && *s.pearson >= -1.0 - 1e-12 && *s.pearson <= 1.0 + 1e-12;
    bounds = bounds && s.entropy >= 0.0 && s.entropy <= std::log(2.0) + 1e-12;
  }

  double schmidt = 0.0;
  psi = psi0;
  for (std::uint64_t k = 1; k <= 2000; ++k) {
    psi = step_diffusive(psi, pt.model, e.integrator, noise, k).state;
    schmidt = std::max(schmidt, std::abs(entanglement_entropy(psi, 1) - entanglement_entropy(psi, 2)));
  }

  EnsembleConfig small = pt.cfg.ensemble;
  small.n_trajectories = 24;
  small.burn_in = 5.0;
  small.total_time = 15.0;
  small.threads = 1;
  const EnsembleResult one = run_ensemble(pt.model, pt.params, small);
  small.threads = 4;
  const EnsembleResult four = run_ensemble(pt.model, pt.params, small);
  double mass_err = 0.0;
  for (const Histogram* h : {&one.abs_c, &one.phase, &one.pearson, &one.entropy}) {
    double mass = 0.0;
    for (double d : h->density()) mass += d * h->width();
    mass_err = std::max(mass_err, std::abs(mass - 1.0));
  }
  bool same = one.abs_c.counts == four.abs_c.counts && one.phase.counts == four.phase.counts &&
              one.pearson.counts == four.pearson.counts && one.entropy.counts == four.entropy.counts &&
              one.mean_c == four.mean_c && one.phase_stat.variance == four.phase_stat.variance &&
              one.entropy_stat.variance == four.entropy_stat.variance;
  for (std::size_t i = 0; i < one.trajectories.size(); ++i)
    same = same && one.trajectories[i].c_sum == four.trajectories[i].c_sum;

  const bool ok = norm_err <= 1e-12 && bounds && schmidt <= 1e-10 && mass_err <= 1e-12 && same;
  return {ok, fmt("norm error %.2g, indicator bounds %s, Schmidt asymmetry %.2g, histogram mass error %.2g, "
                  "threads 1 vs 4 %s",
                  norm_err, bounds ? "ok" : "violated", schmidt, mass_err, same ? "identical" : "differ")};
}

Verdict integrator_convergence() {
  const Point pt = at("fig3", 50, 1);
  EnsembleConfig e = pt.cfg.ensemble.resolved(pt.params, pt.model);
  e.n_trajectories = 500;
  e.master_seed = 11;
  const EnsembleResult coarse = run_ensemble(pt.model, pt.params, e);
  e.dt = *e.dt / 2.0;
  e.integrator.dt = *e.dt;
  e.master_seed = 12;
  const EnsembleResult fine = run_ensemble(pt.model, pt.params, e);
  const auto a = coarse.trajectory_phase();
  const auto b = fine.trajectory_phase();
  const double d = ks_distance(a, b);
  const double crit = ks_threshold_95(a.size(), b.size());
  return {d < crit, fmt("KS distance %.4f vs threshold %.4f (dt %.3g and %.3g, %zu + %zu trajectories)", d, crit,
                        *e.dt * 2.0, *e.dt, a.size(), b.size())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Verdict()>>> criteria{
      {1, oracle_equivalence},   {2, steady_phase_fig1}, {3, population_limits},  {4, unraveling_consistency},
      {5, correlator_mean},      {6, coupling_trend},    {7, locking_peaks},      {8, entanglement_tails},
      {9, detuning_scan},        {10, properties},       {11, integrator_convergence}};
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& [n, run] : criteria) {
    if (!only.empty() && !only.contains(n)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d: %s  %s [%.0f s]\n", n, v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
    std::fflush(stdout);
    if (!v.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
