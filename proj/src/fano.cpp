#include "slhf/fano.hpp"

#include "slhf/errors.hpp"
#include "slhf/scf.hpp"
#include "slhf/units.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <ostream>
#include <thread>

namespace slhf {

namespace {

using Params = Eigen::Matrix<double, 5, 1>;

Params pack(const FanoFit& f) {
  Params p;
  p << f.sigma0_mb, f.gamma_mev, f.energy_ev, f.q, f.eta2;
  return p;
}

void unpack(const Params& p, FanoFit& f) {
  f.sigma0_mb = p(0);
  f.gamma_mev = p(1);
  f.energy_ev = p(2);
  f.q = p(3);
  f.eta2 = p(4);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<long>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2) return *mid;
  return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

struct Evaluation {
  double cost = 0.0;
  Eigen::VectorXd r;
  Eigen::Matrix<double, Eigen::Dynamic, 5> J;
};

Evaluation evaluate(const std::vector<CurveSample>& s, const FanoFit& f) {
  Evaluation e;
  const auto n = static_cast<int>(s.size());
  e.r.resize(n);
  e.J.resize(n, 5);
  for (int i = 0; i < n; ++i) {
    e.r(i) = f(s[i].omega_ev) - s[i].sigma_mb;
    const auto g = f.gradient(s[i].omega_ev);
    for (int k = 0; k < 5; ++k) e.J(i, k) = g[k];
  }
  e.cost = e.r.squaredNorm();
  return e;
}

bool admissible(const FanoFit& f) {
  return f.gamma_mev > 0.0 && f.eta2 >= 0.0 && f.eta2 <= 1.0 && f.energy_ev >= f.window.first &&
         f.energy_ev <= f.window.second && std::isfinite(f.q) && std::isfinite(f.sigma0_mb);
}

FanoFit levenberg_marquardt(const std::vector<CurveSample>& s, FanoFit f, const FanoFitOptions& opt) {
  Evaluation cur = evaluate(s, f);
  const double g0 = (cur.J.transpose() * cur.r).norm();
  double lambda = 1e-3;
  f.converged = g0 == 0.0;
  int it = 0;
  for (; it < opt.max_iterations && !f.converged; ++it) {
    const Eigen::Matrix<double, 5, 5> A = cur.J.transpose() * cur.J;
    const Params g = cur.J.transpose() * cur.r;
    if (g.norm() <= opt.gradient_tolerance * g0) {
      f.converged = true;
      break;
    }
    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::Matrix<double, 5, 5> M = A;
      for (int k = 0; k < 5; ++k) M(k, k) += lambda * std::max(A(k, k), 1e-30);
      const Params step = M.ldlt().solve(-g);
      FanoFit trial = f;
      unpack(pack(f) + step, trial);
      trial.eta2 = std::clamp(trial.eta2, 0.0, 1.0);
      if (admissible(trial)) {
        Evaluation next = evaluate(s, trial);
        if (next.cost <= cur.cost) {
          const double gain = cur.cost - next.cost;
          f = trial;
          cur = std::move(next);
          lambda = std::max(lambda / 3.0, 1e-12);
          accepted = true;
          // No representable progress left: the gradient is at its rounding floor.
          if (gain <= 1e-15 * cur.cost && step.norm() <= 1e-14 * pack(f).norm()) f.converged = true;
          break;
        }
      }
      lambda *= 4.0;
    }
    if (!accepted) {
      // Damping exhausted: stationary up to rounding.
      f.converged = (cur.J.transpose() * cur.r).norm() <= 1e-6 * g0;
      break;
    }
  }
  f.iterations = it;
  f.residual = std::sqrt(cur.cost / static_cast<double>(s.size()));
  return f;
}

std::string fixed(double x, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

} // namespace

std::vector<CurveSample> curve_segment(const CrossSectionCurve& curve, double lo_ev, double hi_ev) {
  std::vector<CurveSample> out;
  for (const auto& p : curve.points)
    if (p.ok && p.omega_ev >= lo_ev && p.omega_ev <= hi_ev) out.push_back({p.omega_ev, p.sigma_mb});
  return out;
}

double FanoFit::operator()(double omega_ev) const {
  const double k = 2.0 * (omega_ev - energy_ev) / (gamma_mev * 1e-3);
  return sigma0_mb * (eta2 * (q + k) * (q + k) / (1.0 + k * k) - eta2 + 1.0);
}

std::array<double, 5> FanoFit::gradient(double omega_ev) const {
  const double gamma = gamma_mev * 1e-3;
  const double k = 2.0 * (omega_ev - energy_ev) / gamma;
  const double d = 1.0 + k * k;
  const double f = (q + k) * (q + k) / d;
  const double df_dk = 2.0 * (q + k) * (1.0 - q * k) / (d * d);
  const double s = sigma0_mb * eta2;
  return {
      eta2 * (f - 1.0) + 1.0,
      s * df_dk * (-k / gamma) * 1e-3, // per meV
      s * df_dk * (-2.0 / gamma),
      s * 2.0 * (q + k) / d,
      sigma0_mb * (f - 1.0),
  };
}

FanoFit initial_fano_guess(const std::vector<CurveSample>& samples) {
  if (samples.size() < 3) throw ContractError("initial_fano_guess: need at least 3 samples");
  auto s = samples;
  std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.omega_ev < b.omega_ev; });
  const std::size_t n = s.size();
  const std::size_t edge = std::max<std::size_t>(3, n / 10);
  std::vector<double> edges;
  for (std::size_t i = 0; i < std::min(edge, n); ++i) edges.push_back(s[i].sigma_mb);
  for (std::size_t i = n - std::min(edge, n); i < n; ++i) edges.push_back(s[i].sigma_mb);

  FanoFit f;
  f.window = {s.front().omega_ev, s.back().omega_ev};
  f.sigma0_mb = median(edges);
  const double span = f.window.second - f.window.first;

  std::size_t imax = 0, imin = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (s[i].sigma_mb > s[imax].sigma_mb) imax = i;
    if (s[i].sigma_mb < s[imin].sigma_mb) imin = i;
  }
  const double hmax = s[imax].sigma_mb - f.sigma0_mb;
  const double hmin = f.sigma0_mb - s[imin].sigma_mb;
  if (!(hmax > 0.0) && !(hmin > 0.0)) {
    f.gamma_mev = 1e3 * span / 10.0;
    f.energy_ev = 0.5 * (f.window.first + f.window.second);
    f.q = 1.0;
    f.eta2 = 0.0;
    return f;
  }

  // Width at half extremum of the dominant lobe.
  const bool peak = hmax >= hmin;
  const std::size_t ic = peak ? imax : imin;
  const double half = peak ? f.sigma0_mb + 0.5 * hmax : f.sigma0_mb - 0.5 * hmin;
  auto beyond = [&](std::size_t i) { return peak ? s[i].sigma_mb < half : s[i].sigma_mb > half; };
  std::size_t a = ic, b = ic;
  while (a > 0 && !beyond(a)) --a;
  while (b + 1 < n && !beyond(b)) ++b;
  const double fwhm = std::max(s[b].omega_ev - s[a].omega_ev, span / static_cast<double>(n));

  if (hmax > 0.0 && hmin > 0.0 && imax != imin && f.sigma0_mb > 0.0) {
    const double qa = std::clamp(std::sqrt(hmax / hmin), 0.05, 20.0);
    f.q = s[imax].omega_ev < s[imin].omega_ev ? -qa : qa;
    f.eta2 = std::clamp(hmin / f.sigma0_mb, 1e-3, 1.0);
    const double sep = std::abs(s[imax].omega_ev - s[imin].omega_ev);
    double gamma = 2.0 * sep / (qa + 1.0 / qa);
    if (!(gamma > 0.0) || gamma > span) gamma = fwhm;
    f.gamma_mev = 1e3 * gamma;
    f.energy_ev = s[imin].omega_ev + 0.5 * f.q * gamma;
  } else {
    f.gamma_mev = 1e3 * fwhm;
    f.energy_ev = s[ic].omega_ev;
    f.q = peak ? 5.0 : 0.0;
    f.eta2 = 0.5;
  }
  f.energy_ev = std::clamp(f.energy_ev, f.window.first, f.window.second);
  return f;
}

FanoFit fit_fano(const std::vector<CurveSample>& samples, const FanoFit& initial, const FanoFitOptions& options) {
  if (samples.size() < 30) throw ContractError("fit_fano: need at least 30 samples");
  auto s = samples;
  std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.omega_ev < b.omega_ev; });

  FanoFit start = initial;
  start.window = {s.front().omega_ev, s.back().omega_ev};
  start.energy_ev = std::clamp(start.energy_ev, start.window.first, start.window.second);
  start.eta2 = std::clamp(start.eta2, 0.0, 1.0);
  if (!(start.gamma_mev > 0.0)) start.gamma_mev = 1e3 * (start.window.second - start.window.first) / 10.0;

  std::vector<FanoFit> seeds{start};
  if (options.multistart) {
    for (double q : {-8.0, -3.0, -1.0, -0.3, 0.3, 1.0, 3.0, 8.0}) {
      FanoFit g = start;
      g.q = q;
      g.eta2 = 0.5;
      seeds.push_back(g);
    }
    if (std::abs(start.q) > 1e-6) {
      FanoFit g = start;
      g.q = -1.0 / start.q;
      seeds.push_back(g);
    }
  }
  FanoFit best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (const auto& seed : seeds) {
    const FanoFit f = levenberg_marquardt(s, seed, options);
    const double cost = f.residual;
    // Prefer converged solutions at equal misfit.
    if (cost < best_cost * (1.0 - 1e-12) || (cost <= best_cost && f.converged && !best.converged)) {
      best = f;
      best_cost = cost;
    }
  }
  return best;
}

FanoFit fit_fano(const std::vector<CurveSample>& samples, const FanoFitOptions& options) {
  if (samples.size() < 30) throw ContractError("fit_fano: need at least 30 samples");
  return fit_fano(samples, initial_fano_guess(samples), options);
}

PeakSearch find_peaks(const CrossSectionCurve& curve, double baseline_window_ev) {
  if (!(baseline_window_ev > 0.0)) throw ContractError("find_peaks: baseline window must be positive");
  PeakSearch out;
  std::vector<CurveSample> s;
  for (const auto& p : curve.points)
    if (p.ok) s.push_back({p.omega_ev, p.sigma_mb});
  const std::size_t n = s.size();
  if (n < 3) return out;

  std::vector<ResonancePeak> candidates;
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double y = s[i].sigma_mb;
    const bool is_max = y > s[i - 1].sigma_mb && y >= s[i + 1].sigma_mb;
    const bool is_min = y < s[i - 1].sigma_mb && y <= s[i + 1].sigma_mb;
    if (!is_max && !is_min) continue;
    while (s[lo].omega_ev < s[i].omega_ev - baseline_window_ev) ++lo;
    while (hi + 1 < n && s[hi + 1].omega_ev <= s[i].omega_ev + baseline_window_ev) ++hi;
    std::vector<double> local;
    for (std::size_t j = lo; j <= hi; ++j) local.push_back(s[j].sigma_mb);
    const double bg = median(local);
    for (auto& v : local) v = std::abs(v - bg);
    const double spread = 1.4826 * median(local);
    const double dev = y - bg;
    if (std::abs(dev) <= 3.0 * spread || std::abs(dev) <= 1e-9 * std::max(1.0, std::abs(bg))) continue;
    ResonancePeak p;
    p.position_ev = s[i].omega_ev;
    p.height_mb = y;
    p.deviation_mb = dev;
    p.window = {std::max(s.front().omega_ev, p.position_ev - baseline_window_ev),
                std::min(s.back().omega_ev, p.position_ev + baseline_window_ev)};
    if (hi - lo + 1 < 11)
      out.warnings.push_back("sparse sampling near " + fixed(p.position_ev, "%.4f") +
                             " eV: peak position limited by the grid");
    candidates.push_back(p);
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const auto& a, const auto& b) { return std::abs(a.deviation_mb) > std::abs(b.deviation_mb); });
  for (const auto& c : candidates) {
    const bool shadowed = std::any_of(out.peaks.begin(), out.peaks.end(), [&](const auto& p) {
      return std::abs(p.position_ev - c.position_ev) < 0.5 * baseline_window_ev;
    });
    if (!shadowed) out.peaks.push_back(c);
  }
  std::sort(out.peaks.begin(), out.peaks.end(),
            [](const auto& a, const auto& b) { return a.position_ev < b.position_ev; });
  return out;
}

double unperturbed_difference(const SpinOrbitalSet& set, const SubshellRef& from, const SubshellRef& to) {
  const Spin sf = from.spin.value_or(Spin::up);
  const Spin st = to.spin.value_or(Spin::up);
  const RadialOrbital& a = set.orbital(from.n, from.l, sf);
  const RadialOrbital b = orbital_on_demand(set, to.n, to.l, st);
  return units::to_ev(b.energy - a.energy);
}

void write_fano_table(const std::vector<FanoTableRow>& rows,
                      const std::vector<std::pair<std::string, std::string>>& header, std::ostream& out) {
  for (const auto& [k, v] : header) out << "# " << k << ": " << v << "\n";
  out << "transition\tE_r_eV\tsigma0_Mb\tGamma_meV\tq\teta2\tresidual\n";
  for (const auto& r : rows) {
    const auto& f = r.fit;
    out << r.transition << "\t" << fixed(f.energy_ev, "%.5f") << "\t" << fixed(f.sigma0_mb, "%.4f") << "\t"
        << fixed(f.gamma_mev, "%.4f") << "\t" << fixed(f.q, "%.4f") << "\t" << fixed(f.eta2, "%.4f") << "\t"
        << fixed(f.residual, "%.3e") << (f.converged ? "" : "\t# not converged") << "\n";
  }
}

std::vector<FanoFit> fit_windows(const CrossSectionCurve& curve,
                                 const std::vector<std::pair<double, double>>& windows, int threads,
                                 const FanoFitOptions& options) {
  std::vector<FanoFit> out(windows.size());
  const std::size_t workers =
      threads > 0 ? static_cast<std::size_t>(threads) : std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t start = 0; start < windows.size(); start += workers) {
    std::vector<std::future<FanoFit>> batch;
    for (std::size_t i = start; i < std::min(windows.size(), start + workers); ++i)
      batch.push_back(std::async(std::launch::async, [&, i] {
        return fit_fano(curve_segment(curve, windows[i].first, windows[i].second), options);
      }));
    for (std::size_t i = 0; i < batch.size(); ++i) out[start + i] = batch[i].get();
  }
  return out;
}

} // namespace slhf
