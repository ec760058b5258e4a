#include "hexflow/tuner.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <future>

#include "hexflow/engine.hpp"
#include "hexflow/metrics.hpp"

namespace hexflow {

const std::vector<double>& alpha_grid() {
  static const std::vector<double> grid = [] {
    std::vector<double> g;
    for (int i = 0; i <= 10; ++i) g.push_back(i / 10.0);
    return g;
  }();
  return grid;
}

double init_alpha(std::optional<double> persisted) {
  if (persisted && *persisted >= 0.0 && *persisted <= 1.0) return *persisted;
  return 0.0;
}

std::optional<WindowStats> close_window(std::uint32_t window_id, std::vector<double> latencies,
                                        std::size_t min_samples) {
  if (latencies.size() < min_samples || latencies.empty()) return std::nullopt;
  WindowStats stats;
  stats.window_id = window_id;
  stats.sample_count = latencies.size();
  stats.p95 = percentile(latencies, 0.95);
  stats.latencies = std::move(latencies);
  return stats;
}

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // unbiased; 0 when n < 2
  double n = 0.0;
};

Moments moments(std::span<const double> xs) {
  Moments m;
  m.n = static_cast<double>(xs.size());
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= m.n;
  if (xs.size() < 2) return m;
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.var = ss / (m.n - 1.0);
  return m;
}

}  // namespace

WelchResult degradation_test(std::span<const double> fresh, std::span<const double> ref) {
  WelchResult out;
  if (fresh.empty() || ref.empty()) {
    out.degenerate = true;
    out.p_value = 1.0;
    return out;
  }
  const Moments a = moments(fresh);
  const Moments b = moments(ref);
  const double sa = a.var / a.n;
  const double sb = b.var / b.n;
  const double se2 = sa + sb;
  const double diff = a.mean - b.mean;
  if (!(se2 > 0.0)) {
    out.degenerate = true;
    out.t = 0.0;
    out.p_value = diff > 0.0 ? 0.0 : (diff < 0.0 ? 1.0 : 0.5);
    return out;
  }
  out.t = diff / std::sqrt(se2);
  double denom = 0.0;
  if (a.n > 1.0) denom += sa * sa / (a.n - 1.0);
  if (b.n > 1.0) denom += sb * sb / (b.n - 1.0);
  out.df = se2 * se2 / denom;
  boost::math::students_t dist(out.df);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.t));
  return out;
}

TuningResult select_alpha(std::span<const double> grid, std::span<const std::optional<double>> p95,
                          double current_alpha) {
  TuningResult r;
  r.alpha_grid.assign(grid.begin(), grid.end());
  r.p95.assign(p95.begin(), p95.end());
  r.alpha_star = current_alpha;
  std::optional<double> best;
  for (std::size_t i = 0; i < grid.size() && i < p95.size(); ++i) {
    if (!p95[i]) continue;
    if (!best || *p95[i] < *best) {
      best = p95[i];
      r.alpha_star = grid[i];
    }
  }
  r.any_succeeded = best.has_value();
  return r;
}

TuningResult retune(const Trace& window, const SimConfig& cfg, double current_alpha, bool parallel) {
  const auto& grid = alpha_grid();
  std::vector<std::optional<double>> p95(grid.size());
  auto replay = [&](double alpha) -> std::optional<double> {
    try {
      return replay_for_tuning(window, cfg, alpha);
    } catch (const std::exception&) {
      return std::nullopt;
    }
  };
  if (parallel) {
    std::vector<std::future<std::optional<double>>> futures;
    futures.reserve(grid.size());
    for (double a : grid) futures.push_back(std::async(std::launch::async, replay, a));
    for (std::size_t i = 0; i < grid.size(); ++i) p95[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < grid.size(); ++i) p95[i] = replay(grid[i]);
  }
  return select_alpha(grid, p95, current_alpha);
}

}  // namespace hexflow
