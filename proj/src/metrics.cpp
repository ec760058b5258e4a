#include "hexflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hexflow {

std::size_t nearest_rank(std::size_t n, double q) {
  if (n == 0) throw ConfigError("percentile of an empty sample");
  // Guard against q*n landing a hair above an integer.
  const double raw = q * static_cast<double>(n);
  auto rank = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::clamp<std::size_t>(rank, 1, n);
}

double percentile(std::vector<double> values, double q) {
  const std::size_t rank = nearest_rank(values.size(), q);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
  return values[rank - 1];
}

double attainment(std::span<const double> latencies, std::span<const double> exclusive_times, double scale) {
  if (latencies.size() != exclusive_times.size()) throw ConfigError("attainment: length mismatch");
  if (latencies.empty()) throw ConfigError("attainment of an empty run is undefined");
  std::size_t met = 0;
  for (std::size_t i = 0; i < latencies.size(); ++i) {
    if (latencies[i] / exclusive_times[i] <= scale) ++met;
  }
  return static_cast<double>(met) / static_cast<double>(latencies.size());
}

ScaleResult p95_scale(std::span<const double> latencies, std::span<const double> exclusive_times,
                      double grid_step, double max_scale) {
  if (latencies.size() != exclusive_times.size()) throw ConfigError("p95_scale: length mismatch");
  if (latencies.empty()) throw ConfigError("p95_scale of an empty run is undefined");
  std::vector<double> ratios(latencies.size());
  for (std::size_t i = 0; i < ratios.size(); ++i) ratios[i] = latencies[i] / exclusive_times[i];
  const double r95 = percentile(std::move(ratios), 0.95);
  if (!std::isfinite(r95) || r95 > max_scale) return ScaleResult{max_scale, false};
  // Round up to the grid; the tolerance keeps exact grid points (e.g. 4.0) in place.
  const double steps = std::ceil(r95 / grid_step - 1e-9);
  double scale = steps * grid_step;
  scale = std::round(scale * 1e9) / 1e9;
  return ScaleResult{scale, true};
}

double jain(std::span<const double> values) {
  if (values.empty()) throw ConfigError("jain index of an empty list");
  double sum = 0.0;
  double sq = 0.0;
  for (double x : values) {
    if (x < 0.0) throw ConfigError("jain index requires non-negative values");
    sum += x;
    sq += x * x;
  }
  if (sq == 0.0) throw ConfigError("jain index undefined when every value is zero");
  return sum * sum / (static_cast<double>(values.size()) * sq);
}

double throughput(std::span<const QueryOutcome> outcomes) {
  std::size_t done = 0;
  double first_arrival = std::numeric_limits<double>::infinity();
  double last_finish = -std::numeric_limits<double>::infinity();
  for (const auto& q : outcomes) {
    first_arrival = std::min(first_arrival, q.arrival_time);
    if (q.status == JobStatus::Done) {
      ++done;
      last_finish = std::max(last_finish, q.finish_time);
    }
  }
  if (done == 0) return 0.0;
  const double span = last_finish - first_arrival;
  return span > 0.0 ? static_cast<double>(done) / span : 0.0;
}

void summarize(SimReport& report, const MetricsOptions& opts) {
  report.attainment_curve.clear();
  report.tenant_attainment.clear();
  report.jain_index.reset();
  if (report.queries.empty()) return;

  const bool has_workflow = std::any_of(report.queries.begin(), report.queries.end(),
                                        [](const QueryOutcome& q) { return q.kind == QueryKind::Workflow; });
  std::vector<QueryOutcome> selected;
  for (const auto& q : report.queries) {
    if (!opts.workflow_only || !has_workflow || q.kind == QueryKind::Workflow) selected.push_back(q);
  }
  std::vector<double> lat;
  std::vector<double> excl;
  lat.reserve(report.queries.size());
  excl.reserve(report.queries.size());
  double first_arrival = std::numeric_limits<double>::infinity();
  double last_finish = 0.0;
  std::map<TenantId, std::pair<std::size_t, std::size_t>> per_tenant;  // (met, total)
  for (const auto& q : selected) {
    lat.push_back(q.latency);
    excl.push_back(q.exclusive_time);
    first_arrival = std::min(first_arrival, q.arrival_time);
    if (q.status == JobStatus::Done) last_finish = std::max(last_finish, q.finish_time);
    auto& t = per_tenant[q.tenant_id];
    t.second += 1;
    if (q.met_deadline()) t.first += 1;
  }
  const int points = static_cast<int>(std::floor((opts.curve_max - 1.0) / opts.grid_step + 1e-9));
  for (int i = 0; i <= points; ++i) {
    const double s = std::round((1.0 + i * opts.grid_step) * 1e9) / 1e9;
    report.attainment_curve.emplace_back(s, attainment(lat, excl, s));
  }
  report.p95 = p95_scale(lat, excl, opts.grid_step, opts.max_scale);
  report.throughput = throughput(selected);
  report.makespan = last_finish > first_arrival ? last_finish - first_arrival : 0.0;

  std::vector<double> shares;
  for (const auto& [tenant, counts] : per_tenant) {
    const double a = static_cast<double>(counts.first) / static_cast<double>(counts.second);
    report.tenant_attainment[tenant] = a;
    shares.push_back(a);
  }
  if (std::any_of(shares.begin(), shares.end(), [](double x) { return x > 0.0; })) {
    report.jain_index = jain(shares);
  }
}

}  // namespace hexflow
