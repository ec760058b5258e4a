#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hexflow/core.hpp"

namespace hexflow {

struct QueryOutcome {
  QueryId query_id = 0;
  TenantId tenant_id = 0;
  QueryKind kind = QueryKind::Workflow;
  JobStatus status = JobStatus::Pending;
  Seconds arrival_time = 0.0;
  Seconds finish_time = 0.0;
  Seconds latency = 0.0;         // +inf unless Done
  Seconds exclusive_time = 0.0;
  Seconds deadline = 0.0;        // relative SLO deadline used while scheduling
  std::uint32_t calls = 0;

  double ratio() const { return latency / exclusive_time; }
  bool met_deadline() const { return status == JobStatus::Done && latency <= deadline; }
};

// 1-based nearest rank: ceil(q * n), at least 1.
std::size_t nearest_rank(std::size_t n, double q);
// Nearest-rank percentile of `values` (copied and sorted).
double percentile(std::vector<double> values, double q);

// Fraction of queries with latency <= scale * exclusive_time. Failed queries
// carry infinite latency and always miss.
double attainment(std::span<const double> latencies, std::span<const double> exclusive_times, double scale);

struct ScaleResult {
  double scale = 0.0;
  bool attained = true;  // false: not reached by max_scale; `scale` holds max_scale
};

// Smallest grid scale reaching 95% attainment.
ScaleResult p95_scale(std::span<const double> latencies, std::span<const double> exclusive_times,
                      double grid_step = 0.1, double max_scale = 100.0);

// Jain's index (sum x)^2 / (n sum x^2).
double jain(std::span<const double> values);

// Done queries divided by the span from first arrival to last completion.
double throughput(std::span<const QueryOutcome> outcomes);

struct TunerDecision {
  std::uint32_t window_id = 0;
  Seconds time = 0.0;
  std::size_t samples = 0;
  Seconds p95 = 0.0;
  double p_value = 1.0;
  bool triggered = false;
  double alpha_before = 0.0;
  double alpha_after = 0.0;
  std::vector<double> grid_p95;  // empty unless triggered
};

// Dispatch counts indexed [stage][instance].
using StageMix = std::array<std::vector<std::uint64_t>, kNumStageKinds>;

struct SimReport {
  std::string policy;
  std::uint64_t seed = 0;
  std::vector<QueryOutcome> queries;
  std::vector<std::pair<double, double>> attainment_curve;  // (scale, fraction)
  ScaleResult p95;
  double throughput = 0.0;
  Seconds makespan = 0.0;
  Seconds experiment_length = 0.0;
  std::optional<double> jain_index;
  std::map<TenantId, double> tenant_attainment;
  std::vector<TunerDecision> tuner;
  double final_alpha = 0.0;
  Seconds c_ref = 0.0;
  Seconds q_ref = 0.0;
  bool truncated = false;
  std::uint64_t events = 0;
  StageMix stage_mix;
  std::vector<std::string> instance_classes;
  std::string config_echo;
};

struct MetricsOptions {
  double grid_step = 0.1;
  double curve_max = 10.0;
  double max_scale = 100.0;
  // Aggregate over workflow queries only, when the run contains any.
  bool workflow_only = true;
};

// Fills the aggregate fields of `report` from report.queries.
void summarize(SimReport& report, const MetricsOptions& opts = {});

}  // namespace hexflow
