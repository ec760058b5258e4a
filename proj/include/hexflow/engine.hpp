#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hexflow/core.hpp"
#include "hexflow/costmodel.hpp"
#include "hexflow/metrics.hpp"
#include "hexflow/trace.hpp"
#include "hexflow/workflow.hpp"

namespace hexflow {

struct TunerConfig {
  bool enabled = false;
  Seconds window_seconds = 100.0;
  std::size_t min_samples = 5;
  double p_threshold = 0.01;
  bool parallel = true;
};

struct SimConfig {
  std::vector<InstanceProfile> cluster;
  WorkflowTemplate workflow = WorkflowTemplate::text_to_sql();
  PolicyCombo policy = policy_from_name("wb_pq");
  DispatchConfig dispatch;
  // Calibrate C_ref / Q_ref from the first warmup_queries of the trace.
  bool auto_reference = true;
  std::size_t warmup_queries = 20;
  EstimatorConfig estimator;  // stage means are filled from `workflow` when left empty
  QueueCost queue_cost = QueueCost::Full;
  SloSpec slo;
  TunerConfig tuner;
  std::uint32_t max_retries = 2;
  std::optional<Seconds> horizon;
  std::uint64_t seed = 0;
  bool log_events = false;
  // VTC fairness client: each query (default) or each tenant.
  bool vtc_per_tenant = false;
  MetricsOptions metrics;

  void validate() const;
};

enum class EventKind : std::uint8_t {
  QueryArrival,
  RequestReady,
  Dispatch,
  Admission,
  Completion,
  Timeout,
  WindowBoundary,
};
std::string_view to_string(EventKind k);

struct EventRecord {
  Seconds time = 0.0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::QueryArrival;
  QueryId query = 0;
  RequestId request = 0;
  InstanceId instance = kNoInstance;
  double value = 0.0;  // kind-specific: budget on Dispatch, alpha on WindowBoundary
};

void write_event_log(std::ostream& os, const std::vector<EventRecord>& events);
std::string event_log_string(const std::vector<EventRecord>& events);

// Decision snapshots handed to an observer; used by the oracle tests.
struct DispatchRecord {
  Seconds time = 0.0;
  InferenceRequest request;
  DispatchConfig config;
  std::vector<InstanceProfile> profiles;
  std::vector<std::vector<InferenceRequest>> queues;  // members per instance
  std::vector<InstanceId> excluded;
  InstanceId chosen = kNoInstance;
};

struct AdmissionRecord {
  Seconds time = 0.0;
  InstanceProfile profile;
  QueueDiscipline discipline = QueueDiscipline::Fcfs;
  std::vector<InferenceRequest> pending;  // before the admission
  RequestId chosen = 0;
};

class SimObserver {
 public:
  virtual ~SimObserver() = default;
  virtual void on_dispatch(const DispatchRecord&) {}
  virtual void on_admission(const AdmissionRecord&) {}
  virtual void on_release(const QueryJob&, const InferenceRequest&, Seconds /*future_cost*/) {}
  virtual void on_completion(const InferenceRequest&) {}
};

// Deterministic discrete-event simulation of one (config, trace) pair.
class Simulator {
 public:
  Simulator(SimConfig cfg, Trace trace);
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  void set_observer(SimObserver* observer);
  SimReport run();
  const std::vector<EventRecord>& events() const;
  // Mean t_queue over instances seen at dispatch decisions.
  Seconds mean_observed_queue_time() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SimReport run(const SimConfig& cfg, const Trace& trace);

// Exclusive (uncontended) end-to-end latency of one query on the cluster.
Seconds exclusive_time(const QueryRecord& query, const SimConfig& cfg);
// Fills every missing base_exclusive_time.
void fill_exclusive_times(Trace& trace, const SimConfig& cfg);

// Replays a window of recorded queries with alpha overridden and returns the
// nearest-rank 95th percentile end-to-end latency.
Seconds replay_for_tuning(const Trace& window, const SimConfig& cfg, double alpha);

// Resolves C_ref / Q_ref from a warm-up prefix of the trace.
std::pair<Seconds, Seconds> calibrate_reference(const Trace& trace, const SimConfig& cfg);

// Arrival rate that loads the cluster to `utilization` of its saturated
// batch throughput under the template's expected per-query work.
double qps_for_utilization(double utilization, const std::vector<InstanceProfile>& cluster,
                           const WorkflowTemplate& tpl, double competing_fraction = 0.0);

}  // namespace hexflow
