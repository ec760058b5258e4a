#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hexflow {

// All times are simulated seconds.
using Seconds = double;
using QueryId = std::uint32_t;
using RequestId = std::uint32_t;
using InstanceId = std::uint32_t;
using TenantId = std::uint32_t;
using TokenCount = std::uint32_t;

inline constexpr InstanceId kNoInstance = std::numeric_limits<InstanceId>::max();

// Raised for malformed configuration, traces, or arguments supplied by a user.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when the simulator detects an internal inconsistency (a bug).
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class StageKind : std::uint8_t {
  SchemaLinking,
  CandidateGeneration,
  SelfCorrection,
  Evaluation,
  SingleShot,  // competing non-workflow request
};
inline constexpr int kNumStageKinds = 5;

std::string_view to_string(StageKind s);
StageKind stage_from_string(std::string_view s);

enum class JobStatus : std::uint8_t { Pending, Running, Done, SloMissed, Failed };
std::string_view to_string(JobStatus s);

enum class QueryKind : std::uint8_t { Workflow, SingleShot };
std::string_view to_string(QueryKind k);
QueryKind query_kind_from_string(std::string_view s);

// One end-to-end query and its workflow progress.
struct QueryJob {
  QueryId query_id = 0;
  TenantId tenant_id = 0;
  QueryKind kind = QueryKind::Workflow;
  Seconds arrival_time = 0.0;
  // Relative to arrival.
  Seconds slo_deadline = 0.0;
  std::vector<StageKind> stage_plan;
  std::uint32_t completed_calls = 0;
  // Completion time of the last finished request minus arrival_time.
  Seconds elapsed = 0.0;
  std::uint32_t estimated_remaining_calls = 0;
  JobStatus status = JobStatus::Pending;
  Seconds finish_time = 0.0;

  Seconds absolute_deadline() const { return arrival_time + slo_deadline; }
};

// Slack left on the query's end-to-end deadline. Negative once over budget.
inline Seconds remaining_deadline(const QueryJob& job) { return job.slo_deadline - job.elapsed; }

// Scheduling keys attached by the coordinator for the baseline disciplines.
struct SchedulingMeta {
  Seconds job_deadline = 0.0;      // absolute end-to-end deadline
  Seconds laxity_deadline = 0.0;   // job_deadline minus remaining mean work (LLF key)
  std::uint32_t vtc_client = 0;    // VTC fairness client
  std::uint32_t slo_class = 0;     // QLM request group
};

// One LLM call.
struct InferenceRequest {
  RequestId request_id = 0;
  QueryId query_id = 0;
  TenantId tenant_id = 0;
  StageKind stage = StageKind::SingleShot;
  std::uint32_t seq_index = 1;   // 1-based order within the query
  std::uint32_t stage_index = 0; // position in the workflow stage list
  std::uint32_t call_index = 0;  // position within the stage (sibling or round)
  TokenCount input_tokens = 1;
  TokenCount est_output_tokens = 1;
  // Ground truth from the trace. Only the instance execution model and the
  // oracle estimator may read it; dispatch and queueing use est_output_tokens.
  TokenCount true_output_tokens = 1;
  Seconds slo_budget = 0.0;
  Seconds dispatch_time = 0.0;
  Seconds enqueue_time = 0.0;
  Seconds start_time = 0.0;
  Seconds finish_time = 0.0;
  InstanceId assigned_instance = kNoInstance;
  std::uint32_t retries = 0;
  std::uint32_t attempt = 0;
  SchedulingMeta meta;
};

struct InstanceProfile {
  InstanceId instance_id = 0;
  std::string class_name;
  double prefill_rate = 1.0;   // tokens/s
  double decode_rate = 1.0;    // tokens/s at batch size 1
  std::uint32_t batch_slots = 1;
  double batch_slowdown = 0.0; // per-slot decode slowdown
  Seconds timeout = 0.0;       // 0 disables
  std::uint64_t max_batch_tokens = 0;  // 0 disables the token cap

  void validate() const;
};

enum class DispatchPolicy : std::uint8_t {
  WorkloadBalanced,
  RoundRobin,
  PowerOfTwo,
  VtcFair,
  QlmGroup,
  LeastLaxity,
};
std::string_view to_string(DispatchPolicy p);

enum class QueueDiscipline : std::uint8_t { Urgency, Fcfs, VtcCounter, QlmGrouped, Laxity };
std::string_view to_string(QueueDiscipline d);

class DispatchConfig {
 public:
  DispatchConfig() = default;
  DispatchConfig(DispatchPolicy policy, double alpha, Seconds c_ref, Seconds q_ref);

  DispatchPolicy policy() const { return policy_; }
  double alpha() const { return alpha_; }
  Seconds c_ref() const { return c_ref_; }
  Seconds q_ref() const { return q_ref_; }
  // beta = C_ref * Q_ref, never stored separately.
  double beta() const { return c_ref_ * q_ref_; }

  void set_policy(DispatchPolicy p) { policy_ = p; }
  void set_alpha(double alpha);
  void set_reference(Seconds c_ref, Seconds q_ref);

 private:
  DispatchPolicy policy_ = DispatchPolicy::WorkloadBalanced;
  double alpha_ = 0.0;
  Seconds c_ref_ = 1.0;
  Seconds q_ref_ = 1.0;
};

// A named (dispatch policy, local queue discipline) pairing, e.g. "wb_pq".
struct PolicyCombo {
  std::string name;
  DispatchPolicy dispatch = DispatchPolicy::WorkloadBalanced;
  QueueDiscipline discipline = QueueDiscipline::Urgency;
  // Whether per-request SLO budgets are computed on release.
  bool uses_budgets() const { return discipline == QueueDiscipline::Urgency; }
};

PolicyCombo policy_from_name(std::string_view name);
const std::vector<std::string>& known_policy_names();

struct SloSpec {
  std::map<TenantId, double> slo_scale;
  double default_scale = 4.0;

  double scale_for(TenantId tenant) const;
  Seconds deadline(TenantId tenant, Seconds base_exclusive_time) const {
    return scale_for(tenant) * base_exclusive_time;
  }
};

}  // namespace hexflow
