#include "hexflow/core.hpp"

#include <array>
#include <string>

namespace hexflow {

namespace {

constexpr std::array<std::string_view, kNumStageKinds> kStageNames = {
    "schema_linking", "candidate_generation", "self_correction", "evaluation", "single_shot"};

}  // namespace

std::string_view to_string(StageKind s) { return kStageNames.at(static_cast<std::size_t>(s)); }

StageKind stage_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i) {
    if (kStageNames[i] == s) return static_cast<StageKind>(i);
  }
  throw ConfigError("unknown stage kind '" + std::string(s) + "'");
}

std::string_view to_string(JobStatus s) {
  switch (s) {
    case JobStatus::Pending: return "pending";
    case JobStatus::Running: return "running";
    case JobStatus::Done: return "done";
    case JobStatus::SloMissed: return "slo_missed";
    case JobStatus::Failed: return "failed";
  }
  return "?";
}

std::string_view to_string(QueryKind k) {
  return k == QueryKind::Workflow ? "workflow" : "single_shot";
}

QueryKind query_kind_from_string(std::string_view s) {
  if (s == "workflow") return QueryKind::Workflow;
  if (s == "single_shot") return QueryKind::SingleShot;
  throw ConfigError("unknown query kind '" + std::string(s) + "'");
}

std::string_view to_string(DispatchPolicy p) {
  switch (p) {
    case DispatchPolicy::WorkloadBalanced: return "workload_balanced";
    case DispatchPolicy::RoundRobin: return "round_robin";
    case DispatchPolicy::PowerOfTwo: return "power_of_two";
    case DispatchPolicy::VtcFair: return "vtc_fair";
    case DispatchPolicy::QlmGroup: return "qlm_group";
    case DispatchPolicy::LeastLaxity: return "least_laxity";
  }
  return "?";
}

std::string_view to_string(QueueDiscipline d) {
  switch (d) {
    case QueueDiscipline::Urgency: return "urgency";
    case QueueDiscipline::Fcfs: return "fcfs";
    case QueueDiscipline::VtcCounter: return "vtc_counter";
    case QueueDiscipline::QlmGrouped: return "qlm_grouped";
    case QueueDiscipline::Laxity: return "laxity";
  }
  return "?";
}

void InstanceProfile::validate() const {
  auto fail = [&](const std::string& what) {
    throw ConfigError("instance " + std::to_string(instance_id) + " (" + class_name + "): " + what);
  };
  if (!(prefill_rate > 0.0)) fail("prefill_rate must be > 0");
  if (!(decode_rate > 0.0)) fail("decode_rate must be > 0");
  if (batch_slots < 1) fail("batch_slots must be >= 1");
  if (!(batch_slowdown >= 0.0)) fail("batch_slowdown must be >= 0");
  if (!(timeout >= 0.0)) fail("timeout must be >= 0");
}

DispatchConfig::DispatchConfig(DispatchPolicy policy, double alpha, Seconds c_ref, Seconds q_ref)
    : policy_(policy) {
  set_alpha(alpha);
  set_reference(c_ref, q_ref);
}

void DispatchConfig::set_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("dispatch.alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  alpha_ = alpha;
}

void DispatchConfig::set_reference(Seconds c_ref, Seconds q_ref) {
  if (!(c_ref > 0.0) || !(q_ref > 0.0)) {
    throw ConfigError("dispatch.c_ref and dispatch.q_ref must be > 0");
  }
  c_ref_ = c_ref;
  q_ref_ = q_ref;
}

const std::vector<std::string>& known_policy_names() {
  static const std::vector<std::string> names = {"wb_pq", "rr_fcfs", "vtc",     "qlm",
                                                 "llf",   "po2c",    "rr_pq",   "wb_fcfs"};
  return names;
}

PolicyCombo policy_from_name(std::string_view name) {
  using DP = DispatchPolicy;
  using QD = QueueDiscipline;
  auto make = [&](std::string canonical, DP d, QD q) { return PolicyCombo{std::move(canonical), d, q}; };
  if (name == "wb_pq" || name == "hexflow") return make("wb_pq", DP::WorkloadBalanced, QD::Urgency);
  if (name == "rr_fcfs" || name == "vllm") return make("rr_fcfs", DP::RoundRobin, QD::Fcfs);
  if (name == "vtc") return make("vtc", DP::VtcFair, QD::VtcCounter);
  if (name == "qlm") return make("qlm", DP::QlmGroup, QD::QlmGrouped);
  if (name == "llf") return make("llf", DP::LeastLaxity, QD::Laxity);
  if (name == "po2c" || name == "ray") return make("po2c", DP::PowerOfTwo, QD::Fcfs);
  if (name == "rr_pq") return make("rr_pq", DP::RoundRobin, QD::Urgency);
  if (name == "wb_fcfs") return make("wb_fcfs", DP::WorkloadBalanced, QD::Fcfs);
  throw ConfigError("unknown policy '" + std::string(name) + "'");
}

double SloSpec::scale_for(TenantId tenant) const {
  auto it = slo_scale.find(tenant);
  return it == slo_scale.end() ? default_scale : it->second;
}

}  // namespace hexflow
