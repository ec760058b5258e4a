#pragma once

#include <string>

#include "hexflow/engine.hpp"

namespace hexflow::testing {

inline InstanceProfile profile(InstanceId id, double prefill, double decode, std::uint32_t slots = 1,
                               double gamma = 0.0, const std::string& cls = "x") {
  InstanceProfile p;
  p.instance_id = id;
  p.class_name = cls;
  p.prefill_rate = prefill;
  p.decode_rate = decode;
  p.batch_slots = slots;
  p.batch_slowdown = gamma;
  return p;
}

inline InferenceRequest request(RequestId id, TokenCount in, TokenCount out) {
  InferenceRequest r;
  r.request_id = id;
  r.input_tokens = in;
  r.est_output_tokens = out;
  r.true_output_tokens = out;
  return r;
}

inline QueryRecord single_shot(QueryId id, Seconds arrival, TokenCount in, TokenCount out) {
  QueryRecord q;
  q.query_id = id;
  q.arrival_time = arrival;
  q.kind = QueryKind::SingleShot;
  q.stages = {StageRecord{StageKind::SingleShot, {CallRecord{in, out}}}};
  return q;
}

// Fixed references and no warm-up, so tiny traces behave predictably.
inline SimConfig plain_config(std::vector<InstanceProfile> cluster, const std::string& policy = "wb_pq") {
  SimConfig cfg;
  cfg.cluster = std::move(cluster);
  cfg.policy = policy_from_name(policy);
  cfg.dispatch = DispatchConfig(cfg.policy.dispatch, 0.0, 1.0, 1.0);
  cfg.auto_reference = false;
  return cfg;
}

}  // namespace hexflow::testing
