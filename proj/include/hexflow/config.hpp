#pragma once

#include <map>
#include <string>
#include <vector>

#include "hexflow/engine.hpp"
#include "hexflow/tracegen.hpp"

namespace hexflow {

// Experiment configuration: flat `dotted.key = value` lines, `#` comments.
// Every key has a default; unknown keys are rejected. Keys:
//
//   cluster.instances                 comma list of class names, one per instance
//   cluster.class.<name>.{prefill_rate,decode_rate,batch_slots,batch_slowdown,
//                         timeout,max_batch_tokens}
//   dispatch.{policy,alpha,c_ref,q_ref,max_retries,queue_cost,vtc_client,warmup_queries}
//     c_ref / q_ref accept `auto`
//   estimator.{mode,ratio}
//   workflow.inter_stage_delay
//   workflow.<stage>.{input_mean,input_sigma,output_mean,output_sigma,
//                     parallelism,calls,max_iterations,iter_a,iter_b}
//   workload.{rate_qps,utilization,schedule,duration,tenants,competing_fraction,trace}
//     utilization (when > 0) overrides rate_qps; schedule is `t:rate,...`;
//     tenants is `id:weight:slo_scale,...`
//   slo.{default_scale,grid_step,curve_max,max_scale}
//   tuner.{enabled,window_seconds,min_samples,p_threshold,parallel,state_file}
//   run.{seeds,policies,output_dir,log_events,horizon}
class ExperimentConfig {
 public:
  static ExperimentConfig defaults();
  static ExperimentConfig parse(const std::string& text, const std::string& origin = "<config>");
  static ExperimentConfig load(const std::string& path);

  // Throws ConfigError naming the key when it is unknown.
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  bool has(const std::string& key) const { return values_.contains(key); }

  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  // Canonical resolved form; parse(echo()) reproduces this config.
  std::string echo() const;

  std::vector<InstanceProfile> cluster() const;
  WorkflowTemplate workflow() const;
  std::vector<std::uint64_t> seeds() const;
  std::vector<std::string> policies() const;

  // Full simulator configuration for one (policy, seed).
  SimConfig sim_config(const std::string& policy, std::uint64_t seed) const;
  // Workload spec with utilization resolved to an arrival rate.
  TraceSpec trace_spec(std::uint64_t seed) const;
  // Loads workload.trace when set, otherwise generates; exclusive times filled.
  Trace trace(std::uint64_t seed) const;

  void validate() const;

 private:
  std::map<std::string, std::string> values_;
};

std::vector<std::string> split(const std::string& s, char sep);

}  // namespace hexflow
