#pragma once

#include <optional>
#include <random>
#include <span>
#include <vector>

#include "hexflow/core.hpp"
#include "hexflow/costmodel.hpp"

namespace hexflow {

// Floor substituted for an empty queue in the beta / t_queue term.
inline constexpr Seconds kEmptyQueueFloor = 1e-3;

struct InstanceLoad {
  const InstanceProfile* profile = nullptr;
  Seconds queue_time = 0.0;  // t_queue as seen by the coordinator
  bool live = true;
};

// Coordinator-side snapshot of every instance's backlog.
struct ClusterView {
  std::vector<InstanceLoad> instances;
};

// Workload-balanced score: (1 - alpha) * beta / t_queue - alpha * t_comp.
double score(Seconds t_comp, Seconds t_queue, const DispatchConfig& cfg);
inline double score(const InferenceRequest& request, const InstanceProfile& inst, Seconds t_queue,
                    const DispatchConfig& cfg) {
  return score(comp_time(request, inst), t_queue, cfg);
}

class Dispatcher {
 public:
  Dispatcher(DispatchConfig cfg, std::uint64_t seed);

  const DispatchConfig& config() const { return cfg_; }
  void set_alpha(double alpha) { cfg_.set_alpha(alpha); }
  void set_reference(Seconds c_ref, Seconds q_ref) { cfg_.set_reference(c_ref, q_ref); }

  // Target instance for a ready request, or nullopt when no instance is eligible.
  std::optional<InstanceId> dispatch(const InferenceRequest& request, const ClusterView& view,
                                     std::span<const InstanceId> excluded = {});

  // Re-issues a timed-out request through the same policy with the failed
  // instance excluded. Returns nullopt once retries are exhausted.
  std::optional<InstanceId> redispatch_on_timeout(InferenceRequest& request, InstanceId failed,
                                                  const ClusterView& view, std::uint32_t max_retries);

 private:
  std::optional<InstanceId> pick_workload_balanced(const InferenceRequest& request,
                                                   const std::vector<InstanceId>& eligible,
                                                   const ClusterView& view) const;
  std::optional<InstanceId> pick_round_robin(const std::vector<InstanceId>& eligible, std::size_t n);
  std::optional<InstanceId> pick_least_queue(const std::vector<InstanceId>& eligible,
                                             const ClusterView& view) const;
  std::optional<InstanceId> pick_power_of_two(const std::vector<InstanceId>& eligible, const ClusterView& view);

  DispatchConfig cfg_;
  std::size_t rr_cursor_ = 0;
  std::mt19937_64 rng_;
};

}  // namespace hexflow
