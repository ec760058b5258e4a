#include "hexflow/dispatch.hpp"

#include <algorithm>

namespace hexflow {

double score(Seconds t_comp, Seconds t_queue, const DispatchConfig& cfg) {
  const double alpha = cfg.alpha();
  const Seconds q = t_queue > 0.0 ? t_queue : kEmptyQueueFloor;
  return (1.0 - alpha) * cfg.beta() / q - alpha * t_comp;
}

Dispatcher::Dispatcher(DispatchConfig cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {}

std::optional<InstanceId> Dispatcher::dispatch(const InferenceRequest& request, const ClusterView& view,
                                               std::span<const InstanceId> excluded) {
  std::vector<InstanceId> eligible;
  eligible.reserve(view.instances.size());
  for (InstanceId i = 0; i < view.instances.size(); ++i) {
    if (!view.instances[i].live) continue;
    if (std::find(excluded.begin(), excluded.end(), i) != excluded.end()) continue;
    eligible.push_back(i);
  }
  if (eligible.empty()) return std::nullopt;

  switch (cfg_.policy()) {
    case DispatchPolicy::WorkloadBalanced:
      return pick_workload_balanced(request, eligible, view);
    case DispatchPolicy::RoundRobin:
    case DispatchPolicy::VtcFair:
      return pick_round_robin(eligible, view.instances.size());
    case DispatchPolicy::PowerOfTwo:
      return pick_power_of_two(eligible, view);
    case DispatchPolicy::QlmGroup:
    case DispatchPolicy::LeastLaxity:
      return pick_least_queue(eligible, view);
  }
  return std::nullopt;
}

std::optional<InstanceId> Dispatcher::redispatch_on_timeout(InferenceRequest& request, InstanceId failed,
                                                            const ClusterView& view, std::uint32_t max_retries) {
  request.retries += 1;
  if (request.retries > max_retries) return std::nullopt;
  const InstanceId excluded[] = {failed};
  return dispatch(request, view, excluded);
}

std::optional<InstanceId> Dispatcher::pick_workload_balanced(const InferenceRequest& request,
                                                             const std::vector<InstanceId>& eligible,
                                                             const ClusterView& view) const {
  InstanceId best = eligible.front();
  double best_score = 0.0;
  Seconds best_queue = 0.0;
  bool first = true;
  for (InstanceId i : eligible) {
    const auto& load = view.instances[i];
    const double s = score(request, *load.profile, load.queue_time, cfg_);
    // Ties: lower t_queue, then lower id (eligible is ascending).
    if (first || s > best_score || (s == best_score && load.queue_time < best_queue)) {
      best = i;
      best_score = s;
      best_queue = load.queue_time;
      first = false;
    }
  }
  return best;
}

std::optional<InstanceId> Dispatcher::pick_round_robin(const std::vector<InstanceId>& eligible, std::size_t n) {
  for (std::size_t step = 0; step < n; ++step) {
    const auto candidate = static_cast<InstanceId>((rr_cursor_ + step) % n);
    if (std::find(eligible.begin(), eligible.end(), candidate) != eligible.end()) {
      rr_cursor_ = (candidate + 1) % n;
      return candidate;
    }
  }
  return std::nullopt;
}

std::optional<InstanceId> Dispatcher::pick_least_queue(const std::vector<InstanceId>& eligible,
                                                       const ClusterView& view) const {
  InstanceId best = eligible.front();
  for (InstanceId i : eligible) {
    if (view.instances[i].queue_time < view.instances[best].queue_time) best = i;
  }
  return best;
}

std::optional<InstanceId> Dispatcher::pick_power_of_two(const std::vector<InstanceId>& eligible,
                                                        const ClusterView& view) {
  if (eligible.size() == 1) return eligible.front();
  std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
  const std::size_t a = pick(rng_);
  std::size_t b = pick(rng_);
  while (b == a) b = pick(rng_);
  const InstanceId x = eligible[std::min(a, b)];
  const InstanceId y = eligible[std::max(a, b)];
  return view.instances[y].queue_time < view.instances[x].queue_time ? y : x;
}

}  // namespace hexflow
