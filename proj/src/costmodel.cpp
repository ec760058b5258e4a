#include "hexflow/costmodel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hexflow {

std::string_view to_string(EstimatorMode m) {
  switch (m) {
    case EstimatorMode::StageMean: return "stage_mean";
    case EstimatorMode::Ratio: return "ratio";
    case EstimatorMode::Oracle: return "oracle";
  }
  return "?";
}

EstimatorMode estimator_mode_from_string(std::string_view s) {
  if (s == "stage_mean") return EstimatorMode::StageMean;
  if (s == "ratio") return EstimatorMode::Ratio;
  if (s == "oracle") return EstimatorMode::Oracle;
  throw ConfigError("unknown estimator mode '" + std::string(s) + "'");
}

QueueCost queue_cost_from_string(std::string_view s) {
  if (s == "full") return QueueCost::Full;
  if (s == "remaining") return QueueCost::Remaining;
  throw ConfigError("unknown queue_cost '" + std::string(s) + "' (expected full|remaining)");
}

std::string_view to_string(QueueCost q) { return q == QueueCost::Full ? "full" : "remaining"; }

TokenCount estimate_output_len(const InferenceRequest& request, const EstimatorConfig& cfg) {
  if (request.input_tokens < 1) throw ConfigError("request has input_tokens < 1");
  double estimate = 0.0;
  switch (cfg.mode) {
    case EstimatorMode::StageMean: {
      estimate = cfg.stage_mean_output[static_cast<int>(request.stage)];
      if (!(estimate > 0.0)) {
        throw ConfigError("estimator has no mean output length for stage " +
                          std::string(to_string(request.stage)));
      }
      break;
    }
    case EstimatorMode::Ratio:
      estimate = cfg.ratio * static_cast<double>(request.input_tokens);
      break;
    case EstimatorMode::Oracle:
      estimate = static_cast<double>(request.true_output_tokens);
      break;
  }
  return static_cast<TokenCount>(std::max(1.0, std::round(estimate)));
}

Seconds queue_time(std::span<const InferenceRequest> queue, const InstanceProfile& inst) {
  Seconds total = 0.0;
  for (const auto& r : queue) total += comp_time(r, inst);
  return total;
}

Seconds mean_comp_time(TokenCount input_tokens, TokenCount output_tokens,
                       std::span<const InstanceProfile> cluster) {
  if (cluster.empty()) throw ConfigError("mean_comp_time over an empty cluster");
  Seconds total = 0.0;
  for (const auto& m : cluster) total += comp_time(input_tokens, output_tokens, m);
  return total / static_cast<double>(cluster.size());
}

Seconds mean_comp_time(const InferenceRequest& request, std::span<const InstanceProfile> cluster) {
  return mean_comp_time(request.input_tokens, request.est_output_tokens, cluster);
}

}  // namespace hexflow
