#pragma once

#include <array>
#include <span>

#include "hexflow/core.hpp"

namespace hexflow {

enum class EstimatorMode : std::uint8_t { StageMean, Ratio, Oracle };
std::string_view to_string(EstimatorMode m);
EstimatorMode estimator_mode_from_string(std::string_view s);

// Pluggable output-length predictor.
struct EstimatorConfig {
  EstimatorMode mode = EstimatorMode::StageMean;
  double ratio = 0.5;
  // Mean output tokens per StageKind; 0 marks a stage with no profile.
  std::array<double, kNumStageKinds> stage_mean_output{};

  void set_stage_mean(StageKind s, double mean) { stage_mean_output[static_cast<int>(s)] = mean; }
};

TokenCount estimate_output_len(const InferenceRequest& request, const EstimatorConfig& cfg);

// Whether t_queue counts in-service requests at full cost or only their
// unfinished share.
enum class QueueCost : std::uint8_t { Full, Remaining };
QueueCost queue_cost_from_string(std::string_view s);
std::string_view to_string(QueueCost q);

struct CostEstimate {
  InstanceId instance_id = kNoInstance;
  Seconds comp_time = 0.0;
  Seconds queue_time = 0.0;
};

// Linear prefill + decode cost at batch size 1.
inline Seconds comp_time(TokenCount input_tokens, TokenCount output_tokens, const InstanceProfile& inst) {
  return static_cast<double>(input_tokens) / inst.prefill_rate +
         static_cast<double>(output_tokens) / inst.decode_rate;
}

inline Seconds comp_time(const InferenceRequest& request, const InstanceProfile& inst) {
  return comp_time(request.input_tokens, request.est_output_tokens, inst);
}

// Sum of comp_time over every request queued on (or resident in) the instance.
Seconds queue_time(std::span<const InferenceRequest> queue, const InstanceProfile& inst);

// comp_time averaged over the cluster.
Seconds mean_comp_time(TokenCount input_tokens, TokenCount output_tokens,
                       std::span<const InstanceProfile> cluster);
Seconds mean_comp_time(const InferenceRequest& request, std::span<const InstanceProfile> cluster);

}  // namespace hexflow
