#pragma once

#include <array>
#include <span>
#include <unordered_set>
#include <vector>

#include "hexflow/core.hpp"
#include "hexflow/costmodel.hpp"
#include "hexflow/trace.hpp"

namespace hexflow {

// Lognormal token-count distribution, parameterised by its mean.
struct TokenDist {
  double mean = 1.0;
  double sigma = 0.0;
};

// Beta-binomial over {0..max_iterations}; only SelfCorrection uses it.
struct IterationDist {
  double a = 0.32;
  double b = 0.08;
};

struct StageTemplate {
  StageKind stage = StageKind::SingleShot;
  std::uint32_t parallelism = 1;    // sibling calls released together
  std::uint32_t calls = 1;          // sequential calls for non-iterative stages
  std::uint32_t max_iterations = 0; // correction-round bound
  TokenDist input;
  TokenDist output;
  IterationDist iterations;

  bool iterative() const { return stage == StageKind::SelfCorrection; }
  bool parallel() const { return parallelism > 1; }
};

struct WorkflowTemplate {
  std::vector<StageTemplate> stages;
  StageTemplate single_shot;
  Seconds inter_stage_delay = 0.0;

  // Schema linking -> 8 parallel candidates -> up to 10 correction rounds ->
  // 2 evaluation calls, with synthetic token profiles.
  static WorkflowTemplate text_to_sql();

  void validate() const;
  const StageTemplate& stage(StageKind kind) const;
  // Seeds per-stage mean outputs into an estimator config.
  void fill_estimator(EstimatorConfig& cfg) const;
};

// Mean comp time of a typical call of each stage, averaged over the cluster.
// Used to project the remaining work of a query.
struct StageCostTable {
  std::array<Seconds, kNumStageKinds> mean_cost{};

  static StageCostTable build(const WorkflowTemplate& tpl, const EstimatorConfig& est,
                              std::span<const InstanceProfile> cluster);
  Seconds operator[](StageKind s) const { return mean_cost[static_cast<int>(s)]; }
};

inline constexpr Seconds kBudgetFloor = 1e-3;

// Proportional share of the remaining deadline for one request:
//   (T_slo - elapsed) * c / (c + future)
// Over-budget queries receive kBudgetFloor.
Seconds allocate_budget(const QueryJob& job, Seconds request_mean_cost, Seconds future_mean_cost);

struct WorkflowContext {
  const WorkflowTemplate* tpl = nullptr;
  const EstimatorConfig* estimator = nullptr;
  std::span<const InstanceProfile> cluster;
  StageCostTable costs;
  bool compute_budgets = true;
};

// Per-query dependency tracker. Requests are released only when their
// prerequisites have finished; correction rounds are revealed one at a time.
class WorkflowState {
 public:
  WorkflowState(QueryJob job, const QueryRecord& record, const WorkflowContext& ctx);

  const QueryJob& job() const { return job_; }
  QueryJob& job() { return job_; }

  // Releases the first ready set. `next_id` supplies request ids.
  std::vector<InferenceRequest> start(Seconds now, RequestId& next_id);

  std::vector<InferenceRequest> on_request_complete(const InferenceRequest& finished, Seconds now,
                                                    RequestId& next_id);

  void mark_failed(Seconds now);
  bool is_released(RequestId id) const { return outstanding_ids_.contains(id); }

  // Mean comp of the work that follows a call at (stage_index, call_index),
  // counting a parallel sibling set once.
  Seconds future_path_cost(std::uint32_t stage_index, std::uint32_t call_index) const;
  std::uint32_t projected_calls_after(std::uint32_t stage_index, std::uint32_t call_index) const;

 private:
  std::vector<InferenceRequest> release_from(std::uint32_t stage_index, Seconds now, RequestId& next_id);
  InferenceRequest make_request(std::uint32_t stage_index, std::uint32_t call_index, RequestId id);
  void refresh_remaining_calls();

  QueryJob job_;
  const QueryRecord* record_;
  const WorkflowContext* ctx_;
  std::vector<const StageTemplate*> stage_tpls_;
  std::uint32_t stage_cursor_ = 0;
  std::uint32_t call_cursor_ = 0;
  std::uint32_t outstanding_in_stage_ = 0;
  std::uint32_t released_count_ = 0;
  std::unordered_set<RequestId> outstanding_ids_;
};

}  // namespace hexflow
