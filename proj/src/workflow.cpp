#include "hexflow/workflow.hpp"

#include <cmath>
#include <string>

namespace hexflow {

WorkflowTemplate WorkflowTemplate::text_to_sql() {
  WorkflowTemplate t;
  StageTemplate linking{.stage = StageKind::SchemaLinking,
                        .input = {3000, 0.25},
                        .output = {300, 0.35},
                        .iterations = {}};
  StageTemplate candidates{.stage = StageKind::CandidateGeneration,
                           .parallelism = 8,
                           .input = {2000, 0.25},
                           .output = {400, 0.35},
                           .iterations = {}};
  StageTemplate correction{.stage = StageKind::SelfCorrection,
                           .max_iterations = 10,
                           .input = {1500, 0.25},
                           .output = {300, 0.35},
                           .iterations = {}};
  StageTemplate evaluation{.stage = StageKind::Evaluation,
                           .calls = 2,
                           .input = {2500, 0.25},
                           .output = {200, 0.35},
                           .iterations = {}};
  t.stages = {linking, candidates, correction, evaluation};
  t.single_shot = StageTemplate{.stage = StageKind::SingleShot,
                                .input = {1000, 0.3},
                                .output = {250, 0.4},
                                .iterations = {}};
  return t;
}

void WorkflowTemplate::validate() const {
  if (stages.empty()) throw ConfigError("workflow template has no stages");
  auto check = [](const StageTemplate& s) {
    const std::string name(to_string(s.stage));
    if (s.parallelism < 1) throw ConfigError("workflow." + name + ".parallelism must be >= 1");
    if (s.calls < 1) throw ConfigError("workflow." + name + ".calls must be >= 1");
    if (s.max_iterations > 1 && !s.iterative()) {
      throw ConfigError("workflow." + name + ".max_iterations > 1 is only valid for self_correction");
    }
    if (!(s.input.mean >= 1.0) || !(s.output.mean >= 1.0)) {
      throw ConfigError("workflow." + name + " token means must be >= 1");
    }
    if (!(s.input.sigma >= 0.0) || !(s.output.sigma >= 0.0)) {
      throw ConfigError("workflow." + name + " token sigmas must be >= 0");
    }
    if (s.iterative() && (!(s.iterations.a > 0.0) || !(s.iterations.b > 0.0))) {
      throw ConfigError("workflow." + name + ".iter_a/iter_b must be > 0");
    }
  };
  for (const auto& s : stages) {
    if (s.stage == StageKind::SingleShot) throw ConfigError("single_shot cannot be a workflow stage");
    check(s);
  }
  check(single_shot);
}

const StageTemplate& WorkflowTemplate::stage(StageKind kind) const {
  if (kind == StageKind::SingleShot) return single_shot;
  for (const auto& s : stages) {
    if (s.stage == kind) return s;
  }
  throw ConfigError("workflow template has no stage " + std::string(to_string(kind)));
}

void WorkflowTemplate::fill_estimator(EstimatorConfig& cfg) const {
  for (const auto& s : stages) cfg.set_stage_mean(s.stage, s.output.mean);
  cfg.set_stage_mean(StageKind::SingleShot, single_shot.output.mean);
}

StageCostTable StageCostTable::build(const WorkflowTemplate& tpl, const EstimatorConfig& est,
                                     std::span<const InstanceProfile> cluster) {
  StageCostTable table;
  auto fill = [&](const StageTemplate& s) {
    InferenceRequest typical;
    typical.stage = s.stage;
    typical.input_tokens = static_cast<TokenCount>(std::max(1.0, std::round(s.input.mean)));
    typical.true_output_tokens = static_cast<TokenCount>(std::max(1.0, std::round(s.output.mean)));
    typical.est_output_tokens = estimate_output_len(typical, est);
    table.mean_cost[static_cast<int>(s.stage)] = mean_comp_time(typical, cluster);
  };
  for (const auto& s : tpl.stages) fill(s);
  fill(tpl.single_shot);
  return table;
}

Seconds allocate_budget(const QueryJob& job, Seconds request_mean_cost, Seconds future_mean_cost) {
  if (job.estimated_remaining_calls == 0) {
    throw InvariantError("allocate_budget: query " + std::to_string(job.query_id) +
                         " has no remaining calls");
  }
  const Seconds remaining = remaining_deadline(job);
  if (remaining <= 0.0) return kBudgetFloor;
  return remaining * request_mean_cost / (request_mean_cost + future_mean_cost);
}

WorkflowState::WorkflowState(QueryJob job, const QueryRecord& record, const WorkflowContext& ctx)
    : job_(std::move(job)), record_(&record), ctx_(&ctx) {
  if (ctx.tpl == nullptr || ctx.estimator == nullptr) throw InvariantError("workflow context incomplete");
  if (record.stages.empty()) throw ConfigError("query " + std::to_string(record.query_id) + " has no stages");
  if (record.kind == QueryKind::SingleShot) {
    if (record.stages.size() != 1 || record.stages[0].calls.size() != 1) {
      throw ConfigError("single-shot query " + std::to_string(record.query_id) + " must have exactly one call");
    }
    stage_tpls_.push_back(&ctx.tpl->single_shot);
  } else {
    const auto& tpl = *ctx.tpl;
    if (tpl.stages.empty()) throw ConfigError("workflow template has no stages");
    if (record.stages.size() != tpl.stages.size()) {
      throw ConfigError("query " + std::to_string(record.query_id) + " stage count does not match template");
    }
    for (std::size_t i = 0; i < tpl.stages.size(); ++i) {
      if (record.stages[i].stage != tpl.stages[i].stage) {
        throw ConfigError("query " + std::to_string(record.query_id) + " stage " + std::to_string(i) +
                          " is " + std::string(to_string(record.stages[i].stage)) + ", template expects " +
                          std::string(to_string(tpl.stages[i].stage)));
      }
      if (tpl.stages[i].iterative() && record.stages[i].calls.size() > tpl.stages[i].max_iterations) {
        throw ConfigError("query " + std::to_string(record.query_id) + " exceeds max_iterations");
      }
      stage_tpls_.push_back(&tpl.stages[i]);
    }
  }
  job_.stage_plan.clear();
  for (const auto* s : stage_tpls_) job_.stage_plan.push_back(s->stage);
}

Seconds WorkflowState::future_path_cost(std::uint32_t stage_index, std::uint32_t call_index) const {
  const auto& costs = ctx_->costs;
  const StageTemplate& cur = *stage_tpls_[stage_index];
  Seconds total = 0.0;
  if (cur.iterative()) {
    if (cur.max_iterations > call_index + 1) total += (cur.max_iterations - call_index - 1) * costs[cur.stage];
  } else if (!cur.parallel()) {
    if (cur.calls > call_index + 1) total += (cur.calls - call_index - 1) * costs[cur.stage];
  }
  for (std::size_t s = stage_index + 1; s < stage_tpls_.size(); ++s) {
    const StageTemplate& t = *stage_tpls_[s];
    if (t.iterative()) {
      total += t.max_iterations * costs[t.stage];
    } else if (t.parallel()) {
      total += costs[t.stage];
    } else {
      total += t.calls * costs[t.stage];
    }
  }
  return total;
}

std::uint32_t WorkflowState::projected_calls_after(std::uint32_t stage_index, std::uint32_t call_index) const {
  const StageTemplate& cur = *stage_tpls_[stage_index];
  std::uint32_t n = 0;
  if (cur.iterative()) {
    if (cur.max_iterations > call_index + 1) n += cur.max_iterations - call_index - 1;
  } else if (!cur.parallel()) {
    if (cur.calls > call_index + 1) n += cur.calls - call_index - 1;
  }
  for (std::size_t s = stage_index + 1; s < stage_tpls_.size(); ++s) {
    const StageTemplate& t = *stage_tpls_[s];
    n += t.iterative() ? t.max_iterations : (t.parallel() ? t.parallelism : t.calls);
  }
  return n;
}

void WorkflowState::refresh_remaining_calls() {
  if (job_.status != JobStatus::Running) {
    job_.estimated_remaining_calls = 0;
    return;
  }
  job_.estimated_remaining_calls = outstanding_in_stage_ + projected_calls_after(stage_cursor_, call_cursor_);
}

InferenceRequest WorkflowState::make_request(std::uint32_t stage_index, std::uint32_t call_index, RequestId id) {
  const auto& call = record_->stages[stage_index].calls[call_index];
  InferenceRequest r;
  r.request_id = id;
  r.query_id = job_.query_id;
  r.tenant_id = job_.tenant_id;
  r.stage = stage_tpls_[stage_index]->stage;
  r.stage_index = stage_index;
  r.call_index = call_index;
  r.seq_index = ++released_count_;
  r.input_tokens = call.input_tokens;
  r.true_output_tokens = call.output_tokens;
  r.est_output_tokens = estimate_output_len(r, *ctx_->estimator);
  return r;
}

std::vector<InferenceRequest> WorkflowState::release_from(std::uint32_t stage_index, Seconds now,
                                                          RequestId& next_id) {
  // Skip stages that realized zero calls (e.g. no correction rounds).
  while (stage_index < record_->stages.size() && record_->stages[stage_index].calls.empty()) ++stage_index;
  std::vector<InferenceRequest> ready;
  if (stage_index >= record_->stages.size()) {
    job_.status = JobStatus::Done;
    job_.finish_time = now;
    outstanding_in_stage_ = 0;
    refresh_remaining_calls();
    return ready;
  }
  stage_cursor_ = stage_index;
  call_cursor_ = 0;
  const auto& stage_calls = record_->stages[stage_index].calls;
  const bool parallel = stage_tpls_[stage_index]->parallel();
  const std::uint32_t count = parallel ? static_cast<std::uint32_t>(stage_calls.size()) : 1;
  for (std::uint32_t c = 0; c < count; ++c) ready.push_back(make_request(stage_index, c, next_id++));
  outstanding_in_stage_ = count;
  return ready;
}

std::vector<InferenceRequest> WorkflowState::start(Seconds now, RequestId& next_id) {
  if (job_.status != JobStatus::Pending) throw InvariantError("workflow started twice");
  job_.status = JobStatus::Running;
  job_.elapsed = 0.0;
  auto ready = release_from(0, now, next_id);
  refresh_remaining_calls();
  for (auto& r : ready) {
    const Seconds own = mean_comp_time(r, ctx_->cluster);
    const Seconds future = future_path_cost(r.stage_index, r.call_index);
    if (ctx_->compute_budgets) r.slo_budget = allocate_budget(job_, own, future);
    r.meta.job_deadline = job_.absolute_deadline();
    r.meta.laxity_deadline = job_.absolute_deadline() - (own + future);
    outstanding_ids_.insert(r.request_id);
  }
  return ready;
}

std::vector<InferenceRequest> WorkflowState::on_request_complete(const InferenceRequest& finished, Seconds now,
                                                                 RequestId& next_id) {
  if (!outstanding_ids_.erase(finished.request_id)) {
    throw InvariantError("request " + std::to_string(finished.request_id) + " of query " +
                         std::to_string(job_.query_id) + " completed without being released");
  }
  if (now < job_.arrival_time + job_.elapsed) throw InvariantError("query elapsed time would decrease");
  job_.completed_calls += 1;
  job_.elapsed = now - job_.arrival_time;
  if (job_.status != JobStatus::Running) return {};

  if (outstanding_in_stage_ == 0) throw InvariantError("completion with no outstanding calls in stage");
  --outstanding_in_stage_;
  std::vector<InferenceRequest> ready;
  if (outstanding_in_stage_ > 0) {
    refresh_remaining_calls();
    return ready;
  }
  const StageTemplate& cur = *stage_tpls_[stage_cursor_];
  const auto realized = static_cast<std::uint32_t>(record_->stages[stage_cursor_].calls.size());
  if (!cur.parallel() && finished.call_index + 1 < realized) {
    call_cursor_ = finished.call_index + 1;
    ready.push_back(make_request(stage_cursor_, call_cursor_, next_id++));
    outstanding_in_stage_ = 1;
  } else {
    ready = release_from(stage_cursor_ + 1, now, next_id);
  }
  refresh_remaining_calls();
  for (auto& r : ready) {
    const Seconds own = mean_comp_time(r, ctx_->cluster);
    const Seconds future = future_path_cost(r.stage_index, r.call_index);
    if (ctx_->compute_budgets) r.slo_budget = allocate_budget(job_, own, future);
    r.meta.job_deadline = job_.absolute_deadline();
    r.meta.laxity_deadline = job_.absolute_deadline() - (own + future);
    outstanding_ids_.insert(r.request_id);
  }
  return ready;
}

void WorkflowState::mark_failed(Seconds now) {
  if (job_.status == JobStatus::Done || job_.status == JobStatus::Failed) return;
  job_.status = JobStatus::Failed;
  job_.finish_time = now;
  refresh_remaining_calls();
}

}  // namespace hexflow
