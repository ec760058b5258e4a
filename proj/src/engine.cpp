#include "hexflow/engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "hexflow/dispatch.hpp"
#include "hexflow/instance.hpp"
#include "hexflow/rng.hpp"
#include "hexflow/tuner.hpp"

namespace hexflow {

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::QueryArrival: return "query_arrival";
    case EventKind::RequestReady: return "request_ready";
    case EventKind::Dispatch: return "dispatch";
    case EventKind::Admission: return "admission";
    case EventKind::Completion: return "completion";
    case EventKind::Timeout: return "timeout";
    case EventKind::WindowBoundary: return "window_boundary";
  }
  return "?";
}

namespace {

void append_double(std::string& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

void write_event_log(std::ostream& os, const std::vector<EventRecord>& events) {
  std::string line;
  for (const auto& e : events) {
    line.clear();
    line += "{\"time\":";
    append_double(line, e.time);
    line += ",\"seq\":" + std::to_string(e.seq);
    line += ",\"kind\":\"";
    line += to_string(e.kind);
    line += "\",\"query\":" + std::to_string(e.query);
    line += ",\"request\":" + std::to_string(e.request);
    line += ",\"instance\":";
    line += e.instance == kNoInstance ? std::string("null") : std::to_string(e.instance);
    line += ",\"value\":";
    if (std::isfinite(e.value)) {
      append_double(line, e.value);
    } else {
      line += "null";
    }
    line += "}\n";
    os << line;
  }
}

std::string event_log_string(const std::vector<EventRecord>& events) {
  std::ostringstream os;
  write_event_log(os, events);
  return os.str();
}

void SimConfig::validate() const {
  if (cluster.empty()) throw ConfigError("cluster has no instances");
  for (std::size_t i = 0; i < cluster.size(); ++i) {
    if (cluster[i].instance_id != i) throw ConfigError("cluster instance ids must be 0..N-1 in order");
    cluster[i].validate();
  }
  workflow.validate();
  if (tuner.enabled) {
    if (!(tuner.window_seconds > 0.0)) throw ConfigError("tuner.window_seconds must be > 0");
    if (tuner.min_samples < 1) throw ConfigError("tuner.min_samples must be >= 1");
  }
  for (const auto& [tenant, scale] : slo.slo_scale) {
    if (!(scale > 0.0)) throw ConfigError("slo scale for tenant " + std::to_string(tenant) + " must be > 0");
  }
}

namespace {

struct Event {
  Seconds time;
  std::uint64_t seq;
  EventKind kind;
  std::uint32_t a;  // query index | request id | instance
  std::uint32_t b;  // request id (timeout)
  std::uint64_t c;  // version | attempt
};

struct LaterEvent {
  bool operator()(const Event& x, const Event& y) const {
    if (x.time != y.time) return x.time > y.time;
    return x.seq > y.seq;
  }
};

EstimatorConfig resolved_estimator(const SimConfig& cfg) {
  EstimatorConfig est = cfg.estimator;
  EstimatorConfig from_tpl;
  cfg.workflow.fill_estimator(from_tpl);
  for (int s = 0; s < kNumStageKinds; ++s) {
    if (!(est.stage_mean_output[s] > 0.0)) est.stage_mean_output[s] = from_tpl.stage_mean_output[s];
  }
  return est;
}

}  // namespace

struct Simulator::Impl {
  SimConfig cfg;
  Trace trace;
  SimObserver* observer = nullptr;

  EstimatorConfig estimator;
  WorkflowContext wctx;
  std::vector<Instance> instances;
  std::unique_ptr<Dispatcher> dispatcher;
  VtcCounters vtc;

  std::vector<std::optional<WorkflowState>> states;
  std::vector<QueryOutcome> outcomes;
  std::vector<bool> finished;
  std::unordered_map<QueryId, std::uint32_t> query_index;
  std::unordered_map<RequestId, InferenceRequest> staged;
  std::vector<std::uint64_t> scheduled_version;

  std::priority_queue<Event, std::vector<Event>, LaterEvent> queue;
  std::uint64_t next_seq = 0;
  Seconds clock = 0.0;
  RequestId next_request_id = 0;
  std::vector<EventRecord> log;
  std::uint64_t processed = 0;

  std::size_t arrivals_seen = 0;
  std::size_t live_jobs = 0;

  double queue_obs_sum = 0.0;
  std::uint64_t queue_obs_n = 0;
  StageMix mix;

  // Tuner state.
  Seconds window_start = 0.0;
  std::uint32_t window_id = 0;
  std::vector<double> window_latencies;
  std::optional<WindowStats> ref_window;
  std::vector<TunerDecision> decisions;
  SimConfig replay_cfg;

  Impl(SimConfig c, Trace t) : cfg(std::move(c)), trace(std::move(t)) {}

  void push(Seconds time, EventKind kind, std::uint32_t a, std::uint32_t b = 0, std::uint64_t c = 0) {
    queue.push(Event{time, next_seq++, kind, a, b, c});
  }

  void record(EventKind kind, QueryId q, RequestId r, InstanceId i, double value = 0.0) {
    if (!cfg.log_events) {
      ++next_seq;
      return;
    }
    log.push_back(EventRecord{clock, next_seq++, kind, q, r, i, value});
  }

  WorkflowState& state_of(QueryId q) { return *states[query_index.at(q)]; }

  void setup();
  SimReport run();
  ClusterView build_view() const;
  void handle_arrival(std::uint32_t qidx);
  void release(std::uint32_t qidx, std::vector<InferenceRequest> ready, Seconds delay);
  void handle_ready(RequestId id);
  void dispatch_to(InferenceRequest req, InstanceId target);
  void notify_dispatch(const InferenceRequest& req, InstanceId target, std::vector<InstanceId> excluded);
  void try_admit(InstanceId i);
  void schedule_completion(InstanceId i);
  void handle_completion(InstanceId i, std::uint64_t version);
  void on_finished(InferenceRequest r);
  void handle_timeout(InstanceId i, RequestId id, std::uint32_t attempt);
  void fail_query(std::uint32_t qidx);
  void finish_query(std::uint32_t qidx);
  void handle_window(Seconds t);
  bool work_remains() const { return live_jobs > 0 || arrivals_seen < trace.queries.size(); }
};

void Simulator::Impl::setup() {
  cfg.validate();
  cfg.dispatch.set_policy(cfg.policy.dispatch);
  estimator = resolved_estimator(cfg);
  wctx.tpl = &cfg.workflow;
  wctx.estimator = &estimator;
  wctx.cluster = cfg.cluster;
  wctx.costs = StageCostTable::build(cfg.workflow, estimator, cfg.cluster);
  wctx.compute_budgets = cfg.policy.uses_budgets();

  for (auto& q : trace.queries) {
    if (!q.base_exclusive_time) q.base_exclusive_time = exclusive_time(q, cfg);
  }
  if (cfg.auto_reference && cfg.policy.dispatch == DispatchPolicy::WorkloadBalanced) {
    const auto [c_ref, q_ref] = calibrate_reference(trace, cfg);
    cfg.dispatch.set_reference(c_ref, q_ref);
  }
  cfg.auto_reference = false;

  instances.clear();
  for (const auto& p : cfg.cluster) instances.emplace_back(p, cfg.policy.discipline, cfg.queue_cost);
  scheduled_version.assign(instances.size(), std::numeric_limits<std::uint64_t>::max());
  dispatcher = std::make_unique<Dispatcher>(cfg.dispatch, substream_seed(cfg.seed, "po2c"));
  for (auto& row : mix) row.assign(instances.size(), 0);

  const std::size_t n = trace.queries.size();
  states.assign(n, std::nullopt);
  outcomes.assign(n, QueryOutcome{});
  finished.assign(n, false);
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto& q = trace.queries[i];
    if (!query_index.emplace(q.query_id, i).second) {
      throw ConfigError("duplicate query_id " + std::to_string(q.query_id) + " in trace");
    }
    if (i > 0 && q.arrival_time < trace.queries[i - 1].arrival_time) {
      throw ConfigError("trace arrivals must be sorted");
    }
    push(q.arrival_time, EventKind::QueryArrival, i);
  }

  if (!cfg.horizon && n > 0) {
    Seconds max_deadline = 0.0;
    for (const auto& q : trace.queries) {
      max_deadline = std::max(max_deadline, cfg.slo.deadline(q.tenant_id, *q.base_exclusive_time));
    }
    cfg.horizon = trace.queries.back().arrival_time + 10.0 * max_deadline;
  }

  if (cfg.tuner.enabled) {
    replay_cfg = cfg;
    replay_cfg.tuner.enabled = false;
    replay_cfg.log_events = false;
    replay_cfg.horizon.reset();
    window_start = 0.0;
    push(cfg.tuner.window_seconds, EventKind::WindowBoundary, 0);
  }
}

ClusterView Simulator::Impl::build_view() const {
  ClusterView view;
  view.instances.reserve(instances.size());
  for (const auto& inst : instances) view.instances.push_back(InstanceLoad{&inst.profile(), inst.queue_time(), true});
  return view;
}

void Simulator::Impl::handle_arrival(std::uint32_t qidx) {
  ++arrivals_seen;
  ++live_jobs;
  const auto& rec = trace.queries[qidx];
  QueryJob job;
  job.query_id = rec.query_id;
  job.tenant_id = rec.tenant_id;
  job.kind = rec.kind;
  job.arrival_time = rec.arrival_time;
  job.slo_deadline = cfg.slo.deadline(rec.tenant_id, *rec.base_exclusive_time);
  states[qidx].emplace(std::move(job), rec, wctx);
  record(EventKind::QueryArrival, rec.query_id, 0, kNoInstance, states[qidx]->job().slo_deadline);
  auto ready = states[qidx]->start(clock, next_request_id);
  release(qidx, std::move(ready), 0.0);
  if (states[qidx]->job().status == JobStatus::Done) finish_query(qidx);
}

void Simulator::Impl::release(std::uint32_t qidx, std::vector<InferenceRequest> ready, Seconds delay) {
  auto& st = *states[qidx];
  for (auto& r : ready) {
    r.meta.vtc_client = cfg.vtc_per_tenant ? r.tenant_id : r.query_id;
    r.meta.slo_class = r.tenant_id * 2 + (st.job().kind == QueryKind::SingleShot ? 1 : 0);
    if (observer) observer->on_release(st.job(), r, st.future_path_cost(r.stage_index, r.call_index));
    const RequestId id = r.request_id;
    staged.emplace(id, std::move(r));
    push(clock + delay, EventKind::RequestReady, id);
  }
}

void Simulator::Impl::handle_ready(RequestId id) {
  auto node = staged.extract(id);
  if (node.empty()) throw InvariantError("ready event for unknown request");
  InferenceRequest req = std::move(node.mapped());
  const std::uint32_t qidx = query_index.at(req.query_id);
  if (states[qidx]->job().status != JobStatus::Running) return;
  req.dispatch_time = clock;
  record(EventKind::RequestReady, req.query_id, req.request_id, kNoInstance, req.slo_budget);

  const ClusterView view = build_view();
  double qsum = 0.0;
  for (const auto& l : view.instances) qsum += l.queue_time;
  queue_obs_sum += qsum / static_cast<double>(view.instances.size());
  ++queue_obs_n;

  const auto target = dispatcher->dispatch(req, view);
  if (!target) {
    fail_query(qidx);
    return;
  }
  notify_dispatch(req, *target, {});
  dispatch_to(std::move(req), *target);
}

void Simulator::Impl::notify_dispatch(const InferenceRequest& req, InstanceId target,
                                      std::vector<InstanceId> excluded) {
  if (!observer) return;
  DispatchRecord rec;
  rec.time = clock;
  rec.request = req;
  rec.config = dispatcher->config();
  for (const auto& inst : instances) {
    rec.profiles.push_back(inst.profile());
    rec.queues.push_back(inst.members());
  }
  rec.excluded = std::move(excluded);
  rec.chosen = target;
  observer->on_dispatch(rec);
}

void Simulator::Impl::dispatch_to(InferenceRequest req, InstanceId target) {
  record(EventKind::Dispatch, req.query_id, req.request_id, target, req.slo_budget);
  mix[static_cast<int>(req.stage)][target] += 1;
  if (cfg.policy.discipline == QueueDiscipline::VtcCounter) vtc.on_enqueue(req.meta.vtc_client);
  instances[target].enqueue(std::move(req), clock);
  try_admit(target);
}

void Simulator::Impl::try_admit(InstanceId i) {
  auto& inst = instances[i];
  inst.advance(clock);
  while (inst.has_free_slot() && !inst.pending().empty()) {
    std::vector<InferenceRequest> before;
    if (observer) before.assign(inst.pending().begin(), inst.pending().end());
    auto admitted = inst.admit_next(clock, &vtc);
    if (!admitted) break;
    if (observer) {
      AdmissionRecord rec{clock, inst.profile(), inst.discipline(), std::move(before), admitted->request_id};
      observer->on_admission(rec);
    }
    record(EventKind::Admission, admitted->query_id, admitted->request_id, i, admitted->slo_budget);
    if (inst.profile().timeout > 0.0) {
      push(clock + inst.profile().timeout, EventKind::Timeout, i, admitted->request_id, admitted->attempt);
    }
  }
  schedule_completion(i);
}

void Simulator::Impl::schedule_completion(InstanceId i) {
  const auto& inst = instances[i];
  if (scheduled_version[i] == inst.version()) return;
  if (auto t = inst.next_completion()) {
    push(*t, EventKind::Completion, i, 0, inst.version());
    scheduled_version[i] = inst.version();
  }
}

void Simulator::Impl::handle_completion(InstanceId i, std::uint64_t version) {
  auto& inst = instances[i];
  if (version != inst.version()) return;  // superseded by a membership change
  inst.advance(clock);
  auto done = inst.take_finished(clock);
  if (done.empty()) scheduled_version[i] = std::numeric_limits<std::uint64_t>::max();
  for (auto& r : done) on_finished(std::move(r));
  try_admit(i);
}

void Simulator::Impl::on_finished(InferenceRequest r) {
  if (observer) observer->on_completion(r);
  if (cfg.policy.discipline == QueueDiscipline::VtcCounter) vtc.on_complete(r.meta.vtc_client, r.true_output_tokens);
  record(EventKind::Completion, r.query_id, r.request_id, r.assigned_instance, r.finish_time - r.start_time);
  const std::uint32_t qidx = query_index.at(r.query_id);
  auto& st = *states[qidx];
  const bool was_running = st.job().status == JobStatus::Running;
  auto ready = st.on_request_complete(r, clock, next_request_id);
  if (!was_running) return;
  release(qidx, std::move(ready), cfg.workflow.inter_stage_delay);
  if (st.job().status == JobStatus::Done) finish_query(qidx);
}

void Simulator::Impl::handle_timeout(InstanceId i, RequestId id, std::uint32_t attempt) {
  auto& inst = instances[i];
  inst.advance(clock);
  auto removed = inst.remove_active(id, attempt, clock);
  if (!removed) return;  // finished in time
  InferenceRequest r = std::move(*removed);
  record(EventKind::Timeout, r.query_id, r.request_id, i, 0.0);
  if (cfg.policy.discipline == QueueDiscipline::VtcCounter) vtc.on_drop(r.meta.vtc_client);
  const std::uint32_t qidx = query_index.at(r.query_id);
  if (states[qidx]->job().status == JobStatus::Running) {
    const ClusterView view = build_view();
    const auto target = dispatcher->redispatch_on_timeout(r, i, view, cfg.max_retries);
    if (target) {
      notify_dispatch(r, *target, {i});
      r.attempt += 1;
      r.dispatch_time = clock;
      dispatch_to(std::move(r), *target);
    } else {
      fail_query(qidx);
    }
  }
  try_admit(i);
}

void Simulator::Impl::fail_query(std::uint32_t qidx) {
  auto& st = *states[qidx];
  if (st.job().status != JobStatus::Running) return;
  st.mark_failed(clock);
  const QueryId q = st.job().query_id;
  for (auto& inst : instances) {
    auto dropped = inst.drop_pending_if([q](const InferenceRequest& r) { return r.query_id == q; });
    if (cfg.policy.discipline == QueueDiscipline::VtcCounter) {
      for (const auto& r : dropped) vtc.on_drop(r.meta.vtc_client);
    }
  }
  finish_query(qidx);
}

void Simulator::Impl::finish_query(std::uint32_t qidx) {
  if (finished[qidx]) return;
  finished[qidx] = true;
  --live_jobs;
  const auto& job = states[qidx]->job();
  const auto& rec = trace.queries[qidx];
  QueryOutcome& o = outcomes[qidx];
  o.query_id = job.query_id;
  o.tenant_id = job.tenant_id;
  o.kind = job.kind;
  o.status = job.status;
  o.arrival_time = job.arrival_time;
  o.finish_time = job.finish_time;
  o.exclusive_time = *rec.base_exclusive_time;
  o.deadline = job.slo_deadline;
  o.calls = job.completed_calls;
  o.latency = job.status == JobStatus::Done ? job.finish_time - job.arrival_time
                                            : std::numeric_limits<double>::infinity();
  if (cfg.tuner.enabled && job.status == JobStatus::Done) window_latencies.push_back(o.latency);
}

void Simulator::Impl::handle_window(Seconds t) {
  auto stats = close_window(window_id, window_latencies, cfg.tuner.min_samples);
  if (!stats) {
    if (work_remains()) push(t + cfg.tuner.window_seconds, EventKind::WindowBoundary, 0);
    return;
  }
  TunerDecision d;
  d.window_id = window_id;
  d.time = t;
  d.samples = stats->sample_count;
  d.p95 = stats->p95;
  d.alpha_before = dispatcher->config().alpha();
  d.alpha_after = d.alpha_before;
  if (ref_window) {
    const auto w = degradation_test(stats->latencies, ref_window->latencies);
    d.p_value = w.p_value;
    d.triggered = w.p_value < cfg.tuner.p_threshold;
    if (d.triggered) {
      Trace window;
      for (const auto& q : trace.queries) {
        if (q.arrival_time >= window_start && q.arrival_time < t) window.queries.push_back(q);
      }
      if (!window.queries.empty()) {
        replay_cfg.dispatch = dispatcher->config();
        const auto res = retune(window, replay_cfg, d.alpha_before, cfg.tuner.parallel);
        for (const auto& v : res.p95) d.grid_p95.push_back(v.value_or(std::numeric_limits<double>::infinity()));
        if (res.any_succeeded) dispatcher->set_alpha(res.alpha_star);
      }
    }
  }
  d.alpha_after = dispatcher->config().alpha();
  record(EventKind::WindowBoundary, window_id, 0, kNoInstance, d.alpha_after);
  decisions.push_back(std::move(d));
  ref_window = std::move(stats);
  window_start = t;
  window_latencies.clear();
  ++window_id;
  if (work_remains()) push(t + cfg.tuner.window_seconds, EventKind::WindowBoundary, 0);
}

SimReport Simulator::Impl::run() {
  setup();
  bool truncated = false;
  while (!queue.empty()) {
    const Event ev = queue.top();
    if (ev.time > *cfg.horizon) {
      truncated = true;
      break;
    }
    queue.pop();
    if (ev.time < clock) throw InvariantError("event scheduled in the past");
    clock = ev.time;
    ++processed;
    switch (ev.kind) {
      case EventKind::QueryArrival: handle_arrival(ev.a); break;
      case EventKind::RequestReady: handle_ready(ev.a); break;
      case EventKind::Completion: handle_completion(ev.a, ev.c); break;
      case EventKind::Timeout: handle_timeout(ev.a, ev.b, static_cast<std::uint32_t>(ev.c)); break;
      case EventKind::WindowBoundary: handle_window(ev.time); break;
      case EventKind::Dispatch:
      case EventKind::Admission:
        throw InvariantError("inline event kind queued");
    }
  }

  SimReport report;
  report.policy = cfg.policy.name;
  report.seed = cfg.seed;
  report.truncated = truncated;
  report.events = processed;
  report.final_alpha = dispatcher->config().alpha();
  report.c_ref = dispatcher->config().c_ref();
  report.q_ref = dispatcher->config().q_ref();
  report.tuner = std::move(decisions);
  report.stage_mix = mix;
  for (const auto& p : cfg.cluster) report.instance_classes.push_back(p.class_name);
  for (std::uint32_t i = 0; i < trace.queries.size(); ++i) {
    if (!finished[i]) {
      const auto& q = trace.queries[i];
      QueryOutcome o;
      o.query_id = q.query_id;
      o.tenant_id = q.tenant_id;
      o.kind = q.kind;
      o.status = states[i] ? states[i]->job().status : JobStatus::Pending;
      o.arrival_time = q.arrival_time;
      o.exclusive_time = *q.base_exclusive_time;
      o.deadline = cfg.slo.deadline(q.tenant_id, o.exclusive_time);
      o.latency = std::numeric_limits<double>::infinity();
      outcomes[i] = o;
    }
  }
  report.queries = std::move(outcomes);
  summarize(report, cfg.metrics);
  if (!trace.queries.empty()) {
    report.experiment_length = clock - trace.queries.front().arrival_time;
  }
  return report;
}

Simulator::Simulator(SimConfig cfg, Trace trace) : impl_(std::make_unique<Impl>(std::move(cfg), std::move(trace))) {}
Simulator::~Simulator() = default;

void Simulator::set_observer(SimObserver* observer) { impl_->observer = observer; }
SimReport Simulator::run() { return impl_->run(); }
const std::vector<EventRecord>& Simulator::events() const { return impl_->log; }

Seconds Simulator::mean_observed_queue_time() const {
  return impl_->queue_obs_n == 0 ? 0.0 : impl_->queue_obs_sum / static_cast<double>(impl_->queue_obs_n);
}

SimReport run(const SimConfig& cfg, const Trace& trace) {
  Simulator sim(cfg, trace);
  return sim.run();
}

namespace {

// Configuration for isolated single-query runs: WB at the cold-start alpha,
// so the reference is the same for every policy under comparison.
SimConfig reference_config(const SimConfig& cfg) {
  SimConfig ref = cfg;
  ref.policy = policy_from_name("wb_pq");
  ref.dispatch = DispatchConfig(DispatchPolicy::WorkloadBalanced, init_alpha(), 1.0, 1.0);
  ref.auto_reference = false;
  ref.tuner.enabled = false;
  ref.log_events = false;
  ref.horizon.reset();
  for (auto& p : ref.cluster) p.timeout = 0.0;
  return ref;
}

}  // namespace

Seconds exclusive_time(const QueryRecord& query, const SimConfig& cfg) {
  SimConfig ref = reference_config(cfg);
  Trace single;
  single.queries.push_back(query);
  single.queries.front().base_exclusive_time = 1.0;
  single.queries.front().arrival_time = 0.0;
  ref.horizon = std::numeric_limits<double>::infinity();
  Simulator sim(std::move(ref), std::move(single));
  const SimReport report = sim.run();
  const auto& o = report.queries.front();
  if (o.status != JobStatus::Done) throw InvariantError("exclusive run did not complete");
  return o.latency;
}

void fill_exclusive_times(Trace& trace, const SimConfig& cfg) {
  for (auto& q : trace.queries) {
    if (!q.base_exclusive_time) q.base_exclusive_time = exclusive_time(q, cfg);
  }
}

std::pair<Seconds, Seconds> calibrate_reference(const Trace& trace, const SimConfig& cfg) {
  const std::size_t n = std::min(cfg.warmup_queries, trace.queries.size());
  if (n == 0) return {1.0, 1.0};
  Trace warm;
  warm.queries.assign(trace.queries.begin(), trace.queries.begin() + static_cast<std::ptrdiff_t>(n));

  const EstimatorConfig est = resolved_estimator(cfg);
  double c_sum = 0.0;
  std::size_t c_n = 0;
  for (const auto& q : warm.queries) {
    for (const auto& s : q.stages) {
      for (const auto& call : s.calls) {
        InferenceRequest r;
        r.stage = s.stage;
        r.input_tokens = call.input_tokens;
        r.true_output_tokens = call.output_tokens;
        r.est_output_tokens = estimate_output_len(r, est);
        c_sum += mean_comp_time(r, cfg.cluster);
        ++c_n;
      }
    }
  }
  const Seconds c_ref = c_n > 0 ? c_sum / static_cast<double>(c_n) : 1.0;

  SimConfig warm_cfg = cfg;
  warm_cfg.auto_reference = false;
  warm_cfg.dispatch = DispatchConfig(DispatchPolicy::WorkloadBalanced, 0.0, 1.0, 1.0);
  warm_cfg.tuner.enabled = false;
  warm_cfg.log_events = false;
  warm_cfg.horizon.reset();
  Simulator sim(std::move(warm_cfg), std::move(warm));
  sim.run();
  const Seconds q_ref = std::max(sim.mean_observed_queue_time(), kEmptyQueueFloor);
  return {c_ref, q_ref};
}

Seconds replay_for_tuning(const Trace& window, const SimConfig& cfg, double alpha) {
  if (window.queries.empty()) throw ConfigError("replay_for_tuning: empty window");
  SimConfig replay = cfg;
  replay.dispatch.set_alpha(alpha);
  replay.auto_reference = false;
  replay.tuner.enabled = false;
  replay.log_events = false;
  replay.horizon.reset();
  const SimReport report = run(replay, window);
  std::vector<double> lat;
  lat.reserve(report.queries.size());
  for (const auto& q : report.queries) lat.push_back(q.latency);
  return percentile(std::move(lat), 0.95);
}

double qps_for_utilization(double utilization, const std::vector<InstanceProfile>& cluster,
                           const WorkflowTemplate& tpl, double competing_fraction) {
  if (!(utilization > 0.0)) throw ConfigError("utilization must be > 0");
  if (cluster.empty()) throw ConfigError("cluster has no instances");
  double capacity = 0.0;
  for (const auto& m : cluster) {
    double work = 0.0;
    for (const auto& s : tpl.stages) {
      double calls = s.calls;
      if (s.parallel()) calls = s.parallelism;
      if (s.iterative()) calls = s.max_iterations * s.iterations.a / (s.iterations.a + s.iterations.b);
      work += calls * comp_time(static_cast<TokenCount>(s.input.mean), static_cast<TokenCount>(s.output.mean), m);
    }
    const double single = comp_time(static_cast<TokenCount>(tpl.single_shot.input.mean),
                                     static_cast<TokenCount>(tpl.single_shot.output.mean), m);
    const double per_query = (1.0 - competing_fraction) * work + competing_fraction * single;
    const double slots = static_cast<double>(m.batch_slots);
    const double batch_speedup = slots / (1.0 + m.batch_slowdown * (slots - 1.0));
    capacity += batch_speedup / per_query;
  }
  return utilization * capacity;
}

}  // namespace hexflow
