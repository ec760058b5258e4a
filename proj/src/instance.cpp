#include "hexflow/instance.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace hexflow {

namespace {

// Work below this is treated as finished (absorbs rounding in advance()).
constexpr double kWorkEpsilon = 1e-9;

bool earlier(const InferenceRequest& a, const InferenceRequest& b) {
  if (a.enqueue_time != b.enqueue_time) return a.enqueue_time < b.enqueue_time;
  return a.request_id < b.request_id;
}

std::size_t pick_min_by(std::span<const InferenceRequest> pending, auto key) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < pending.size(); ++i) {
    const double k = key(pending[i]);
    const double kb = key(pending[best]);
    if (k < kb || (k == kb && earlier(pending[i], pending[best]))) best = i;
  }
  return best;
}

// QLM-style group selection: groups are served FCFS by head-of-group arrival
// unless some group's estimated wait would blow its deadline, in which case
// groups are reordered by least remaining time.
std::size_t select_qlm(std::span<const InferenceRequest> pending, const InstanceProfile& inst, Seconds now,
                       Seconds resident_work) {
  struct Group {
    std::uint32_t slo_class;
    std::size_t head;           // earliest member
    Seconds work = 0.0;
    Seconds tightest_deadline = std::numeric_limits<double>::infinity();
  };
  std::vector<Group> groups;
  for (std::size_t i = 0; i < pending.size(); ++i) {
    const auto& r = pending[i];
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const Group& g) { return g.slo_class == r.meta.slo_class; });
    if (it == groups.end()) {
      groups.push_back(Group{r.meta.slo_class, i});
      it = std::prev(groups.end());
    } else if (earlier(r, pending[it->head])) {
      it->head = i;
    }
    it->work += comp_time(r, inst);
    it->tightest_deadline = std::min(it->tightest_deadline, r.meta.job_deadline);
  }
  std::sort(groups.begin(), groups.end(),
            [&](const Group& a, const Group& b) { return earlier(pending[a.head], pending[b.head]); });

  const double slots = static_cast<double>(inst.batch_slots);
  Seconds ahead = resident_work;
  bool violation = false;
  for (const auto& g : groups) {
    const Seconds wait = ahead / slots;
    if (now + wait + comp_time(pending[g.head], inst) > g.tightest_deadline) {
      violation = true;
      break;
    }
    ahead += g.work;
  }
  if (violation) {
    std::stable_sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
      return a.tightest_deadline < b.tightest_deadline;
    });
  }
  return groups.front().head;
}

}  // namespace

double urgency(const InferenceRequest& request, const InstanceProfile& inst, Seconds now) {
  const Seconds waited = now - request.enqueue_time;
  return comp_time(request, inst) - (request.slo_budget - waited);
}

std::optional<std::size_t> argmax_urgency(std::span<const UrgencyEntry> entries) {
  if (entries.empty()) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const auto& b = entries[best];
    if (e.urgency > b.urgency ||
        (e.urgency == b.urgency &&
         (e.enqueue_time < b.enqueue_time || (e.enqueue_time == b.enqueue_time && e.request_id < b.request_id)))) {
      best = i;
    }
  }
  return best;
}

void VtcCounters::on_enqueue(std::uint32_t client) {
  auto& backlog = backlog_[client];
  if (backlog == 0) {
    // Counter lift: a newly backlogged client starts no lower than the
    // least-served backlogged client.
    double floor = -1.0;
    for (const auto& [c, n] : backlog_) {
      if (n == 0 || c == client) continue;
      const double v = counter(c);
      if (floor < 0.0 || v < floor) floor = v;
    }
    if (floor >= 0.0) served_[client] = std::max(counter(client), floor);
  }
  ++backlog;
}

void VtcCounters::on_admit(std::uint32_t client, TokenCount input_tokens) {
  served_[client] += kInputWeight * input_tokens;
}

void VtcCounters::on_complete(std::uint32_t client, TokenCount output_tokens) {
  served_[client] += kOutputWeight * output_tokens;
  on_drop(client);
}

void VtcCounters::on_drop(std::uint32_t client) {
  auto it = backlog_.find(client);
  if (it == backlog_.end() || it->second == 0) return;
  if (--it->second == 0) backlog_.erase(it);
}

double VtcCounters::counter(std::uint32_t client) const {
  auto it = served_.find(client);
  return it == served_.end() ? 0.0 : it->second;
}

std::optional<std::size_t> select_next(std::span<const InferenceRequest> pending, QueueDiscipline discipline,
                                       const InstanceProfile& inst, Seconds now, const VtcCounters* vtc,
                                       Seconds resident_work) {
  if (pending.empty()) return std::nullopt;
  switch (discipline) {
    case QueueDiscipline::Urgency: {
      std::vector<UrgencyEntry> entries;
      entries.reserve(pending.size());
      for (const auto& r : pending) entries.push_back({urgency(r, inst, now), r.enqueue_time, r.request_id});
      return argmax_urgency(entries);
    }
    case QueueDiscipline::Fcfs:
      return pick_min_by(pending, [](const InferenceRequest&) { return 0.0; });
    case QueueDiscipline::Laxity:
      return pick_min_by(pending, [](const InferenceRequest& r) { return r.meta.laxity_deadline; });
    case QueueDiscipline::VtcCounter: {
      if (vtc == nullptr) throw InvariantError("VTC discipline without counters");
      return pick_min_by(pending, [vtc](const InferenceRequest& r) { return vtc->counter(r.meta.vtc_client); });
    }
    case QueueDiscipline::QlmGrouped:
      return select_qlm(pending, inst, now, resident_work);
  }
  return std::nullopt;
}

Instance::Instance(InstanceProfile profile, QueueDiscipline discipline, QueueCost queue_cost)
    : profile_(std::move(profile)), discipline_(discipline), queue_cost_(queue_cost) {
  profile_.validate();
}

double Instance::slowdown() const {
  if (active_.empty()) return 1.0;
  return 1.0 + profile_.batch_slowdown * static_cast<double>(active_.size() - 1);
}

Seconds Instance::queue_time() const {
  Seconds total = 0.0;
  for (const auto& a : active_) {
    const Seconds c = comp_time(a.request, profile_);
    total += queue_cost_ == QueueCost::Full ? c : c * (a.remaining_work / a.total_work);
  }
  for (const auto& r : pending_) total += comp_time(r, profile_);
  return total;
}

std::vector<InferenceRequest> Instance::members() const {
  std::vector<InferenceRequest> out;
  out.reserve(active_.size() + pending_.size());
  for (const auto& a : active_) out.push_back(a.request);
  out.insert(out.end(), pending_.begin(), pending_.end());
  return out;
}

void Instance::enqueue(InferenceRequest request, Seconds now) {
  request.enqueue_time = now;
  request.assigned_instance = profile_.instance_id;
  pending_.push_back(std::move(request));
}

void Instance::advance(Seconds now) {
  if (now < last_update_) throw InvariantError("instance clock moved backwards");
  if (!active_.empty()) {
    const double progress = (now - last_update_) / slowdown();
    for (auto& a : active_) a.remaining_work = std::max(0.0, a.remaining_work - progress);
  }
  last_update_ = now;
}

bool Instance::token_cap_allows(const InferenceRequest& candidate) const {
  if (profile_.max_batch_tokens == 0 || active_.empty()) return true;
  std::uint64_t used = 0;
  for (const auto& a : active_) used += a.request.input_tokens + a.request.est_output_tokens;
  return used + candidate.input_tokens + candidate.est_output_tokens <= profile_.max_batch_tokens;
}

std::optional<InferenceRequest> Instance::admit_next(Seconds now, VtcCounters* vtc) {
  if (!has_free_slot() || pending_.empty()) return std::nullopt;
  Seconds resident = 0.0;
  if (discipline_ == QueueDiscipline::QlmGrouped) {
    for (const auto& a : active_) resident += comp_time(a.request, profile_) * (a.remaining_work / a.total_work);
  }
  const auto idx = select_next(pending_, discipline_, profile_, now, vtc, resident);
  if (!idx) return std::nullopt;
  if (!token_cap_allows(pending_[*idx])) return std::nullopt;

  InferenceRequest r = std::move(pending_[*idx]);
  pending_.erase(pending_.begin() + static_cast<std::ptrdiff_t>(*idx));
  r.start_time = now;
  if (vtc != nullptr && discipline_ == QueueDiscipline::VtcCounter) vtc->on_admit(r.meta.vtc_client, r.input_tokens);
  const double work = service_work(r, profile_);
  active_.push_back(ActiveRequest{r, work, work});
  ++version_;
  return r;
}

std::vector<InferenceRequest> Instance::take_finished(Seconds now) {
  std::vector<InferenceRequest> done;
  std::vector<ActiveRequest> still;
  still.reserve(active_.size());
  for (auto& a : active_) {
    if (a.remaining_work <= kWorkEpsilon) {
      a.request.finish_time = now;
      done.push_back(std::move(a.request));
    } else {
      still.push_back(std::move(a));
    }
  }
  if (!done.empty()) {
    active_ = std::move(still);
    ++version_;
    std::sort(done.begin(), done.end(),
              [](const InferenceRequest& a, const InferenceRequest& b) { return a.request_id < b.request_id; });
  }
  return done;
}

std::optional<Seconds> Instance::next_completion() const {
  if (active_.empty()) return std::nullopt;
  double min_work = active_.front().remaining_work;
  for (const auto& a : active_) min_work = std::min(min_work, a.remaining_work);
  return last_update_ + min_work * slowdown();
}

std::optional<InferenceRequest> Instance::remove_active(RequestId id, std::uint32_t attempt, Seconds now) {
  for (auto it = active_.begin(); it != active_.end(); ++it) {
    if (it->request.request_id == id && it->request.attempt == attempt) {
      InferenceRequest r = std::move(it->request);
      r.finish_time = now;
      active_.erase(it);
      ++version_;
      return r;
    }
  }
  return std::nullopt;
}

}  // namespace hexflow
