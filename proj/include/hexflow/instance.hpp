#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "hexflow/core.hpp"
#include "hexflow/costmodel.hpp"

namespace hexflow {

// U = t_comp - (slo_budget - waited). Rises one-for-one with waiting time.
double urgency(const InferenceRequest& request, const InstanceProfile& inst, Seconds now);

struct UrgencyEntry {
  double urgency = 0.0;
  Seconds enqueue_time = 0.0;
  RequestId request_id = 0;
};

// Index of the highest-urgency entry; ties go to earlier enqueue, then lower id.
std::optional<std::size_t> argmax_urgency(std::span<const UrgencyEntry> entries);

// Served-token counters for the VTC baseline. Shared by every instance.
class VtcCounters {
 public:
  static constexpr double kInputWeight = 1.0;
  static constexpr double kOutputWeight = 2.0;

  void on_enqueue(std::uint32_t client);
  void on_admit(std::uint32_t client, TokenCount input_tokens);
  void on_complete(std::uint32_t client, TokenCount output_tokens);
  void on_drop(std::uint32_t client);
  double counter(std::uint32_t client) const;

 private:
  std::map<std::uint32_t, double> served_;
  std::map<std::uint32_t, std::uint32_t> backlog_;
};

// Chooses which pending request a free slot admits next under `discipline`.
std::optional<std::size_t> select_next(std::span<const InferenceRequest> pending, QueueDiscipline discipline,
                                       const InstanceProfile& inst, Seconds now, const VtcCounters* vtc,
                                       Seconds resident_work = 0.0);

struct ActiveRequest {
  InferenceRequest request;
  double total_work = 0.0;      // seconds of batch-1 service
  double remaining_work = 0.0;
};

// A model instance: local queue plus a continuous batch. Active requests make
// progress at rate 1 / (1 + gamma * (active - 1)).
class Instance {
 public:
  Instance(InstanceProfile profile, QueueDiscipline discipline, QueueCost queue_cost = QueueCost::Full);

  const InstanceProfile& profile() const { return profile_; }
  QueueDiscipline discipline() const { return discipline_; }
  std::span<const InferenceRequest> pending() const { return pending_; }
  const std::vector<ActiveRequest>& active() const { return active_; }
  bool has_free_slot() const { return active_.size() < profile_.batch_slots; }
  double slowdown() const;

  // Coordinator's t_queue: every queued and resident request.
  Seconds queue_time() const;
  // Resident requests first (admission order), then pending (enqueue order).
  std::vector<InferenceRequest> members() const;

  void enqueue(InferenceRequest request, Seconds now);
  // Moves active work forward to `now` at the current slowdown.
  void advance(Seconds now);
  // Admits the next pending request if a slot is free (call after advance).
  std::optional<InferenceRequest> admit_next(Seconds now, VtcCounters* vtc);
  // Removes finished requests from the batch (call after advance).
  std::vector<InferenceRequest> take_finished(Seconds now);
  std::optional<Seconds> next_completion() const;
  std::optional<InferenceRequest> remove_active(RequestId id, std::uint32_t attempt, Seconds now);
  // Drops pending requests matching `pred`; returns them.
  template <class Pred>
  std::vector<InferenceRequest> drop_pending_if(Pred pred) {
    std::vector<InferenceRequest> dropped;
    std::vector<InferenceRequest> kept;
    for (auto& r : pending_) (pred(r) ? dropped : kept).push_back(std::move(r));
    pending_ = std::move(kept);
    return dropped;
  }

  std::uint64_t version() const { return version_; }

 private:
  bool token_cap_allows(const InferenceRequest& candidate) const;

  InstanceProfile profile_;
  QueueDiscipline discipline_;
  QueueCost queue_cost_;
  std::vector<InferenceRequest> pending_;
  std::vector<ActiveRequest> active_;
  Seconds last_update_ = 0.0;
  std::uint64_t version_ = 0;
};

// Batch-1 service work of a request on an instance, from its true output length.
inline Seconds service_work(const InferenceRequest& r, const InstanceProfile& inst) {
  return comp_time(r.input_tokens, r.true_output_tokens, inst);
}

}  // namespace hexflow
