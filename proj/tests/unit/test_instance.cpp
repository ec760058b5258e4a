#include <doctest.h>

#include <vector>

#include "helpers.hpp"
#include "hexflow/instance.hpp"

using namespace hexflow;
using hexflow::testing::profile;
using hexflow::testing::request;

namespace {

// Request whose comp time on a unit profile (1 tok/s both ways) is `comp`.
InferenceRequest timed(RequestId id, Seconds comp, Seconds budget, Seconds enqueued) {
  auto r = request(id, 1, static_cast<TokenCount>(comp - 1.0));
  r.slo_budget = budget;
  r.enqueue_time = enqueued;
  return r;
}

}  // namespace

TEST_SUITE("instance") {
  TEST_CASE("urgency grows one-for-one with waiting") {
    const auto unit = profile(0, 1.0, 1.0);
    auto r = timed(1, 3.0, 5.0, 0.0);
    CHECK(urgency(r, unit, 1.0) == doctest::Approx(-1.0));
    CHECK(urgency(r, unit, 4.0) == doctest::Approx(2.0));
  }

  TEST_CASE("queue snapshot admits the most urgent request") {
    const auto unit = profile(0, 1.0, 1.0, 1);
    const std::vector<double> arrive = {22.4, 46.3, 52.3, 62.4, 62.8, 64.4, 65.0};
    const std::vector<double> target = {14.5, 13.2, 19.0, 13.1, 19.0, 26.9, 21.9};
    const Seconds now = 70.0;
    std::vector<InferenceRequest> pending;
    for (std::size_t i = 0; i < arrive.size(); ++i) {
      // Pick the budget that reproduces the snapshot urgency: U = c - (b - wait).
      const Seconds comp = 2.0;
      const Seconds budget = comp + (now - arrive[i]) - target[i];
      pending.push_back(timed(static_cast<RequestId>(i + 1), comp, budget, arrive[i]));
      CHECK(urgency(pending.back(), unit, now) == doctest::Approx(target[i]));
    }
    const auto pick = select_next(pending, QueueDiscipline::Urgency, unit, now, nullptr);
    REQUIRE(pick.has_value());
    CHECK(pending[*pick].request_id == 6);

    const auto fcfs = select_next(pending, QueueDiscipline::Fcfs, unit, now, nullptr);
    CHECK(pending[*fcfs].request_id == 1);
  }

  TEST_CASE("urgency ties favour earlier enqueue then lower id") {
    std::vector<UrgencyEntry> e = {{5.0, 2.0, 9}, {5.0, 1.0, 8}, {5.0, 1.0, 3}, {4.0, 0.0, 1}};
    CHECK(argmax_urgency(e) == 2u);
    CHECK_FALSE(argmax_urgency(std::span<const UrgencyEntry>{}).has_value());
  }

  TEST_CASE("empty queue admits nothing") {
    const auto unit = profile(0, 1.0, 1.0);
    CHECK_FALSE(select_next({}, QueueDiscipline::Urgency, unit, 0.0, nullptr).has_value());
  }

  TEST_CASE("laxity discipline orders by job laxity") {
    const auto unit = profile(0, 1.0, 1.0);
    std::vector<InferenceRequest> pending = {timed(1, 2.0, 0.0, 0.0), timed(2, 2.0, 0.0, 1.0)};
    pending[0].meta.laxity_deadline = 50.0;
    pending[1].meta.laxity_deadline = 20.0;
    CHECK(select_next(pending, QueueDiscipline::Laxity, unit, 2.0, nullptr) == 1u);
  }

  TEST_CASE("vtc serves the least-served client") {
    VtcCounters vtc;
    vtc.on_enqueue(1);
    vtc.on_admit(1, 100);
    vtc.on_complete(1, 50);
    CHECK(vtc.counter(1) == doctest::Approx(100 * VtcCounters::kInputWeight + 50 * VtcCounters::kOutputWeight));
    vtc.on_enqueue(2);
    vtc.on_enqueue(1);
    const auto unit = profile(0, 1.0, 1.0);
    std::vector<InferenceRequest> pending = {timed(1, 2.0, 0.0, 0.0), timed(2, 2.0, 0.0, 1.0)};
    pending[0].meta.vtc_client = 1;
    pending[1].meta.vtc_client = 2;
    CHECK(select_next(pending, QueueDiscipline::VtcCounter, unit, 2.0, &vtc) == 1u);
  }

  TEST_CASE("vtc lifts a newly backlogged client") {
    VtcCounters vtc;
    vtc.on_enqueue(1);
    vtc.on_admit(1, 500);
    vtc.on_enqueue(2);
    CHECK(vtc.counter(2) == doctest::Approx(500.0));
  }

  TEST_CASE("batch of one runs at full speed") {
    Instance inst(profile(0, 10.0, 10.0, 4, 0.5), QueueDiscipline::Fcfs);
    inst.enqueue(request(1, 20, 1), 0.0);
    REQUIRE(inst.admit_next(0.0, nullptr).has_value());
    CHECK(*inst.next_completion() == doctest::Approx(2.1));
  }

  TEST_CASE("constant batch of two stretches service by 1 + gamma") {
    Instance inst(profile(0, 1.0, 1.0, 2, 0.5), QueueDiscipline::Fcfs);
    inst.enqueue(timed(1, 4.0, 0.0, 0.0), 0.0);
    inst.enqueue(timed(2, 4.0, 0.0, 0.0), 0.0);
    inst.admit_next(0.0, nullptr);
    inst.admit_next(0.0, nullptr);
    CHECK(inst.slowdown() == doctest::Approx(1.5));
    CHECK(*inst.next_completion() == doctest::Approx(6.0));
  }

  TEST_CASE("piecewise progress matches a stepped integration") {
    const double gamma = 0.5;
    Instance inst(profile(0, 1.0, 1.0, 2, gamma), QueueDiscipline::Fcfs);
    inst.enqueue(timed(1, 3.0, 0.0, 0.0), 0.0);
    inst.admit_next(0.0, nullptr);
    inst.advance(1.0);
    inst.enqueue(timed(2, 10.0, 0.0, 1.0), 1.0);
    inst.admit_next(1.0, nullptr);
    const Seconds predicted = *inst.next_completion();

    // Scalar oracle: integrate progress in small steps.
    double a = 3.0;
    double b = 10.0;
    double t = 0.0;
    const double dt = 1e-5;
    while (a > 0.0) {
      const int active = t < 1.0 ? 1 : 2;
      const double rate = 1.0 / (1.0 + gamma * (active - 1));
      a -= rate * dt;
      if (active == 2) b -= rate * dt;
      t += dt;
    }
    CHECK(predicted == doctest::Approx(t).epsilon(1e-4));
    CHECK(predicted == doctest::Approx(4.0));

    inst.advance(predicted);
    const auto done = inst.take_finished(predicted);
    REQUIRE(done.size() == 1);
    CHECK(done[0].request_id == 1);
    CHECK(inst.active().front().remaining_work == doctest::Approx(b).epsilon(1e-3));
  }

  TEST_CASE("queue time counts resident and pending work") {
    Instance full(profile(0, 1.0, 1.0, 1), QueueDiscipline::Fcfs, QueueCost::Full);
    Instance rem(profile(0, 1.0, 1.0, 1), QueueDiscipline::Fcfs, QueueCost::Remaining);
    for (Instance* inst : {&full, &rem}) {
      inst->enqueue(timed(1, 4.0, 0.0, 0.0), 0.0);
      inst->enqueue(timed(2, 3.0, 0.0, 0.0), 0.0);
      inst->admit_next(0.0, nullptr);
      inst->advance(1.0);
    }
    CHECK(full.queue_time() == doctest::Approx(7.0));
    CHECK(rem.queue_time() == doctest::Approx(6.0));
    CHECK(full.members().size() == 2);
    CHECK(full.members().front().request_id == 1);
  }

  TEST_CASE("slots and token cap bound admission") {
    auto p = profile(0, 1.0, 1.0, 1);
    Instance one(p, QueueDiscipline::Fcfs);
    one.enqueue(timed(1, 2.0, 0.0, 0.0), 0.0);
    one.enqueue(timed(2, 2.0, 0.0, 0.0), 0.0);
    CHECK(one.admit_next(0.0, nullptr).has_value());
    CHECK_FALSE(one.admit_next(0.0, nullptr).has_value());

    p.batch_slots = 4;
    p.max_batch_tokens = 3;
    Instance capped(p, QueueDiscipline::Fcfs);
    capped.enqueue(timed(1, 2.0, 0.0, 0.0), 0.0);
    capped.enqueue(timed(2, 2.0, 0.0, 0.0), 0.0);
    CHECK(capped.admit_next(0.0, nullptr).has_value());
    CHECK_FALSE(capped.admit_next(0.0, nullptr).has_value());
  }

  TEST_CASE("clock cannot move backwards") {
    Instance inst(profile(0, 1.0, 1.0), QueueDiscipline::Fcfs);
    inst.advance(5.0);
    CHECK_THROWS_AS(inst.advance(4.0), InvariantError);
  }
}
