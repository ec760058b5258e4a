#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "hexflow/dispatch.hpp"
#include "hexflow/engine.hpp"
#include "hexflow/tracegen.hpp"

using namespace hexflow;
using hexflow::testing::plain_config;
using hexflow::testing::profile;
using hexflow::testing::single_shot;

namespace {

Trace small_workflow_trace(std::uint64_t seed, double rate = 0.05, Seconds duration = 400.0) {
  TraceSpec spec;
  spec.rate_qps = rate;
  spec.duration = duration;
  spec.seed = seed;
  spec.competing_fraction = 0.2;
  return generate(spec);
}

std::vector<InstanceProfile> hetero_cluster() {
  return {profile(0, 16000, 160, 4, 0.15, "fast"), profile(1, 10000, 100, 4, 0.15, "mid"),
          profile(2, 6000, 60, 4, 0.15, "slow")};
}

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("lone request runs for exactly its comp time") {
    auto cfg = plain_config({profile(0, 100.0, 10.0)});
    Trace t;
    t.queries.push_back(single_shot(0, 5.0, 200, 30));
    const auto report = run(cfg, t);
    REQUIRE(report.queries.size() == 1);
    CHECK(report.queries[0].status == JobStatus::Done);
    CHECK(report.queries[0].latency == doctest::Approx(2.0 + 3.0));
    CHECK(report.queries[0].exclusive_time == doctest::Approx(5.0));
  }

  TEST_CASE("one slot serialises simultaneous requests") {
    auto cfg = plain_config({profile(0, 100.0, 10.0, 1, 0.0)}, "rr_fcfs");
    Trace t;
    t.queries.push_back(single_shot(0, 0.0, 100, 10));
    t.queries.push_back(single_shot(1, 0.0, 100, 10));
    const auto report = run(cfg, t);
    std::vector<double> lat = {report.queries[0].latency, report.queries[1].latency};
    std::sort(lat.begin(), lat.end());
    CHECK(lat[0] == doctest::Approx(2.0));
    CHECK(lat[1] == doctest::Approx(4.0));
  }

  TEST_CASE("identical inputs give byte-identical event logs") {
    auto cfg = plain_config(hetero_cluster(), "po2c");
    cfg.log_events = true;
    cfg.seed = 5;
    const Trace t = small_workflow_trace(5);
    Simulator a(cfg, t);
    a.run();
    Simulator b(cfg, t);
    b.run();
    CHECK(!a.events().empty());
    CHECK(event_log_string(a.events()) == event_log_string(b.events()));
  }

  TEST_CASE("event log lines are JSON objects with the stable fields") {
    auto cfg = plain_config({profile(0, 100.0, 10.0)});
    cfg.log_events = true;
    Trace t;
    t.queries.push_back(single_shot(0, 1.0, 100, 10));
    Simulator sim(cfg, t);
    sim.run();
    const std::string log = event_log_string(sim.events());
    std::istringstream is(log);
    std::string line;
    int n = 0;
    while (std::getline(is, line)) {
      ++n;
      for (const char* key : {"\"time\"", "\"seq\"", "\"kind\"", "\"query\"", "\"request\"", "\"instance\""}) {
        CHECK(line.find(key) != std::string::npos);
      }
    }
    // arrival, ready, dispatch, admission, completion
    CHECK(n == 5);
    CHECK(log.find("\"query_arrival\"") != std::string::npos);
  }

  TEST_CASE("every workflow query completes with all its calls") {
    auto cfg = plain_config(hetero_cluster());
    cfg.auto_reference = true;
    const Trace t = small_workflow_trace(2);
    const auto report = run(cfg, t);
    CHECK_FALSE(report.truncated);
    for (std::size_t i = 0; i < t.queries.size(); ++i) {
      CHECK(report.queries[i].status == JobStatus::Done);
      CHECK(report.queries[i].calls == t.queries[i].total_calls());
      CHECK(report.queries[i].latency >= report.queries[i].exclusive_time * (1.0 - 1e-9));
    }
  }

  TEST_CASE("self-replay reproduces the run's tail latency") {
    auto cfg = plain_config(hetero_cluster());
    cfg.dispatch.set_alpha(0.3);
    Trace t = small_workflow_trace(8);
    fill_exclusive_times(t, cfg);
    const auto report = run(cfg, t);
    std::vector<double> lat;
    for (const auto& q : report.queries) lat.push_back(q.latency);
    CHECK(replay_for_tuning(t, cfg, 0.3) == percentile(lat, 0.95));

    Trace one;
    one.queries.push_back(t.queries.front());
    CHECK(replay_for_tuning(one, cfg, 0.3) == run(cfg, one).queries.front().latency);
    CHECK_THROWS_AS(replay_for_tuning(Trace{}, cfg, 0.3), ConfigError);
  }

  TEST_CASE("speed-only dispatch piles a burst onto the fast instance") {
    // Every request is cheaper on instance 1, so alpha 1 sends the whole burst there.
    auto cfg = plain_config({profile(0, 100.0, 10.0, 1), profile(1, 200.0, 20.0, 1)});
    Trace t;
    for (QueryId i = 0; i < 10; ++i) t.queries.push_back(single_shot(i, 0.0, 100, 10));
    fill_exclusive_times(t, cfg);
    const double p_balanced = replay_for_tuning(t, cfg, 0.0);
    const double p_hotspot = replay_for_tuning(t, cfg, 1.0);
    CHECK(p_hotspot > p_balanced);
    CHECK(p_hotspot == doctest::Approx(10.0));
  }

  TEST_CASE("timeouts re-dispatch and exhausted retries fail the query") {
    auto slow = profile(0, 10.0, 1.0, 1);
    slow.timeout = 1.0;
    auto fast = profile(1, 1000.0, 100.0, 1);
    auto cfg = plain_config({slow, fast}, "rr_fcfs");
    Trace t;
    t.queries.push_back(single_shot(0, 0.0, 100, 10));
    t.queries.front().base_exclusive_time = 0.2;
    auto report = run(cfg, t);
    CHECK(report.queries[0].status == JobStatus::Done);
    CHECK(report.queries[0].latency == doctest::Approx(1.2));

    cfg.cluster[1].timeout = 0.1;
    cfg.max_retries = 1;
    report = run(cfg, t);
    CHECK(report.queries[0].status == JobStatus::Failed);
    CHECK(std::isinf(report.queries[0].latency));
  }

  TEST_CASE("a short horizon truncates the run") {
    auto cfg = plain_config({profile(0, 100.0, 10.0)});
    cfg.horizon = 1.0;
    Trace t;
    t.queries.push_back(single_shot(0, 0.0, 100, 10));
    t.queries.front().base_exclusive_time = 2.0;
    const auto report = run(cfg, t);
    CHECK(report.truncated);
    CHECK(std::isinf(report.queries[0].latency));
  }

  TEST_CASE("malformed traces are rejected") {
    auto cfg = plain_config({profile(0, 100.0, 10.0)});
    Trace dup;
    dup.queries = {single_shot(0, 0.0, 1, 1), single_shot(0, 1.0, 1, 1)};
    CHECK_THROWS_AS(run(cfg, dup), ConfigError);
    Trace unsorted;
    unsorted.queries = {single_shot(0, 2.0, 1, 1), single_shot(1, 1.0, 1, 1)};
    CHECK_THROWS_AS(run(cfg, unsorted), ConfigError);
  }

  TEST_CASE("reference calibration is positive and floored") {
    auto cfg = plain_config(hetero_cluster());
    Trace t = small_workflow_trace(4);
    fill_exclusive_times(t, cfg);
    const auto [c_ref, q_ref] = calibrate_reference(t, cfg);
    CHECK(c_ref > 0.0);
    CHECK(q_ref >= kEmptyQueueFloor);
  }

  TEST_CASE("utilization maps to an arrival rate linearly") {
    const auto cluster = hetero_cluster();
    const auto tpl = WorkflowTemplate::text_to_sql();
    const double r1 = qps_for_utilization(0.5, cluster, tpl);
    const double r2 = qps_for_utilization(1.0, cluster, tpl);
    CHECK(r2 == doctest::Approx(2.0 * r1));

    // Hand computation for one unit-speed instance and a single-call template.
    WorkflowTemplate one;
    one.stages = {StageTemplate{.stage = StageKind::SchemaLinking, .input = {10, 0}, .output = {10, 0},
                                .iterations = {}}};
    one.single_shot = one.stages.front();
    one.single_shot.stage = StageKind::SingleShot;
    const std::vector<InstanceProfile> unit = {profile(0, 1.0, 1.0, 4, 0.5)};
    // 4 slots at slowdown 2.5 -> 1.6 requests of 20 s each in parallel.
    CHECK(qps_for_utilization(1.0, unit, one) == doctest::Approx(1.6 / 20.0));
    CHECK_THROWS_AS(qps_for_utilization(0.0, unit, one), ConfigError);
  }

  TEST_CASE("config validation") {
    SimConfig cfg;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}
