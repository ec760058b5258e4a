#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hexflow/tracegen.hpp"

using namespace hexflow;

namespace {

TraceSpec base_spec(std::uint64_t seed) {
  TraceSpec s;
  s.rate_qps = 2.0;
  s.duration = 600.0;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_SUITE("tracegen") {
  TEST_CASE("seeded and pure") {
    CHECK(generate(base_spec(4)) == generate(base_spec(4)));
    CHECK_FALSE(generate(base_spec(4)) == generate(base_spec(5)));
  }

  TEST_CASE("arrivals strictly increase inside the duration") {
    const Trace t = generate(base_spec(1));
    REQUIRE(t.queries.size() > 100);
    for (std::size_t i = 1; i < t.queries.size(); ++i) {
      CHECK(t.queries[i].arrival_time > t.queries[i - 1].arrival_time);
    }
    CHECK(t.queries.back().arrival_time < 600.0);
  }

  TEST_CASE("workflow queries follow the template") {
    const Trace t = generate(base_spec(2));
    for (const auto& q : t.queries) {
      REQUIRE(q.stages.size() == 4);
      CHECK(q.stages[0].calls.size() == 1);
      CHECK(q.stages[1].calls.size() == 8);
      CHECK(q.stages[2].calls.size() <= 10);
      CHECK(q.stages[3].calls.size() == 2);
    }
  }

  TEST_CASE("piecewise schedule rates per segment") {
    TraceSpec s = base_spec(9);
    s.schedule = {{0.0, 5.0}, {200.0, 20.0}, {400.0, 5.0}};
    s.duration = 600.0;
    const Trace t = generate(s);
    double counts[3] = {0, 0, 0};
    for (const auto& q : t.queries) counts[q.arrival_time < 200.0 ? 0 : (q.arrival_time < 400.0 ? 1 : 2)] += 1.0;
    const double rates[3] = {5.0, 20.0, 5.0};
    for (int i = 0; i < 3; ++i) {
      const double expected = rates[i] * 200.0;
      CHECK(std::fabs(counts[i] - expected) <= 3.0 * std::sqrt(expected));
    }
  }

  TEST_CASE("competing single-shot share") {
    TraceSpec s = base_spec(3);
    s.competing_fraction = 0.25;
    const Trace t = generate(s);
    double single = 0.0;
    for (const auto& q : t.queries) {
      if (q.kind == QueryKind::SingleShot) {
        single += 1.0;
        CHECK(q.total_calls() == 1);
      }
    }
    const double n = static_cast<double>(t.queries.size());
    CHECK(std::fabs(single - 0.25 * n) <= 3.0 * std::sqrt(n * 0.25 * 0.75));
  }

  TEST_CASE("tenant weights") {
    TraceSpec s = base_spec(6);
    s.tenants = {{1, 3.0, 3.5}, {2, 1.0, 5.4}};
    const Trace t = generate(s);
    double first = 0.0;
    for (const auto& q : t.queries) first += q.tenant_id == 1 ? 1.0 : 0.0;
    const double n = static_cast<double>(t.queries.size());
    CHECK(std::fabs(first - 0.75 * n) <= 3.0 * std::sqrt(n * 0.75 * 0.25));
    const SloSpec slo = s.slo();
    CHECK(slo.scale_for(1) == doctest::Approx(3.5));
    CHECK(slo.scale_for(2) == doctest::Approx(5.4));
  }

  TEST_CASE("call counts match the calibration band") {
    TraceSpec s = base_spec(12);
    s.duration = 1000.0;
    const Trace t = generate(s);
    double sum = 0.0;
    double sq = 0.0;
    for (const auto& q : t.queries) {
      const double c = static_cast<double>(q.total_calls());
      sum += c;
      sq += c * c;
    }
    const double n = static_cast<double>(t.queries.size());
    const double mean = sum / n;
    const double var = (sq - n * mean * mean) / (n - 1.0);
    CHECK(mean >= 18.0);
    CHECK(mean <= 22.0);
    CHECK(var >= 10.0);
    CHECK(var <= 18.0);
  }

  TEST_CASE("JSONL round trip") {
    TraceSpec s = base_spec(7);
    s.duration = 30.0;
    s.competing_fraction = 0.3;
    Trace t = generate(s);
    t.queries.front().base_exclusive_time = 12.25;
    std::stringstream ss;
    write_trace(ss, t);
    CHECK(read_trace(ss) == t);
  }

  TEST_CASE("load errors name the line and field") {
    std::istringstream missing(
        "{\"query_id\":0,\"arrival_time\":1.0,\"tenant_id\":0,\"kind\":\"single_shot\","
        "\"stages\":[{\"stage\":\"single_shot\",\"calls\":[{\"input_tokens\":5,\"output_tokens\":5}]}]}\n"
        "{\"query_id\":1,\"tenant_id\":0}\n");
    try {
      read_trace(missing);
      FAIL("expected an error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()) == "trace line 2: missing field 'arrival_time'");
    }

    std::istringstream backwards(
        "{\"query_id\":0,\"arrival_time\":2.0,\"tenant_id\":0,\"kind\":\"workflow\",\"stages\":[]}\n"
        "{\"query_id\":1,\"arrival_time\":1.0,\"tenant_id\":0,\"kind\":\"workflow\",\"stages\":[]}\n");
    CHECK_THROWS_AS(read_trace(backwards), ConfigError);
  }

  TEST_CASE("spec validation") {
    TraceSpec s = base_spec(0);
    s.competing_fraction = 1.0;
    CHECK_THROWS_AS(generate(s), ConfigError);
    s = base_spec(0);
    s.schedule = {{5.0, 1.0}};
    CHECK_THROWS_AS(generate(s), ConfigError);
    s = base_spec(0);
    s.tenants.clear();
    CHECK_THROWS_AS(generate(s), ConfigError);
  }
}
