#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "hexflow/metrics.hpp"

using namespace hexflow;

namespace {

QueryOutcome outcome(QueryId id, TenantId tenant, Seconds arrival, Seconds latency, Seconds exclusive,
                     Seconds deadline) {
  QueryOutcome o;
  o.query_id = id;
  o.tenant_id = tenant;
  o.arrival_time = arrival;
  o.latency = latency;
  o.exclusive_time = exclusive;
  o.deadline = deadline;
  o.status = std::isinf(latency) ? JobStatus::Failed : JobStatus::Done;
  o.finish_time = arrival + latency;
  return o;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("nearest-rank percentile") {
    std::vector<double> v;
    for (int i = 1; i <= 20; ++i) v.push_back(i);
    CHECK(nearest_rank(20, 0.95) == 19);
    CHECK(percentile(v, 0.95) == 19.0);
    CHECK(nearest_rank(1, 0.95) == 1);
    CHECK(nearest_rank(100, 0.95) == 95);
    CHECK_THROWS_AS(nearest_rank(0, 0.5), ConfigError);
  }

  TEST_CASE("p95 scale rounds up to the grid") {
    // Ratios all at most 3.5; the 19th of 20 is 3.42.
    std::vector<double> lat(18, 3.0);
    lat.push_back(3.42);
    lat.push_back(3.45);
    std::vector<double> excl(20, 1.0);
    const auto r = p95_scale(lat, excl);
    CHECK(r.attained);
    CHECK(r.scale == doctest::Approx(3.5));

    std::vector<double> exact(20, 4.0);
    std::vector<double> one(20, 1.0);
    CHECK(p95_scale(exact, one).scale == doctest::Approx(4.0));
  }

  TEST_CASE("failed queries always miss") {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> lat = {1.0, 1.0, inf, inf};
    std::vector<double> excl(4, 1.0);
    CHECK(attainment(lat, excl, 100.0) == doctest::Approx(0.5));
    const auto r = p95_scale(lat, excl, 0.1, 100.0);
    CHECK_FALSE(r.attained);
    CHECK(r.scale == 100.0);
  }

  TEST_CASE("jain index") {
    CHECK(jain(std::vector<double>{1.0, 1.0, 1.0}) == doctest::Approx(1.0));
    CHECK(jain(std::vector<double>{1.0, 0.0}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(jain(std::vector<double>{}), ConfigError);
    CHECK_THROWS_AS(jain(std::vector<double>{0.0, 0.0}), ConfigError);
  }

  TEST_CASE("throughput over the experiment span") {
    std::vector<QueryOutcome> o = {outcome(0, 0, 0.0, 5.0, 1.0, 4.0), outcome(1, 0, 5.0, 5.0, 1.0, 4.0)};
    CHECK(throughput(o) == doctest::Approx(2.0 / 10.0));
  }

  TEST_CASE("summarize fills curve, tenants and fairness") {
    SimReport r;
    r.queries = {outcome(0, 1, 0.0, 2.0, 1.0, 3.5), outcome(1, 1, 1.0, 4.0, 1.0, 3.5),
                 outcome(2, 2, 2.0, 5.0, 1.0, 5.4), outcome(3, 2, 3.0, 5.0, 1.0, 5.4)};
    QueryOutcome competing = outcome(4, 1, 3.5, 50.0, 1.0, 4.0);
    competing.kind = QueryKind::SingleShot;
    r.queries.push_back(competing);
    summarize(r);
    CHECK(r.tenant_attainment.at(1) == doctest::Approx(0.5));
    CHECK(r.tenant_attainment.at(2) == doctest::Approx(1.0));
    REQUIRE(r.jain_index.has_value());
    CHECK(*r.jain_index == doctest::Approx(1.5 * 1.5 / (2.0 * 1.25)));
    // The competing single-shot call does not count toward the workflow tail.
    CHECK(r.p95.scale == doctest::Approx(5.0));
    CHECK(r.attainment_curve.front().first == doctest::Approx(1.0));
    CHECK(r.attainment_curve.back().first == doctest::Approx(10.0));
    CHECK(r.throughput == doctest::Approx(4.0 / 8.0));
  }
}
