#include <doctest.h>

#include <string>

#include "hexflow/config.hpp"
#include "hexflow/report.hpp"

using namespace hexflow;

namespace {

std::string preset(const std::string& name) { return std::string(HEXFLOW_SOURCE_DIR) + "/configs/" + name + ".cfg"; }

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults validate and echo round-trips") {
    const auto c = ExperimentConfig::defaults();
    CHECK_NOTHROW(c.validate());
    const auto again = ExperimentConfig::parse(c.echo());
    CHECK(again.echo() == c.echo());
  }

  TEST_CASE("parse handles comments and rejects unknown keys") {
    const auto c = ExperimentConfig::parse("# note\ndispatch.alpha = 0.3  \n\nrun.seeds = 4,5\n");
    CHECK(c.get_double("dispatch.alpha") == doctest::Approx(0.3));
    CHECK(c.seeds() == std::vector<std::uint64_t>{4, 5});
    CHECK_THROWS_AS(ExperimentConfig::parse("dispatch.alfa = 0.3\n"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse("just words\n"), ConfigError);
    auto d = ExperimentConfig::defaults();
    CHECK_THROWS_AS(d.set("nope.key", "1"), ConfigError);
  }

  TEST_CASE("references must both be auto or both numeric") {
    auto c = ExperimentConfig::defaults();
    c.set("dispatch.c_ref", "0.5");
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.set("dispatch.q_ref", "2");
    CHECK_NOTHROW(c.validate());
    const auto sim = c.sim_config("wb_pq", 0);
    CHECK_FALSE(sim.auto_reference);
    CHECK(sim.dispatch.beta() == doctest::Approx(1.0));
  }

  TEST_CASE("cluster classes") {
    auto c = ExperimentConfig::defaults();
    const auto cluster = c.cluster();
    REQUIRE(cluster.size() == 4);
    CHECK(cluster[0].class_name == "fast");
    CHECK(cluster[3].class_name == "slow");
    CHECK(cluster[3].instance_id == 3);
    c.set("cluster.instances", "fast,turbo");
    CHECK_THROWS_AS(c.cluster(), ConfigError);
  }

  TEST_CASE("workload resolution") {
    auto c = ExperimentConfig::defaults();
    c.set("workload.utilization", "0.5");
    const auto spec = c.trace_spec(0);
    CHECK(spec.rate_qps == doctest::Approx(qps_for_utilization(0.5, c.cluster(), c.workflow())));
    c.set("workload.tenants", "1:1:3.5,2:1:5.4");
    c.set("workload.schedule", "0:5,200:20,400:5");
    const auto s2 = c.trace_spec(0);
    REQUIRE(s2.tenants.size() == 2);
    CHECK(s2.tenants[1].slo_scale == doctest::Approx(5.4));
    REQUIRE(s2.schedule.size() == 3);
    CHECK(s2.schedule[1].rate_qps == doctest::Approx(20.0));
    c.set("workload.tenants", "1:1");
    CHECK_THROWS_AS(c.trace_spec(0), ConfigError);
  }

  TEST_CASE("bundled presets load") {
    for (const char* name : {"hetero1", "hetero2", "homo"}) {
      const auto c = ExperimentConfig::load(preset(name));
      CHECK_NOTHROW(c.validate());
      CHECK(c.policies().size() == 6);
      CHECK(c.seeds() == std::vector<std::uint64_t>{0, 1, 2});
    }
    const auto h2 = ExperimentConfig::load(preset("hetero2"));
    CHECK(h2.cluster()[3].class_name == "slow");
    CHECK_THROWS_AS(ExperimentConfig::load(preset("missing")), ConfigError);
  }

  TEST_CASE("generated traces carry exclusive times") {
    auto c = ExperimentConfig::defaults();
    c.set("workload.duration", "60");
    const Trace t = c.trace(1);
    REQUIRE_FALSE(t.queries.empty());
    for (const auto& q : t.queries) CHECK(q.base_exclusive_time.has_value());
  }

  TEST_CASE("report JSON round trip") {
    auto c = ExperimentConfig::defaults();
    c.set("workload.duration", "120");
    c.set("workload.tenants", "0:1:3,1:1:5");
    const auto sim = c.sim_config("wb_pq", 2);
    SimReport r = run(sim, c.trace(2));
    r.config_echo = c.echo();
    const SimReport back = report_from_json(report_to_json(r));
    CHECK(back.policy == "wb_pq");
    CHECK(back.seed == 2);
    CHECK(back.p95.scale == r.p95.scale);
    CHECK(back.queries.size() == r.queries.size());
    CHECK(back.tenant_attainment == r.tenant_attainment);
    CHECK(back.stage_mix == r.stage_mix);
    CHECK(back.config_echo == r.config_echo);
    CHECK(attainment_csv(back).rfind("scale,fraction\n", 0) == 0);
    CHECK(queries_csv(back).rfind("id,tenant,kind,latency,ratio,status\n", 0) == 0);
    CHECK(stage_mix_table(back).find("schema_linking") != std::string::npos);
    CHECK_THROWS_AS(report_from_json("{}"), ConfigError);
  }
}
