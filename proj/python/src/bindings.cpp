#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "hexflow/config.hpp"
#include "hexflow/report.hpp"
#include "hexflow/tracegen.hpp"
#include "hexflow/tuner.hpp"

namespace py = pybind11;
using namespace hexflow;

namespace {

Trace trace_for(const ExperimentConfig& cfg, std::uint64_t seed, const std::optional<std::string>& jsonl) {
  if (!jsonl) return cfg.trace(seed);
  std::istringstream is(*jsonl);
  Trace t = read_trace(is);
  fill_exclusive_times(t, cfg.sim_config(cfg.get("dispatch.policy"), seed));
  return t;
}

}  // namespace

PYBIND11_MODULE(_hexflow, m) {
  m.doc() = "Two-level scheduling simulator for agentic LLM workflows";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<ExperimentConfig>(m, "Config")
      .def(py::init([] { return ExperimentConfig::defaults(); }))
      .def_static("load", &ExperimentConfig::load, py::arg("path"))
      .def_static("parse", [](const std::string& text) { return ExperimentConfig::parse(text); }, py::arg("text"))
      .def("set", &ExperimentConfig::set, py::arg("key"), py::arg("value"))
      .def("get", &ExperimentConfig::get, py::arg("key"))
      .def("echo", &ExperimentConfig::echo)
      .def("validate", &ExperimentConfig::validate)
      .def("policies", &ExperimentConfig::policies)
      .def("seeds", &ExperimentConfig::seeds);

  m.def("policy_names", &known_policy_names);

  m.def(
      "generate_trace",
      [](const ExperimentConfig& cfg, std::uint64_t seed) {
        std::ostringstream os;
        write_trace(os, cfg.trace(seed));
        return os.str();
      },
      py::arg("config"), py::arg("seed"), "Trace of the configured workload as JSONL.");

  m.def(
      "run_json",
      [](const ExperimentConfig& cfg, const std::string& policy, std::uint64_t seed,
         const std::optional<std::string>& trace_jsonl) {
        const Trace t = trace_for(cfg, seed, trace_jsonl);
        const SimConfig sc = cfg.sim_config(policy, seed);
        py::gil_scoped_release nogil;
        SimReport r = run(sc, t);
        r.config_echo = cfg.echo();
        return report_to_json(r);
      },
      py::arg("config"), py::arg("policy"), py::arg("seed"), py::arg("trace_jsonl") = std::nullopt);

  m.def(
      "event_log",
      [](const ExperimentConfig& cfg, const std::string& policy, std::uint64_t seed) {
        SimConfig sc = cfg.sim_config(policy, seed);
        sc.log_events = true;
        Simulator sim(sc, cfg.trace(seed));
        sim.run();
        return event_log_string(sim.events());
      },
      py::arg("config"), py::arg("policy"), py::arg("seed"));

  m.def(
      "welch",
      [](const std::vector<double>& fresh, const std::vector<double>& ref) {
        const auto w = degradation_test(fresh, ref);
        return py::make_tuple(w.t, w.df, w.p_value);
      },
      py::arg("fresh"), py::arg("ref"), "One-sided Welch test; returns (t, df, p).");

  m.def("stage_mix_table", [](const std::string& report_json) {
    return stage_mix_table(report_from_json(report_json));
  });
  m.def("attainment_table", [](const std::string& report_json) {
    return attainment_table(report_from_json(report_json));
  });
}
