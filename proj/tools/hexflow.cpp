#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "hexflow/config.hpp"
#include "hexflow/engine.hpp"
#include "hexflow/report.hpp"
#include "hexflow/tracegen.hpp"
#include "hexflow/tuner.hpp"

namespace {

using namespace hexflow;

constexpr int kExitConfig = 1;
constexpr int kExitUnknownPolicy = 2;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::string out_dir;
  std::string trace_path;
  std::optional<double> alpha;
  std::string c_ref;
  std::string q_ref;
  std::optional<int> max_retries;
  bool log_events = false;
};

std::string num_str(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::uint64_t env_seed() {
  if (const char* s = std::getenv("HEXFLOW_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw ConfigError(std::string("HEXFLOW_SEED is not an integer: '") + s + "'");
    }
  }
  return 0;
}

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "Experiment config file");
  cmd->add_option("--set", o.overrides, "Override a config key (key=value), repeatable");
  cmd->add_option("--seed", o.seed, "Single seed (default: $HEXFLOW_SEED or run.seeds)");
  cmd->add_option("--seeds", o.seeds, "Comma-separated seeds");
  cmd->add_option("--out", o.out_dir, "Output directory");
  cmd->add_option("--trace", o.trace_path, "Trace JSONL to replay instead of generating");
  cmd->add_option("--alpha", o.alpha, "Dispatch alpha in [0, 1]");
  cmd->add_option("--c-ref", o.c_ref, "C_ref in seconds, or 'auto'");
  cmd->add_option("--q-ref", o.q_ref, "Q_ref in seconds, or 'auto'");
  cmd->add_option("--max-retries", o.max_retries, "Timeout re-dispatch attempts");
  cmd->add_flag("--log-events", o.log_events, "Write the JSONL event log of every run");
}

ExperimentConfig resolve(const CommonOpts& o) {
  ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig::defaults() : ExperimentConfig::load(o.config_path);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) {
    cfg.set("run.seeds", std::to_string(*o.seed));
  } else if (!o.seeds.empty()) {
    cfg.set("run.seeds", o.seeds);
  } else if (std::getenv("HEXFLOW_SEED") != nullptr) {
    cfg.set("run.seeds", std::to_string(env_seed()));
  }
  if (!o.out_dir.empty()) cfg.set("run.output_dir", o.out_dir);
  if (!o.trace_path.empty()) cfg.set("workload.trace", o.trace_path);
  if (o.alpha) cfg.set("dispatch.alpha", num_str(*o.alpha));
  if (!o.c_ref.empty()) cfg.set("dispatch.c_ref", o.c_ref);
  if (!o.q_ref.empty()) cfg.set("dispatch.q_ref", o.q_ref);
  if (o.max_retries) cfg.set("dispatch.max_retries", std::to_string(*o.max_retries));
  if (o.log_events) cfg.set("run.log_events", "true");
  return cfg;
}

// Rejects unknown policy names before any work starts.
std::optional<std::string> unknown_policy(const std::vector<std::string>& names) {
  for (const auto& n : names) {
    try {
      policy_from_name(n);
    } catch (const ConfigError&) {
      return n;
    }
  }
  return std::nullopt;
}

std::optional<double> read_state_alpha(const std::string& path) {
  if (path.empty()) return std::nullopt;
  std::ifstream is(path);
  double a = 0.0;
  if (is >> a) return a;
  return std::nullopt;
}

void write_state_alpha(const std::string& path, double alpha) {
  if (path.empty()) return;
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write tuner state file " + path);
  os << alpha << "\n";
}

struct RunResult {
  SimReport report;
  std::vector<EventRecord> events;
};

RunResult run_one(ExperimentConfig cfg, const Trace& trace, const std::string& policy, std::uint64_t seed) {
  cfg.set("dispatch.policy", policy);
  cfg.set("run.policies", policy);
  cfg.set("run.seeds", std::to_string(seed));
  if (cfg.get_bool("tuner.enabled")) {
    if (auto a = read_state_alpha(cfg.get("tuner.state_file"))) {
      cfg.set("dispatch.alpha", num_str(init_alpha(a)));
    }
  }
  SimConfig sim_cfg = cfg.sim_config(policy, seed);
  Simulator sim(sim_cfg, trace);
  RunResult out;
  out.report = sim.run();
  out.report.config_echo = cfg.echo();
  out.events = sim.events();
  if (cfg.get_bool("tuner.enabled")) write_state_alpha(cfg.get("tuner.state_file"), out.report.final_alpha);
  return out;
}

std::string stem_for(const std::string& policy, std::uint64_t seed, const std::string& extra = {}) {
  return policy + extra + "_seed" + std::to_string(seed);
}

void persist(const ExperimentConfig& cfg, const RunResult& r, const std::string& stem) {
  const std::string dir = cfg.get("run.output_dir");
  write_report_files(r.report, dir, stem);
  if (cfg.get_bool("run.log_events")) {
    std::ofstream os(std::filesystem::path(dir) / (stem + ".events.jsonl"), std::ios::binary);
    write_event_log(os, r.events);
  }
}

std::pair<double, double> mean_sd(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  const double sd = xs.size() > 1 ? std::sqrt(v / static_cast<double>(xs.size() - 1)) : 0.0;
  return {m, sd};
}

std::string fmt(double v, const char* spec = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

int cmd_gen_trace(const std::string& spec_path, const std::string& out, std::optional<std::uint64_t> seed,
                  const std::vector<std::string>& overrides) {
  CommonOpts o;
  o.config_path = spec_path;
  o.overrides = overrides;
  ExperimentConfig cfg = resolve(o);
  const std::uint64_t s = seed ? *seed : env_seed();
  cfg.set("workload.trace", "");
  Trace t = generate(cfg.trace_spec(s));
  fill_exclusive_times(t, cfg.sim_config("wb_pq", s));
  save_trace(t, out);
  std::cout << "wrote " << t.queries.size() << " queries to " << out << "\n";
  return 0;
}

int cmd_run(const CommonOpts& o, const std::string& policy_flag, const std::optional<bool>& tuner,
            const std::optional<int>& min_samples, const std::optional<double>& p_threshold,
            const std::optional<double>& window) {
  ExperimentConfig cfg = resolve(o);
  if (!policy_flag.empty()) cfg.set("dispatch.policy", policy_flag);
  if (tuner) cfg.set("tuner.enabled", *tuner ? "true" : "false");
  if (min_samples) cfg.set("tuner.min_samples", std::to_string(*min_samples));
  if (p_threshold) cfg.set("tuner.p_threshold", num_str(*p_threshold));
  if (window) cfg.set("tuner.window_seconds", num_str(*window));
  const std::string policy = cfg.get("dispatch.policy");
  if (auto bad = unknown_policy({policy})) {
    std::cerr << "error: unknown policy '" << *bad << "'\n";
    return kExitUnknownPolicy;
  }
  const auto seeds = cfg.seeds();
  std::vector<double> p95s;
  std::vector<double> tputs;
  for (auto seed : seeds) {
    const Trace trace = cfg.trace(seed);
    const RunResult r = run_one(cfg, trace, policy, seed);
    persist(cfg, r, stem_for(r.report.policy, seed));
    std::cout << attainment_table(r.report);
    p95s.push_back(r.report.p95.scale);
    tputs.push_back(r.report.throughput);
  }
  if (seeds.size() > 1) {
    const auto [pm, ps] = mean_sd(p95s);
    const auto [tm, ts] = mean_sd(tputs);
    std::cout << "summary over " << seeds.size() << " seeds: p95_scale " << fmt(pm, "%.2f") << " +/- "
              << fmt(ps, "%.2f") << "  throughput " << fmt(tm) << " +/- " << fmt(ts) << "\n";
    std::ofstream os(std::filesystem::path(cfg.get("run.output_dir")) / "summary.csv");
    os << "metric,mean,sd\n";
    os << "p95_scale," << pm << "," << ps << "\n";
    os << "throughput," << tm << "," << ts << "\n";
  }
  return 0;
}

int cmd_sweep(const CommonOpts& o, const std::string& policies_flag, bool ablations, bool alpha_grid_flag) {
  ExperimentConfig cfg = resolve(o);
  std::vector<std::string> policies;
  if (ablations) {
    policies = {"wb_pq", "rr_pq", "wb_fcfs", "rr_fcfs"};
  } else if (alpha_grid_flag) {
    policies = {"wb_pq"};
  } else {
    policies = split(policies_flag.empty() ? cfg.get("run.policies") : policies_flag, ',');
  }
  if (auto bad = unknown_policy(policies)) {
    std::cerr << "error: unknown policy '" << *bad << "'\n";
    return kExitUnknownPolicy;
  }
  if (!alpha_grid_flag && policies.size() < 2) throw ConfigError("sweep needs at least two policies");
  std::vector<double> alphas = {cfg.get_double("dispatch.alpha")};
  if (alpha_grid_flag) {
    alphas = alpha_grid();
    cfg.set("tuner.enabled", "false");
  }

  std::string table = "policy,alpha,seed,p95_scale,p95_attained,throughput,jain\n";
  for (auto seed : cfg.seeds()) {
    const Trace trace = cfg.trace(seed);  // shared by every row of this seed
    for (const auto& p : policies) {
      for (double a : alphas) {
        ExperimentConfig c = cfg;
        c.set("dispatch.alpha", num_str(a));
        const RunResult r = run_one(c, trace, p, seed);
        const std::string extra = alpha_grid_flag ? "_a" + fmt(a, "%.1f") : "";
        persist(c, r, stem_for(r.report.policy, seed, extra));
        table += r.report.policy + "," + fmt(a, "%.1f") + "," + std::to_string(seed) + "," +
                 fmt(r.report.p95.scale, "%.1f") + "," + (r.report.p95.attained ? "1" : "0") + "," +
                 fmt(r.report.throughput, "%.6f") + "," +
                 (r.report.jain_index ? fmt(*r.report.jain_index, "%.6f") : std::string()) + "\n";
      }
    }
  }
  const std::filesystem::path dir(cfg.get("run.output_dir"));
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "sweep.csv") << table;
  std::cout << table;
  return 0;
}

int cmd_tune_study(const CommonOpts& o, const std::optional<int>& min_samples,
                   const std::optional<double>& p_threshold, const std::optional<double>& window) {
  ExperimentConfig cfg = resolve(o);
  cfg.set("tuner.enabled", "true");
  if (min_samples) cfg.set("tuner.min_samples", std::to_string(*min_samples));
  if (p_threshold) cfg.set("tuner.p_threshold", num_str(*p_threshold));
  if (window) cfg.set("tuner.window_seconds", num_str(*window));
  const std::string policy = cfg.get("dispatch.policy");
  if (auto bad = unknown_policy({policy})) {
    std::cerr << "error: unknown policy '" << *bad << "'\n";
    return kExitUnknownPolicy;
  }
  for (auto seed : cfg.seeds()) {
    const Trace trace = cfg.trace(seed);
    const RunResult r = run_one(cfg, trace, policy, seed);
    persist(cfg, r, stem_for(r.report.policy, seed, "_tuned"));
    std::cout << "seed " << seed << ": " << r.report.tuner.size() << " windows, final alpha "
              << fmt(r.report.final_alpha, "%.1f") << ", p95_scale " << fmt(r.report.p95.scale, "%.1f") << "\n";
    std::cout << "  window      time  samples       p95   p_value  triggered  alpha\n";
    for (const auto& d : r.report.tuner) {
      char line[160];
      std::snprintf(line, sizeof(line), "  %6u  %8.1f  %7zu  %8.2f  %8.2e  %9s  %.1f -> %.1f\n", d.window_id, d.time,
                    d.samples, d.p95, d.p_value, d.triggered ? "yes" : "no", d.alpha_before, d.alpha_after);
      std::cout << line;
    }
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& files, bool stage_mix) {
  std::vector<SimReport> reports;
  for (const auto& f : files) reports.push_back(load_report(f));
  for (const auto& r : reports) {
    std::cout << attainment_table(r);
    if (stage_mix) std::cout << stage_mix_table(r);
    std::cout << "\n";
  }
  if (reports.size() > 1) std::cout << delta_table(reports);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hexflow: two-level scheduling simulator for agentic LLM workflows"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-trace", "Generate a workload trace (JSONL)");
  std::string gen_spec;
  std::string gen_out;
  std::optional<std::uint64_t> gen_seed;
  std::vector<std::string> gen_overrides;
  gen->add_option("--spec", gen_spec, "Config file holding the workload section")->required();
  gen->add_option("--out", gen_out, "Output trace path")->required();
  gen->add_option("--seed", gen_seed, "Seed (default: $HEXFLOW_SEED or 0)");
  gen->add_option("--set", gen_overrides, "Override a config key (key=value)");

  auto* run = app.add_subcommand("run", "Run one policy over one or more seeds");
  CommonOpts run_opts;
  add_common(run, run_opts);
  std::string run_policy;
  std::optional<bool> run_tuner;
  std::optional<int> run_min_samples;
  std::optional<double> run_p_threshold;
  std::optional<double> run_window;
  run->add_option("--policy", run_policy, "Policy name");
  run->add_option("--tuner", run_tuner, "Enable online alpha tuning (true/false)");
  run->add_option("--min-samples", run_min_samples, "Tuner minimum completions per window");
  run->add_option("--p-threshold", run_p_threshold, "Tuner trigger threshold");
  run->add_option("--window-seconds", run_window, "Tuner window length");

  auto* sweep = app.add_subcommand("sweep", "Compare policies on shared traces");
  CommonOpts sweep_opts;
  add_common(sweep, sweep_opts);
  std::string sweep_policies;
  bool sweep_ablations = false;
  bool sweep_alpha_grid = false;
  sweep->add_option("--policies", sweep_policies, "Comma-separated policy names");
  sweep->add_flag("--ablations", sweep_ablations, "Run {wb_pq, rr_pq, wb_fcfs, rr_fcfs}");
  sweep->add_flag("--alpha-grid", sweep_alpha_grid, "Run wb_pq over alpha in {0.0, ..., 1.0} with tuning off");

  auto* tune = app.add_subcommand("tune-study", "Run with online alpha tuning and print its decisions");
  CommonOpts tune_opts;
  add_common(tune, tune_opts);
  std::optional<int> tune_min_samples;
  std::optional<double> tune_p_threshold;
  std::optional<double> tune_window;
  tune->add_option("--min-samples", tune_min_samples, "Minimum completions per window");
  tune->add_option("--p-threshold", tune_p_threshold, "Trigger threshold");
  tune->add_option("--window-seconds", tune_window, "Window length");

  auto* report = app.add_subcommand("report", "Summarize report JSON files");
  std::vector<std::string> report_files;
  bool report_stage_mix = false;
  report->add_option("files", report_files, "Report JSON files")->required();
  report->add_flag("--stage-mix", report_stage_mix, "Print per-stage dispatch shares per instance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) return cmd_gen_trace(gen_spec, gen_out, gen_seed, gen_overrides);
    if (*run) return cmd_run(run_opts, run_policy, run_tuner, run_min_samples, run_p_threshold, run_window);
    if (*sweep) return cmd_sweep(sweep_opts, sweep_policies, sweep_ablations, sweep_alpha_grid);
    if (*tune) return cmd_tune_study(tune_opts, tune_min_samples, tune_p_threshold, tune_window);
    if (*report) return cmd_report(report_files, report_stage_mix);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
