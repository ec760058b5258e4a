#include "hexflow/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace hexflow {

namespace {

const std::set<std::string>& fixed_keys() {
  static const std::set<std::string> keys = {
      "cluster.instances",
      "dispatch.policy",
      "dispatch.alpha",
      "dispatch.c_ref",
      "dispatch.q_ref",
      "dispatch.max_retries",
      "dispatch.queue_cost",
      "dispatch.vtc_client",
      "dispatch.warmup_queries",
      "estimator.mode",
      "estimator.ratio",
      "workflow.inter_stage_delay",
      "workload.rate_qps",
      "workload.utilization",
      "workload.schedule",
      "workload.duration",
      "workload.tenants",
      "workload.competing_fraction",
      "workload.trace",
      "slo.default_scale",
      "slo.grid_step",
      "slo.curve_max",
      "slo.max_scale",
      "tuner.enabled",
      "tuner.window_seconds",
      "tuner.min_samples",
      "tuner.p_threshold",
      "tuner.parallel",
      "tuner.state_file",
      "run.seeds",
      "run.policies",
      "run.output_dir",
      "run.log_events",
      "run.horizon",
  };
  return keys;
}

const std::set<std::string> kClassFields = {"prefill_rate", "decode_rate",  "batch_slots",
                                            "batch_slowdown", "timeout", "max_batch_tokens"};
const std::set<std::string> kStageFields = {"input_mean",  "input_sigma", "output_mean",
                                            "output_sigma", "parallelism", "calls",
                                            "max_iterations", "iter_a", "iter_b"};

bool valid_class_name(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

bool key_allowed(const std::string& key) {
  if (fixed_keys().contains(key)) return true;
  const auto parts = split(key, '.');
  if (parts.size() == 4 && parts[0] == "cluster" && parts[1] == "class") {
    return valid_class_name(parts[2]) && kClassFields.contains(parts[3]);
  }
  if (parts.size() == 3 && parts[0] == "workflow") {
    try {
      stage_from_string(parts[1]);
    } catch (const ConfigError&) {
      return false;
    }
    return kStageFields.contains(parts[2]);
  }
  return false;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* end = v.data() + v.size();
  auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const char* end = v.data() + v.size();
  auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

}  // namespace

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  auto& v = c.values_;
  v["cluster.instances"] = "fast,fast,mid,slow";
  auto add_class = [&](const std::string& name, double prefill, double decode) {
    const std::string p = "cluster.class." + name + ".";
    v[p + "prefill_rate"] = fmt(prefill);
    v[p + "decode_rate"] = fmt(decode);
    v[p + "batch_slots"] = "16";
    v[p + "batch_slowdown"] = "0.15";
    v[p + "timeout"] = "0";
    v[p + "max_batch_tokens"] = "0";
  };
  add_class("fast", 16000, 160);
  add_class("mid", 10000, 100);
  add_class("slow", 6000, 60);

  v["dispatch.policy"] = "wb_pq";
  v["dispatch.alpha"] = "0";
  v["dispatch.c_ref"] = "auto";
  v["dispatch.q_ref"] = "auto";
  v["dispatch.max_retries"] = "2";
  v["dispatch.queue_cost"] = "full";
  v["dispatch.vtc_client"] = "query";
  v["dispatch.warmup_queries"] = "20";
  v["estimator.mode"] = "stage_mean";
  v["estimator.ratio"] = "0.5";

  const WorkflowTemplate tpl = WorkflowTemplate::text_to_sql();
  v["workflow.inter_stage_delay"] = fmt(tpl.inter_stage_delay);
  auto add_stage = [&](const StageTemplate& s) {
    const std::string p = "workflow." + std::string(to_string(s.stage)) + ".";
    v[p + "input_mean"] = fmt(s.input.mean);
    v[p + "input_sigma"] = fmt(s.input.sigma);
    v[p + "output_mean"] = fmt(s.output.mean);
    v[p + "output_sigma"] = fmt(s.output.sigma);
    v[p + "parallelism"] = std::to_string(s.parallelism);
    v[p + "calls"] = std::to_string(s.calls);
    v[p + "max_iterations"] = std::to_string(s.max_iterations);
    v[p + "iter_a"] = fmt(s.iterations.a);
    v[p + "iter_b"] = fmt(s.iterations.b);
  };
  for (const auto& s : tpl.stages) add_stage(s);
  add_stage(tpl.single_shot);

  v["workload.rate_qps"] = "0.2";
  v["workload.utilization"] = "0";
  v["workload.schedule"] = "";
  v["workload.duration"] = "1000";
  v["workload.tenants"] = "0:1:4";
  v["workload.competing_fraction"] = "0";
  v["workload.trace"] = "";

  v["slo.default_scale"] = "4";
  v["slo.grid_step"] = "0.1";
  v["slo.curve_max"] = "10";
  v["slo.max_scale"] = "100";

  v["tuner.enabled"] = "false";
  v["tuner.window_seconds"] = "100";
  v["tuner.min_samples"] = "5";
  v["tuner.p_threshold"] = "0.01";
  v["tuner.parallel"] = "true";
  v["tuner.state_file"] = "";

  v["run.seeds"] = "0";
  v["run.policies"] = "wb_pq";
  v["run.output_dir"] = "out";
  v["run.log_events"] = "false";
  v["run.horizon"] = "auto";
  return c;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (!key_allowed(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
}

const std::string& ExperimentConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

double ExperimentConfig::get_double(const std::string& key) const { return parse_double(key, get(key)); }
long long ExperimentConfig::get_int(const std::string& key) const { return parse_int(key, get(key)); }

bool ExperimentConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& origin) {
  ExperimentConfig c = defaults();
  std::istringstream is(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(n) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    try {
      c.set(key, trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str(), path);
}

std::string ExperimentConfig::echo() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::vector<InstanceProfile> ExperimentConfig::cluster() const {
  std::vector<InstanceProfile> out;
  const auto names = split(get("cluster.instances"), ',');
  for (const auto& name : names) {
    if (!valid_class_name(name)) throw ConfigError("cluster.instances: bad class name '" + name + "'");
    const std::string p = "cluster.class." + name + ".";
    if (!has(p + "prefill_rate")) throw ConfigError("cluster.instances: class '" + name + "' is not defined");
    auto field = [&](const std::string& f, const std::string& fallback) {
      return has(p + f) ? get(p + f) : fallback;
    };
    InstanceProfile ip;
    ip.instance_id = static_cast<InstanceId>(out.size());
    ip.class_name = name;
    ip.prefill_rate = parse_double(p + "prefill_rate", get(p + "prefill_rate"));
    ip.decode_rate = parse_double(p + "decode_rate", field("decode_rate", ""));
    const long long slots = parse_int(p + "batch_slots", field("batch_slots", "1"));
    if (slots < 1) throw ConfigError(p + "batch_slots must be >= 1");
    ip.batch_slots = static_cast<std::uint32_t>(slots);
    ip.batch_slowdown = parse_double(p + "batch_slowdown", field("batch_slowdown", "0"));
    ip.timeout = parse_double(p + "timeout", field("timeout", "0"));
    const long long cap = parse_int(p + "max_batch_tokens", field("max_batch_tokens", "0"));
    if (cap < 0) throw ConfigError(p + "max_batch_tokens must be >= 0");
    ip.max_batch_tokens = static_cast<std::uint64_t>(cap);
    ip.validate();
    out.push_back(std::move(ip));
  }
  if (out.empty()) throw ConfigError("cluster.instances is empty");
  return out;
}

WorkflowTemplate ExperimentConfig::workflow() const {
  WorkflowTemplate tpl = WorkflowTemplate::text_to_sql();
  tpl.inter_stage_delay = get_double("workflow.inter_stage_delay");
  if (tpl.inter_stage_delay < 0.0) throw ConfigError("workflow.inter_stage_delay must be >= 0");
  auto load = [&](StageTemplate& s) {
    const std::string p = "workflow." + std::string(to_string(s.stage)) + ".";
    s.input.mean = get_double(p + "input_mean");
    s.input.sigma = get_double(p + "input_sigma");
    s.output.mean = get_double(p + "output_mean");
    s.output.sigma = get_double(p + "output_sigma");
    auto count = [&](const std::string& f) {
      const long long v = get_int(p + f);
      if (v < 0) throw ConfigError(p + f + " must be >= 0");
      return static_cast<std::uint32_t>(v);
    };
    s.parallelism = count("parallelism");
    s.calls = count("calls");
    s.max_iterations = count("max_iterations");
    s.iterations.a = get_double(p + "iter_a");
    s.iterations.b = get_double(p + "iter_b");
  };
  for (auto& s : tpl.stages) load(s);
  load(tpl.single_shot);
  tpl.validate();
  return tpl;
}

std::vector<std::uint64_t> ExperimentConfig::seeds() const {
  std::vector<std::uint64_t> out;
  for (const auto& s : split(get("run.seeds"), ',')) {
    const long long v = parse_int("run.seeds", s);
    if (v < 0) throw ConfigError("run.seeds must be non-negative");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  if (out.empty()) throw ConfigError("run.seeds is empty");
  return out;
}

std::vector<std::string> ExperimentConfig::policies() const {
  std::vector<std::string> out;
  for (const auto& p : split(get("run.policies"), ',')) {
    if (!p.empty()) out.push_back(policy_from_name(p).name);
  }
  if (out.empty()) throw ConfigError("run.policies is empty");
  return out;
}

SimConfig ExperimentConfig::sim_config(const std::string& policy, std::uint64_t seed) const {
  SimConfig cfg;
  cfg.cluster = cluster();
  cfg.workflow = workflow();
  cfg.policy = policy_from_name(policy);

  const std::string& c_ref = get("dispatch.c_ref");
  const std::string& q_ref = get("dispatch.q_ref");
  const bool c_auto = c_ref == "auto";
  const bool q_auto = q_ref == "auto";
  if (c_auto != q_auto) throw ConfigError("dispatch.c_ref and dispatch.q_ref must both be numbers or both 'auto'");
  cfg.auto_reference = c_auto;
  cfg.dispatch = DispatchConfig(cfg.policy.dispatch, get_double("dispatch.alpha"),
                                c_auto ? 1.0 : parse_double("dispatch.c_ref", c_ref),
                                q_auto ? 1.0 : parse_double("dispatch.q_ref", q_ref));
  const long long warm = get_int("dispatch.warmup_queries");
  if (warm < 1) throw ConfigError("dispatch.warmup_queries must be >= 1");
  cfg.warmup_queries = static_cast<std::size_t>(warm);
  const long long retries = get_int("dispatch.max_retries");
  if (retries < 0) throw ConfigError("dispatch.max_retries must be >= 0");
  cfg.max_retries = static_cast<std::uint32_t>(retries);
  cfg.queue_cost = queue_cost_from_string(get("dispatch.queue_cost"));
  const std::string& client = get("dispatch.vtc_client");
  if (client != "query" && client != "tenant") throw ConfigError("dispatch.vtc_client must be 'query' or 'tenant'");
  cfg.vtc_per_tenant = client == "tenant";

  cfg.estimator.mode = estimator_mode_from_string(get("estimator.mode"));
  cfg.estimator.ratio = get_double("estimator.ratio");
  cfg.workflow.fill_estimator(cfg.estimator);

  cfg.slo = trace_spec(seed).slo();
  cfg.slo.default_scale = get_double("slo.default_scale");
  if (!(cfg.slo.default_scale > 0.0)) throw ConfigError("slo.default_scale must be > 0");
  cfg.metrics.grid_step = get_double("slo.grid_step");
  cfg.metrics.curve_max = get_double("slo.curve_max");
  cfg.metrics.max_scale = get_double("slo.max_scale");
  if (!(cfg.metrics.grid_step > 0.0)) throw ConfigError("slo.grid_step must be > 0");

  cfg.tuner.enabled = get_bool("tuner.enabled");
  cfg.tuner.window_seconds = get_double("tuner.window_seconds");
  const long long min_samples = get_int("tuner.min_samples");
  if (min_samples < 1) throw ConfigError("tuner.min_samples must be >= 1");
  cfg.tuner.min_samples = static_cast<std::size_t>(min_samples);
  cfg.tuner.p_threshold = get_double("tuner.p_threshold");
  cfg.tuner.parallel = get_bool("tuner.parallel");

  cfg.seed = seed;
  cfg.log_events = get_bool("run.log_events");
  const std::string& horizon = get("run.horizon");
  if (horizon != "auto") cfg.horizon = parse_double("run.horizon", horizon);
  cfg.validate();
  return cfg;
}

TraceSpec ExperimentConfig::trace_spec(std::uint64_t seed) const {
  TraceSpec spec;
  spec.profile = workflow();
  spec.seed = seed;
  spec.duration = get_double("workload.duration");
  spec.competing_fraction = get_double("workload.competing_fraction");
  spec.rate_qps = get_double("workload.rate_qps");
  const double util = get_double("workload.utilization");
  if (util < 0.0) throw ConfigError("workload.utilization must be >= 0");
  if (util > 0.0) spec.rate_qps = qps_for_utilization(util, cluster(), spec.profile, spec.competing_fraction);
  const std::string& sched = get("workload.schedule");
  if (!sched.empty()) {
    for (const auto& seg : split(sched, ',')) {
      const auto parts = split(seg, ':');
      if (parts.size() != 2) throw ConfigError("workload.schedule: expected 't:rate', got '" + seg + "'");
      spec.schedule.push_back({parse_double("workload.schedule", parts[0]), parse_double("workload.schedule", parts[1])});
    }
  }
  spec.tenants.clear();
  for (const auto& t : split(get("workload.tenants"), ',')) {
    const auto parts = split(t, ':');
    if (parts.size() != 3) throw ConfigError("workload.tenants: expected 'id:weight:slo_scale', got '" + t + "'");
    const long long id = parse_int("workload.tenants", parts[0]);
    if (id < 0) throw ConfigError("workload.tenants: tenant id must be >= 0");
    spec.tenants.push_back({static_cast<TenantId>(id), parse_double("workload.tenants", parts[1]),
                            parse_double("workload.tenants", parts[2])});
  }
  spec.validate();
  return spec;
}

Trace ExperimentConfig::trace(std::uint64_t seed) const {
  const std::string& path = get("workload.trace");
  Trace t = path.empty() ? generate(trace_spec(seed)) : load_trace(path);
  fill_exclusive_times(t, sim_config("wb_pq", seed));
  return t;
}

void ExperimentConfig::validate() const {
  (void)seeds();
  for (const auto& p : policies()) (void)sim_config(p, seeds().front());
  const std::string& path = get("workload.trace");
  if (!path.empty()) {
    std::ifstream is(path);
    if (!is) throw ConfigError("workload.trace: file '" + path + "' does not exist");
  }
}

}  // namespace hexflow
