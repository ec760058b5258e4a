#include "hexflow/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

namespace hexflow {

using nlohmann::json;

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_inf(const json& v) {
  return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
}

JobStatus status_from_string(const std::string& s) {
  for (auto st : {JobStatus::Pending, JobStatus::Running, JobStatus::Done, JobStatus::SloMissed, JobStatus::Failed}) {
    if (to_string(st) == s) return st;
  }
  throw ConfigError("unknown job status '" + s + "'");
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string num(double v) {
  if (!std::isfinite(v)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + p.string());
  os << content;
}

}  // namespace

std::string report_to_json(const SimReport& r) {
  json j;
  j["policy"] = r.policy;
  j["seed"] = r.seed;
  j["p95_scale"] = r.p95.scale;
  j["p95_attained"] = r.p95.attained;
  j["throughput"] = r.throughput;
  j["makespan"] = r.makespan;
  j["experiment_length"] = r.experiment_length;
  j["jain_index"] = r.jain_index ? json(*r.jain_index) : json(nullptr);
  json tenants = json::object();
  for (const auto& [t, a] : r.tenant_attainment) tenants[std::to_string(t)] = a;
  j["tenant_attainment"] = tenants;
  json curve = json::array();
  for (const auto& [s, f] : r.attainment_curve) curve.push_back({s, f});
  j["attainment_curve"] = curve;
  j["final_alpha"] = r.final_alpha;
  j["c_ref"] = r.c_ref;
  j["q_ref"] = r.q_ref;
  j["truncated"] = r.truncated;
  j["events"] = r.events;
  json tuner = json::array();
  for (const auto& d : r.tuner) {
    json grid = json::array();
    for (double v : d.grid_p95) grid.push_back(finite_or_null(v));
    tuner.push_back({{"window_id", d.window_id},
                     {"time", d.time},
                     {"samples", d.samples},
                     {"p95", d.p95},
                     {"p_value", d.p_value},
                     {"triggered", d.triggered},
                     {"alpha_before", d.alpha_before},
                     {"alpha_after", d.alpha_after},
                     {"grid_p95", grid}});
  }
  j["tuner"] = tuner;
  json mix = json::object();
  for (int s = 0; s < kNumStageKinds; ++s) {
    mix[std::string(to_string(static_cast<StageKind>(s)))] = r.stage_mix[s];
  }
  j["stage_mix"] = mix;
  j["instance_classes"] = r.instance_classes;
  json queries = json::array();
  for (const auto& q : r.queries) {
    queries.push_back({{"query_id", q.query_id},
                       {"tenant_id", q.tenant_id},
                       {"kind", std::string(to_string(q.kind))},
                       {"status", std::string(to_string(q.status))},
                       {"arrival_time", q.arrival_time},
                       {"finish_time", q.finish_time},
                       {"latency", finite_or_null(q.latency)},
                       {"exclusive_time", q.exclusive_time},
                       {"deadline", q.deadline},
                       {"calls", q.calls}});
  }
  j["queries"] = queries;
  j["config"] = r.config_echo;
  return j.dump(1) + "\n";
}

SimReport report_from_json(const std::string& text) {
  SimReport r;
  try {
    const json j = json::parse(text);
    r.policy = j.at("policy").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.p95.scale = j.at("p95_scale").get<double>();
    r.p95.attained = j.at("p95_attained").get<bool>();
    r.throughput = j.at("throughput").get<double>();
    r.makespan = j.at("makespan").get<double>();
    r.experiment_length = j.value("experiment_length", 0.0);
    if (!j.at("jain_index").is_null()) r.jain_index = j.at("jain_index").get<double>();
    for (const auto& [k, v] : j.at("tenant_attainment").items()) {
      r.tenant_attainment[static_cast<TenantId>(std::stoul(k))] = v.get<double>();
    }
    for (const auto& p : j.at("attainment_curve")) r.attainment_curve.emplace_back(p[0].get<double>(), p[1].get<double>());
    r.final_alpha = j.value("final_alpha", 0.0);
    r.c_ref = j.value("c_ref", 0.0);
    r.q_ref = j.value("q_ref", 0.0);
    r.truncated = j.value("truncated", false);
    r.events = j.value("events", std::uint64_t{0});
    for (const auto& d : j.value("tuner", json::array())) {
      TunerDecision t;
      t.window_id = d.at("window_id").get<std::uint32_t>();
      t.time = d.at("time").get<double>();
      t.samples = d.at("samples").get<std::size_t>();
      t.p95 = d.at("p95").get<double>();
      t.p_value = d.at("p_value").get<double>();
      t.triggered = d.at("triggered").get<bool>();
      t.alpha_before = d.at("alpha_before").get<double>();
      t.alpha_after = d.at("alpha_after").get<double>();
      for (const auto& v : d.at("grid_p95")) t.grid_p95.push_back(number_or_inf(v));
      r.tuner.push_back(std::move(t));
    }
    r.instance_classes = j.at("instance_classes").get<std::vector<std::string>>();
    const json& mix = j.at("stage_mix");
    for (int s = 0; s < kNumStageKinds; ++s) {
      const std::string name(to_string(static_cast<StageKind>(s)));
      if (mix.contains(name)) r.stage_mix[s] = mix.at(name).get<std::vector<std::uint64_t>>();
    }
    for (const auto& q : j.at("queries")) {
      QueryOutcome o;
      o.query_id = q.at("query_id").get<QueryId>();
      o.tenant_id = q.at("tenant_id").get<TenantId>();
      o.kind = query_kind_from_string(q.at("kind").get<std::string>());
      o.status = status_from_string(q.at("status").get<std::string>());
      o.arrival_time = q.at("arrival_time").get<double>();
      o.finish_time = q.at("finish_time").get<double>();
      o.latency = number_or_inf(q.at("latency"));
      o.exclusive_time = q.at("exclusive_time").get<double>();
      o.deadline = q.at("deadline").get<double>();
      o.calls = q.at("calls").get<std::uint32_t>();
      r.queries.push_back(o);
    }
    r.config_echo = j.value("config", std::string());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
  return r;
}

SimReport load_report(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read report file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return report_from_json(ss.str());
}

std::string attainment_csv(const SimReport& r) {
  std::string out = "scale,fraction\n";
  for (const auto& [s, f] : r.attainment_curve) out += num(s) + "," + num(f) + "\n";
  return out;
}

std::string queries_csv(const SimReport& r) {
  std::string out = "id,tenant,kind,latency,ratio,status\n";
  for (const auto& q : r.queries) {
    out += std::to_string(q.query_id) + "," + std::to_string(q.tenant_id) + "," + std::string(to_string(q.kind)) + "," +
           num(q.latency) + "," + num(q.ratio()) + "," + std::string(to_string(q.status)) + "\n";
  }
  return out;
}

void write_report_files(const SimReport& report, const std::string& dir, const std::string& stem) {
  const std::filesystem::path base(dir);
  std::filesystem::create_directories(base);
  write_file(base / (stem + ".json"), report_to_json(report));
  write_file(base / (stem + ".attainment.csv"), attainment_csv(report));
  write_file(base / (stem + ".queries.csv"), queries_csv(report));
}

std::string attainment_table(const SimReport& r) {
  std::ostringstream os;
  os << "policy " << r.policy << "  seed " << r.seed << "\n";
  os << "  scale  attainment\n";
  for (const auto& [s, f] : r.attainment_curve) {
    // Whole and half scales keep the table readable.
    const double twice = s * 2.0;
    if (std::abs(twice - std::round(twice)) > 1e-9) continue;
    os << "  " << fixed(s, 1) << "    " << fixed(f, 4) << "\n";
  }
  os << "  p95_scale " << (r.p95.attained ? fixed(r.p95.scale, 1) : "> " + fixed(r.p95.scale, 1))
     << "  throughput " << fixed(r.throughput, 4) << " q/s";
  if (r.jain_index) os << "  jain " << fixed(*r.jain_index, 4);
  os << "\n";
  return os.str();
}

std::string delta_table(const std::vector<SimReport>& reports) {
  std::ostringstream os;
  if (reports.empty()) return {};
  const double base = reports.front().p95.scale;
  os << "policy        seed  p95_scale  delta_vs_first\n";
  for (const auto& r : reports) {
    char line[160];
    const double delta = base > 0.0 ? (r.p95.scale - base) / base * 100.0 : 0.0;
    std::snprintf(line, sizeof(line), "%-12s  %4llu  %9.1f  %+13.1f%%\n", r.policy.c_str(),
                  static_cast<unsigned long long>(r.seed), r.p95.scale, delta);
    os << line;
  }
  return os.str();
}

std::string stage_mix_table(const SimReport& r) {
  std::ostringstream os;
  const std::size_t n = r.instance_classes.size();
  os << "stage                ";
  for (std::size_t i = 0; i < n; ++i) {
    char head[32];
    std::snprintf(head, sizeof(head), "%10s", (std::to_string(i) + ":" + r.instance_classes[i]).c_str());
    os << head;
  }
  os << "\n";
  for (int s = 0; s < kNumStageKinds; ++s) {
    const auto& row = r.stage_mix[s];
    std::uint64_t total = 0;
    for (auto c : row) total += c;
    if (total == 0) continue;
    char name[32];
    std::snprintf(name, sizeof(name), "%-21s", std::string(to_string(static_cast<StageKind>(s))).c_str());
    os << name;
    for (std::size_t i = 0; i < n; ++i) {
      const double pct = i < row.size() ? 100.0 * static_cast<double>(row[i]) / static_cast<double>(total) : 0.0;
      char cell[32];
      std::snprintf(cell, sizeof(cell), "%9.1f%%", pct);
      os << cell;
    }
    os << "\n";
  }
  return os.str();
}

double stage_share(const SimReport& r, StageKind stage, const std::string& cls) {
  const auto& row = r.stage_mix[static_cast<int>(stage)];
  std::uint64_t total = 0;
  std::uint64_t hit = 0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    total += row[i];
    if (i < r.instance_classes.size() && r.instance_classes[i] == cls) hit += row[i];
  }
  return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

}  // namespace hexflow
