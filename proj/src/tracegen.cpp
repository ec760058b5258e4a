#include "hexflow/tracegen.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "hexflow/rng.hpp"

namespace hexflow {

using nlohmann::json;

void TraceSpec::validate() const {
  if (schedule.empty()) {
    if (!(rate_qps > 0.0)) throw ConfigError("workload.rate_qps must be > 0");
  } else {
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      if (!(schedule[i].rate_qps > 0.0)) throw ConfigError("workload.schedule: rates must be > 0");
      if (i > 0 && !(schedule[i].start > schedule[i - 1].start)) {
        throw ConfigError("workload.schedule: segment starts must be increasing");
      }
    }
    if (schedule.front().start != 0.0) throw ConfigError("workload.schedule: first segment must start at 0");
  }
  if (!(duration > 0.0)) throw ConfigError("workload.duration must be > 0");
  if (tenants.empty()) throw ConfigError("workload.tenants must not be empty");
  double total_weight = 0.0;
  for (const auto& t : tenants) {
    if (!(t.weight >= 0.0)) throw ConfigError("workload.tenants: weight must be >= 0");
    if (!(t.slo_scale > 0.0)) throw ConfigError("workload.tenants: slo_scale must be > 0");
    total_weight += t.weight;
  }
  if (!(total_weight > 0.0)) throw ConfigError("workload.tenants: weights sum to zero");
  if (!(competing_fraction >= 0.0 && competing_fraction < 1.0)) {
    throw ConfigError("workload.competing_fraction must be in [0, 1)");
  }
  profile.validate();
}

SloSpec TraceSpec::slo() const {
  SloSpec s;
  for (const auto& t : tenants) s.slo_scale[t.tenant_id] = t.slo_scale;
  return s;
}

namespace {

TokenCount draw_tokens(const TokenDist& d, std::mt19937_64& rng) {
  if (d.sigma <= 0.0) return static_cast<TokenCount>(std::max(1.0, std::round(d.mean)));
  std::lognormal_distribution<double> dist(std::log(d.mean) - 0.5 * d.sigma * d.sigma, d.sigma);
  return static_cast<TokenCount>(std::max(1.0, std::round(dist(rng))));
}

// Beta-binomial on {0..max_iterations}.
std::uint32_t draw_rounds(const StageTemplate& s, std::mt19937_64& rng) {
  std::gamma_distribution<double> ga(s.iterations.a, 1.0);
  std::gamma_distribution<double> gb(s.iterations.b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  const double p = (x + y) > 0.0 ? x / (x + y) : 0.5;
  std::binomial_distribution<std::uint32_t> bin(s.max_iterations, p);
  return std::min(bin(rng), s.max_iterations);
}

std::vector<Seconds> draw_arrivals(const TraceSpec& spec, std::mt19937_64& rng) {
  std::vector<ArrivalSegment> segs = spec.schedule;
  if (segs.empty()) segs.push_back({0.0, spec.rate_qps});
  std::vector<Seconds> out;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const Seconds end = i + 1 < segs.size() ? std::min(segs[i + 1].start, spec.duration) : spec.duration;
    std::exponential_distribution<double> gap(segs[i].rate_qps);
    Seconds t = segs[i].start;
    while (true) {
      t += gap(rng);
      if (t >= end) break;
      out.push_back(t);
    }
    if (end >= spec.duration) break;
  }
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i] <= out[i - 1]) out[i] = out[i - 1] + 1e-6;
  }
  return out;
}

}  // namespace

Trace generate(const TraceSpec& spec) {
  spec.validate();
  std::mt19937_64 arrivals_rng(substream_seed(spec.seed, "arrivals"));
  std::mt19937_64 tenants_rng(substream_seed(spec.seed, "tenants"));
  std::mt19937_64 kinds_rng(substream_seed(spec.seed, "kinds"));
  std::mt19937_64 tokens_rng(substream_seed(spec.seed, "tokens"));
  std::mt19937_64 iter_rng(substream_seed(spec.seed, "iterations"));

  std::vector<double> weights;
  for (const auto& t : spec.tenants) weights.push_back(t.weight);
  std::discrete_distribution<std::size_t> pick_tenant(weights.begin(), weights.end());
  std::bernoulli_distribution competing(spec.competing_fraction);

  Trace trace;
  const auto times = draw_arrivals(spec, arrivals_rng);
  trace.queries.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    QueryRecord q;
    q.query_id = static_cast<QueryId>(i);
    q.arrival_time = times[i];
    q.tenant_id = spec.tenants[pick_tenant(tenants_rng)].tenant_id;
    q.kind = competing(kinds_rng) ? QueryKind::SingleShot : QueryKind::Workflow;
    auto draw_call = [&](const StageTemplate& s) {
      CallRecord c;
      c.input_tokens = draw_tokens(s.input, tokens_rng);
      c.output_tokens = draw_tokens(s.output, tokens_rng);
      return c;
    };
    if (q.kind == QueryKind::SingleShot) {
      q.stages.push_back(StageRecord{StageKind::SingleShot, {draw_call(spec.profile.single_shot)}});
    } else {
      for (const auto& s : spec.profile.stages) {
        StageRecord rec{s.stage, {}};
        std::uint32_t n = s.calls;
        if (s.parallel()) n = s.parallelism;
        if (s.iterative()) n = draw_rounds(s, iter_rng);
        for (std::uint32_t k = 0; k < n; ++k) rec.calls.push_back(draw_call(s));
        q.stages.push_back(std::move(rec));
      }
    }
    trace.queries.push_back(std::move(q));
  }
  return trace;
}

void write_trace(std::ostream& os, const Trace& trace) {
  for (const auto& q : trace.queries) {
    json j;
    j["query_id"] = q.query_id;
    j["arrival_time"] = q.arrival_time;
    j["tenant_id"] = q.tenant_id;
    j["kind"] = std::string(to_string(q.kind));
    json stages = json::array();
    for (const auto& s : q.stages) {
      json calls = json::array();
      for (const auto& c : s.calls) calls.push_back({{"input_tokens", c.input_tokens}, {"output_tokens", c.output_tokens}});
      stages.push_back({{"stage", std::string(to_string(s.stage))}, {"calls", std::move(calls)}});
    }
    j["stages"] = std::move(stages);
    if (q.base_exclusive_time) j["base_exclusive_time"] = *q.base_exclusive_time;
    os << j.dump() << '\n';
  }
}

namespace {

const json& field(const json& obj, const char* name, std::size_t line) {
  if (!obj.is_object() || !obj.contains(name)) {
    throw ConfigError("trace line " + std::to_string(line) + ": missing field '" + name + "'");
  }
  return obj.at(name);
}

template <class T>
T number(const json& obj, const char* name, std::size_t line) {
  const json& v = field(obj, name, line);
  if (!v.is_number()) throw ConfigError("trace line " + std::to_string(line) + ": field '" + name + "' is not a number");
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_unsigned()) {
      throw ConfigError("trace line " + std::to_string(line) + ": field '" + name + "' must be a non-negative integer");
    }
  }
  return v.get<T>();
}

}  // namespace

Trace read_trace(std::istream& is) {
  Trace trace;
  std::string text;
  std::size_t line = 0;
  while (std::getline(is, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError("trace line " + std::to_string(line) + ": " + e.what());
    }
    QueryRecord q;
    try {
      q.query_id = number<QueryId>(j, "query_id", line);
      q.arrival_time = number<double>(j, "arrival_time", line);
      q.tenant_id = number<TenantId>(j, "tenant_id", line);
      q.kind = query_kind_from_string(field(j, "kind", line).get<std::string>());
      const json& stages = field(j, "stages", line);
      if (!stages.is_array()) throw ConfigError("trace line " + std::to_string(line) + ": 'stages' must be an array");
      for (const auto& s : stages) {
        StageRecord sr;
        sr.stage = stage_from_string(field(s, "stage", line).get<std::string>());
        const json& calls = field(s, "calls", line);
        if (!calls.is_array()) throw ConfigError("trace line " + std::to_string(line) + ": 'calls' must be an array");
        for (const auto& c : calls) {
          CallRecord cr;
          cr.input_tokens = number<TokenCount>(c, "input_tokens", line);
          cr.output_tokens = number<TokenCount>(c, "output_tokens", line);
          if (cr.input_tokens < 1 || cr.output_tokens < 1) {
            throw ConfigError("trace line " + std::to_string(line) + ": token counts must be >= 1");
          }
          sr.calls.push_back(cr);
        }
        q.stages.push_back(std::move(sr));
      }
      if (j.contains("base_exclusive_time") && !j["base_exclusive_time"].is_null()) {
        q.base_exclusive_time = number<double>(j, "base_exclusive_time", line);
      }
    } catch (const json::exception& e) {
      throw ConfigError("trace line " + std::to_string(line) + ": " + e.what());
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      if (msg.rfind("trace line", 0) == 0) throw;
      throw ConfigError("trace line " + std::to_string(line) + ": " + msg);
    }
    if (!trace.queries.empty() && !(q.arrival_time > trace.queries.back().arrival_time)) {
      throw ConfigError("trace line " + std::to_string(line) + ": arrival_time must be strictly increasing");
    }
    trace.queries.push_back(std::move(q));
  }
  return trace;
}

void save_trace(const Trace& trace, const std::string& path) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write trace file " + path);
  write_trace(os, trace);
  if (!os) throw ConfigError("error writing trace file " + path);
}

Trace load_trace(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read trace file " + path);
  return read_trace(is);
}

}  // namespace hexflow
