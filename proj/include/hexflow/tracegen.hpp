#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hexflow/core.hpp"
#include "hexflow/trace.hpp"
#include "hexflow/workflow.hpp"

namespace hexflow {

// Rate in effect from `start` until the next segment (or the end of the trace).
struct ArrivalSegment {
  Seconds start = 0.0;
  double rate_qps = 1.0;
};

struct TenantSpec {
  TenantId tenant_id = 0;
  double weight = 1.0;
  double slo_scale = 4.0;
};

struct TraceSpec {
  double rate_qps = 1.0;
  // Piecewise-constant schedule; overrides rate_qps when non-empty.
  std::vector<ArrivalSegment> schedule;
  Seconds duration = 1000.0;
  std::vector<TenantSpec> tenants{TenantSpec{}};
  WorkflowTemplate profile = WorkflowTemplate::text_to_sql();
  double competing_fraction = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  // Per-tenant deadline scales.
  SloSpec slo() const;
};

// Seeded, pure. Arrival times are strictly increasing.
Trace generate(const TraceSpec& spec);

// JSONL, one query per line.
void write_trace(std::ostream& os, const Trace& trace);
Trace read_trace(std::istream& is);
void save_trace(const Trace& trace, const std::string& path);
Trace load_trace(const std::string& path);

}  // namespace hexflow
