#pragma once

#include <optional>
#include <vector>

#include "hexflow/core.hpp"

namespace hexflow {

struct CallRecord {
  TokenCount input_tokens = 1;
  TokenCount output_tokens = 1;
  bool operator==(const CallRecord&) const = default;
};

struct StageRecord {
  StageKind stage = StageKind::SingleShot;
  std::vector<CallRecord> calls;
  bool operator==(const StageRecord&) const = default;
};

// One query as realized by the trace generator: arrival, tenant and every
// call's true token counts, including the realized number of correction rounds.
struct QueryRecord {
  QueryId query_id = 0;
  Seconds arrival_time = 0.0;
  TenantId tenant_id = 0;
  QueryKind kind = QueryKind::Workflow;
  std::vector<StageRecord> stages;
  std::optional<Seconds> base_exclusive_time;

  std::size_t total_calls() const {
    std::size_t n = 0;
    for (const auto& s : stages) n += s.calls.size();
    return n;
  }
  bool operator==(const QueryRecord&) const = default;
};

struct Trace {
  std::vector<QueryRecord> queries;
  bool operator==(const Trace&) const = default;
};

}  // namespace hexflow
