#pragma once

#include <string>
#include <vector>

#include "hexflow/metrics.hpp"

namespace hexflow {

std::string report_to_json(const SimReport& report);
// Inverse of report_to_json for the fields the report command reads.
SimReport report_from_json(const std::string& text);
SimReport load_report(const std::string& path);

// "scale,fraction" rows.
std::string attainment_csv(const SimReport& report);
// "id,tenant,kind,latency,ratio,status" rows.
std::string queries_csv(const SimReport& report);

// Writes <dir>/<stem>.json, <stem>.attainment.csv and <stem>.queries.csv.
void write_report_files(const SimReport& report, const std::string& dir, const std::string& stem);

std::string attainment_table(const SimReport& report);
// p95_scale of each report against the first, with % change.
std::string delta_table(const std::vector<SimReport>& reports);
// Per-stage share of dispatches landing on each instance, in percent.
std::string stage_mix_table(const SimReport& report);

// Share of `stage` dispatches placed on instances whose class is `cls`.
double stage_share(const SimReport& report, StageKind stage, const std::string& cls);

}  // namespace hexflow
