#pragma once

// Independent re-derivations used to check the library. Nothing here calls the
// library's own scoring, urgency, budget or statistics code.

#include <cstdint>
#include <span>
#include <vector>

#include "hexflow/engine.hpp"

namespace hexflow::oracle {

struct Welch {
  double t = 0.0;
  double df = 0.0;
  double p = 0.5;  // one-sided, H1: mean(fresh) > mean(ref)
};

// Regularized incomplete beta I_x(a, b) by continued fraction (modified Lentz).
double incomplete_beta(double a, double b, double x);
// Upper tail P(T > t) of Student's t with df degrees of freedom.
double student_t_upper(double t, double df);
Welch welch(std::span<const double> fresh, std::span<const double> ref);

// Instance a workload-balanced dispatcher must pick for this snapshot.
InstanceId wb_choice(const DispatchRecord& rec);
// Request an urgency queue must admit for this snapshot.
RequestId urgency_choice(const AdmissionRecord& rec);

// Sum of mean costs of every call projected after (stage_index, call_index),
// walking the template directly: a parallel stage counts as one call's cost,
// an iterative stage as max_iterations calls.
double projected_future_cost(const WorkflowTemplate& tpl, std::span<const InstanceProfile> cluster,
                             const EstimatorConfig& est, std::uint32_t stage_index, std::uint32_t call_index);
// Cost of one call at the stage's mean token counts, averaged over the cluster.
double stage_mean_cost(const StageTemplate& s, std::span<const InstanceProfile> cluster, const EstimatorConfig& est);

}  // namespace hexflow::oracle
