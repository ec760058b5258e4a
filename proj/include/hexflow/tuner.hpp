#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hexflow/core.hpp"
#include "hexflow/trace.hpp"

namespace hexflow {

struct SimConfig;

// {0.0, 0.1, ..., 1.0}
const std::vector<double>& alpha_grid();

// Cold start uses 0 (pure queue balancing) unless a tuned value was persisted.
double init_alpha(std::optional<double> persisted = std::nullopt);

struct WindowStats {
  std::uint32_t window_id = 0;
  std::vector<double> latencies;
  Seconds p95 = 0.0;
  std::size_t sample_count = 0;
};

// Closes a monitoring window, or returns nullopt when it holds fewer than
// min_samples completions and must be extended.
std::optional<WindowStats> close_window(std::uint32_t window_id, std::vector<double> latencies,
                                        std::size_t min_samples);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 0.5;
  bool degenerate = false;
};

// One-sided Welch two-sample t-test of H1: mean(new) > mean(ref).
WelchResult degradation_test(std::span<const double> fresh, std::span<const double> ref);

struct TuningResult {
  std::vector<double> alpha_grid;
  std::vector<std::optional<double>> p95;  // nullopt: replay failed
  double alpha_star = 0.0;
  bool any_succeeded = false;
};

// Argmin over the grid; ties go to the smaller alpha.
TuningResult select_alpha(std::span<const double> grid, std::span<const std::optional<double>> p95,
                          double current_alpha);

// Replays the window for every grid alpha (concurrently when `parallel`).
TuningResult retune(const Trace& window, const SimConfig& cfg, double current_alpha, bool parallel);

}  // namespace hexflow
