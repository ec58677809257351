#pragma once

#include <cstddef>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddlqr/io.hpp"
#include "ddlqr/lti.hpp"
#include "ddlqr/matrix.hpp"
#include "ddlqr/synthesis.hpp"

namespace ddlqr {

enum class PlantKind { Benchmark, Random, Custom };

struct PlantConfig {
  PlantKind kind = PlantKind::Benchmark;
  std::size_t n = 3;         // Random only
  std::size_t m = 1;         // Random only
  double entry_std = 1.0;    // Random: entries of A and B ~ N(0, entry_std²)
  std::optional<LtiSystem> custom;
};

/// The plant a config describes. Random plants are drawn from `seed`.
LtiSystem make_plant(const PlantConfig& plant, std::uint64_t seed);

/// λ and γ grid {0, 1, …, 10, 20, 30, 40, 50, 100} × 10⁻².
std::vector<double> coefficient_grid();

struct ExperimentConfig {
  PlantConfig plant;
  std::vector<std::size_t> horizons{10};
  std::vector<double> sigma_w{0.1};
  std::vector<double> lambda_grid = coefficient_grid();
  std::vector<double> gamma_grid = coefficient_grid();
  std::size_t trials = 100;
  std::uint64_t master_seed = 1;
  double q_scale = 1.0;     // Q = q_scale·I
  double r_scale = 1e-3;    // R = r_scale·I
  double sigma_x = 1.0;
  double input_std = 1.0;
  /// Also sweep the mixed objective over lambda_grid × gamma_grid.
  bool mixed = false;
  /// Example 2: number of random systems and the coefficient interval.
  std::size_t systems = 200;
  double coefficient_lo = 0.0;
  double coefficient_hi = 1.0;
  /// 0 picks std::thread::hardware_concurrency().
  std::size_t workers = 0;
  SynthesisOptions synthesis{};

  /// Throws ConfigInvalid for empty grids, zero trials, negative values.
  void validate() const;
};

struct TrialOutcome {
  std::size_t trial = 0;
  std::string method;  // "I", "II" or "mixed"
  double lambda = 0.0;
  double gamma = 0.0;
  std::optional<Matrix> k;
  bool stabilizing = false;
  double gap = INFINITY;  // E; +∞ unless stabilizing
  std::string status;     // solver status or error code name
  double wall_seconds = 0.0;
};

struct Summary {
  std::size_t count = 0;
  std::size_t stabilizing = 0;
  double s = 0.0;             // percentage in [0, 100]
  double m = INFINITY;        // median E, +∞ counts non-stabilizing trials
  double q1 = INFINITY;
  double q3 = INFINITY;
  std::size_t solver_failures = 0;

  /// False when the median is infinite ("NR").
  bool median_reported() const { return std::isfinite(m); }
};

/// Throws EmptyInput for an empty span.
Summary summarize(std::span<const TrialOutcome> outcomes);

struct CurvePoint {
  std::string method;
  double lambda = 0.0;
  double gamma = 0.0;
  std::size_t horizon = 0;
  double sigma_w = 0.0;
  Summary summary;
};

/// Best coefficients of one (T, σ_w) cell: S maximized and M minimized
/// independently over each method's grid.
struct CellBest {
  std::size_t horizon = 0;
  double sigma_w = 0.0;
  double s_i = 0.0, s_ii = 0.0;
  double m_i = INFINITY, m_ii = INFINITY;
  double lambda_s = 0.0, lambda_m = 0.0;
  double gamma_s = 0.0, gamma_m = 0.0;
};

struct CellTrial {
  std::size_t horizon = 0;
  double sigma_w = 0.0;
  TrialOutcome outcome;
};

struct Example1Result {
  double optimal_cost = 0.0;  // J(K*); NaN when the plant is not stabilizable
  Matrix optimal_gain;
  std::vector<CurvePoint> curves;
  std::vector<CellBest> cells;
  std::vector<CellTrial> trials;

  const CellBest& cell(std::size_t horizon, double sigma_w) const;
  /// example1_curves.csv, example1_heat.csv, example1_best.csv,
  /// example1_trials.csv
  std::vector<Table> tables() const;
};

struct Example2System {
  std::size_t index = 0;
  double sigma_w = 0.0;
  double coefficient = 0.0;
  double s_i = 0.0;
  double s_ii = 0.0;
  double open_loop_radius = 0.0;
};

struct Example2Counts {
  double sigma_w = 0.0;
  std::size_t both_zero = 0;       // S_I = 0, S_II = 0
  std::size_t only_ii = 0;         // S_I = 0, S_II > 0
  std::size_t only_i = 0;          // S_I > 0, S_II = 0
  std::size_t both_positive = 0;   // S_I > 0, S_II > 0
};

struct Example2Result {
  std::vector<Example2System> systems;
  std::vector<Example2Counts> counts;

  const Example2Counts& counts_for(double sigma_w) const;
  /// example2_systems.csv, example2_table1.csv, example2_log_ratios.csv,
  /// example2_histogram.csv
  std::vector<Table> tables() const;
};

/// Method I (Ω-regularized covariance program, λ grid) against Method II
/// (ridge covariance program, γ grid) on shared per-trial data, for every
/// (T, σ_w) pair.
Example1Result run_example1(const ExperimentConfig& cfg);

/// Random plants, one coefficient per system shared by both methods and all
/// trials. Uses cfg.systems, cfg.trials, cfg.sigma_w and cfg.horizons[0].
Example2Result run_example2(const ExperimentConfig& cfg);

/// Runs fn(0..count-1) on a bounded pool; fn must write only to its own slot.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace ddlqr
