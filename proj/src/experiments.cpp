#include "ddlqr/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "ddlqr/error.hpp"
#include "ddlqr/lqr.hpp"
#include "ddlqr/random.hpp"

namespace ddlqr {

namespace {

std::string nr_or(double v) { return std::isfinite(v) ? format_double(v) : "NR"; }

double quantile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  if (!std::isfinite(sorted[lo]) || !std::isfinite(sorted[hi])) return INFINITY;
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ConfigInvalid, what);
}

LtiSystem random_system(std::size_t n, std::size_t m, double entry_std, GaussianStream& rng) {
  Matrix a(n, n), b(n, m);
  for (auto& v : a.data()) v = entry_std * rng.normal();
  for (auto& v : b.data()) v = entry_std * rng.normal();
  return LtiSystem(std::move(a), std::move(b));
}

std::size_t worker_count(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Solves one design and judges it on the true plant.
struct Judge {
  const LtiSystem& plant;
  const LqrWeights& weights;
  double optimal_cost;  // NaN when E is not needed
  const ToleranceConfig& tol;

  template <typename Solve>
  TrialOutcome operator()(std::size_t trial, std::string method, double lambda, double gamma, Solve&& solve) const {
    TrialOutcome out;
    out.trial = trial;
    out.method = std::move(method);
    out.lambda = lambda;
    out.gamma = gamma;
    const auto start = std::chrono::steady_clock::now();
    try {
      GainResult g = solve();
      out.status = g.diagnostics.status;
      out.stabilizing = is_stabilizing(plant, g.k, tol);
      if (out.stabilizing && std::isfinite(optimal_cost)) {
        out.gap = (lqr_cost(plant, weights, g.k, tol) - optimal_cost) / optimal_cost;
      }
      out.k = std::move(g.k);
    } catch (const SolverFailure& e) {
      out.status = e.status();
    } catch (const Error& e) {
      out.status = std::string(to_string(e.code()));
    }
    if (!out.stabilizing) out.gap = INFINITY;
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
  }
};

TrialOutcome failed(std::size_t trial, std::string method, double lambda, double gamma, const std::string& status) {
  TrialOutcome out;
  out.trial = trial;
  out.method = std::move(method);
  out.lambda = lambda;
  out.gamma = gamma;
  out.status = status;
  return out;
}

std::string matrix_cell(const std::optional<Matrix>& k) {
  if (!k) return "";
  std::string out;
  for (std::size_t i = 0; i < k->size(); ++i) {
    if (i) out += ' ';
    out += format_double(k->data()[i]);
  }
  return out;
}

}  // namespace

LtiSystem make_plant(const PlantConfig& plant, std::uint64_t seed) {
  switch (plant.kind) {
    case PlantKind::Benchmark:
      return benchmark_plant();
    case PlantKind::Custom:
      require(plant.custom.has_value(), "plant.kind = custom needs plant matrices");
      return *plant.custom;
    case PlantKind::Random: {
      GaussianStream rng(seed);
      return random_system(plant.n, plant.m, plant.entry_std, rng);
    }
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown plant kind");
}

std::vector<double> coefficient_grid() {
  return {0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1, 0.2, 0.3, 0.4, 0.5, 1.0};
}

void ExperimentConfig::validate() const {
  require(!horizons.empty(), "horizons must be nonempty");
  require(!sigma_w.empty(), "sigma_w must be nonempty");
  require(!lambda_grid.empty(), "lambda_grid must be nonempty");
  require(!gamma_grid.empty(), "gamma_grid must be nonempty");
  require(trials >= 1, "trials must be >= 1");
  for (auto t : horizons) require(t >= 1, "horizons must be >= 1");
  for (double s : sigma_w) require(s >= 0.0 && std::isfinite(s), "sigma_w entries must be finite and >= 0");
  for (double v : lambda_grid) require(v >= 0.0 && std::isfinite(v), "lambda_grid entries must be finite and >= 0");
  for (double v : gamma_grid) require(v >= 0.0 && std::isfinite(v), "gamma_grid entries must be finite and >= 0");
  require(q_scale > 0.0 && r_scale > 0.0, "q_scale and r_scale must be positive");
  require(sigma_x >= 0.0 && input_std > 0.0, "sigma_x must be >= 0 and input_std > 0");
  require(systems >= 1, "systems must be >= 1");
  require(coefficient_lo >= 0.0 && coefficient_hi >= coefficient_lo, "coefficient interval must satisfy 0 <= lo <= hi");
  if (plant.kind == PlantKind::Random) {
    require(plant.n >= 1 && plant.m >= 1, "random plant needs n, m >= 1");
    require(plant.entry_std > 0.0, "random plant entry_std must be positive");
  }
  if (plant.kind == PlantKind::Custom) require(plant.custom.has_value(), "custom plant needs matrices");
}

Summary summarize(std::span<const TrialOutcome> outcomes) {
  if (outcomes.empty()) throw Error(ErrorCode::EmptyInput, "no trial outcomes to summarize");
  Summary s;
  s.count = outcomes.size();
  std::vector<double> gaps;
  gaps.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    if (o.stabilizing) ++s.stabilizing;
    if (o.status != "Optimal" && o.status != "Converged") ++s.solver_failures;
    gaps.push_back(o.stabilizing ? o.gap : INFINITY);
  }
  std::sort(gaps.begin(), gaps.end());
  s.s = 100.0 * static_cast<double>(s.stabilizing) / static_cast<double>(s.count);
  s.m = quantile(gaps, 0.5);
  s.q1 = quantile(gaps, 0.25);
  s.q3 = quantile(gaps, 0.75);
  return s;
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::min(worker_count(workers), std::max<std::size_t>(count, 1));
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr first_error;
  std::size_t first_index = count;
  const auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < first_index) {
          first_index = i;
          first_error = std::current_exception();
        }
      }
    }
  };
  if (workers <= 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

const CellBest& Example1Result::cell(std::size_t horizon, double sigma_w) const {
  for (const auto& c : cells)
    if (c.horizon == horizon && c.sigma_w == sigma_w) return c;
  throw Error(ErrorCode::InvalidArgument, "no cell for T = " + std::to_string(horizon));
}

Example1Result run_example1(const ExperimentConfig& cfg) {
  cfg.validate();
  const LtiSystem plant = make_plant(cfg.plant, derive_seed(cfg.master_seed, 0xA11CE));
  const std::size_t n = plant.n(), m = plant.m();
  const LqrWeights w = LqrWeights::scaled_identity(n, m, cfg.q_scale, cfg.r_scale);
  const ToleranceConfig& tol = cfg.synthesis.tol;

  Example1Result res;
  res.optimal_cost = NAN;
  try {
    const GainResult star = lqr_riccati(plant, w, tol);
    res.optimal_gain = star.k;
    res.optimal_cost = lqr_cost(plant, w, star.k, tol);
  } catch (const Error& e) {
    // Not stabilizable: no trial can stabilize either, so E is never needed.
    if (e.code() != ErrorCode::NoConvergence) throw;
  }
  const Judge judge{plant, w, res.optimal_cost, tol};

  const std::size_t nl = cfg.lambda_grid.size(), ng = cfg.gamma_grid.size();
  const std::size_t per_trial = nl + ng + (cfg.mixed ? nl * ng : 0);
  const std::size_t cells = cfg.horizons.size() * cfg.sigma_w.size();
  const std::size_t items = cells * cfg.trials;
  std::vector<std::vector<TrialOutcome>> slots(items);

  parallel_for(items, cfg.workers, [&](std::size_t item) {
    const std::size_t cell = item / cfg.trials, trial = item % cfg.trials;
    const std::size_t ti = cell / cfg.sigma_w.size(), si = cell % cfg.sigma_w.size();
    const NoiseSpec noise{cfg.sigma_x, cfg.sigma_w[si], derive_seed(derive_seed(cfg.master_seed, ti), trial)};
    auto& out = slots[item];
    out.reserve(per_trial);
    DataRecord rec;
    try {
      rec = simulate_and_collect(plant, noise, cfg.input_std, cfg.horizons[ti]);
    } catch (const Error& e) {
      const std::string status(to_string(e.code()));
      for (double l : cfg.lambda_grid) out.push_back(failed(trial, "I", l, 0.0, status));
      for (double g : cfg.gamma_grid) out.push_back(failed(trial, "II", 0.0, g, status));
      if (cfg.mixed)
        for (double l : cfg.lambda_grid)
          for (double g : cfg.gamma_grid) out.push_back(failed(trial, "mixed", l, g, status));
      return;
    }
    const CovarianceData cov0 = covariances(rec, 0.0, tol);
    for (double l : cfg.lambda_grid) {
      out.push_back(judge(trial, "I", l, 0.0, [&] { return synth_direct_cov(cov0, w, l, cfg.synthesis); }));
    }
    std::vector<CovarianceData> covs;
    for (double g : cfg.gamma_grid) covs.push_back(g == 0.0 ? cov0 : covariances(rec, g, tol));
    for (std::size_t gi = 0; gi < ng; ++gi) {
      out.push_back(judge(trial, "II", 0.0, cfg.gamma_grid[gi],
                          [&] { return synth_direct_ridge(covs[gi], w, cfg.synthesis); }));
    }
    if (cfg.mixed) {
      for (double l : cfg.lambda_grid)
        for (std::size_t gi = 0; gi < ng; ++gi)
          out.push_back(judge(trial, "mixed", l, cfg.gamma_grid[gi],
                              [&] { return synth_direct_mixed(covs[gi], w, l, cfg.synthesis); }));
    }
  });

  for (std::size_t cell = 0; cell < cells; ++cell) {
    const std::size_t ti = cell / cfg.sigma_w.size(), si = cell % cfg.sigma_w.size();
    const std::size_t horizon = cfg.horizons[ti];
    const double sigma = cfg.sigma_w[si];
    CellBest best;
    best.horizon = horizon;
    best.sigma_w = sigma;
    best.s_i = best.s_ii = -1.0;
    for (std::size_t j = 0; j < per_trial; ++j) {
      std::vector<TrialOutcome> column;
      column.reserve(cfg.trials);
      for (std::size_t t = 0; t < cfg.trials; ++t) column.push_back(slots[cell * cfg.trials + t][j]);
      const TrialOutcome& head = column.front();
      const Summary s = summarize(column);
      res.curves.push_back({head.method, head.lambda, head.gamma, horizon, sigma, s});
      if (head.method == "I") {
        if (s.s > best.s_i) best.s_i = s.s, best.lambda_s = head.lambda;
        if (s.m < best.m_i) best.m_i = s.m, best.lambda_m = head.lambda;
      } else if (head.method == "II") {
        if (s.s > best.s_ii) best.s_ii = s.s, best.gamma_s = head.gamma;
        if (s.m < best.m_ii) best.m_ii = s.m, best.gamma_m = head.gamma;
      }
    }
    res.cells.push_back(best);
    for (std::size_t t = 0; t < cfg.trials; ++t)
      for (auto& o : slots[cell * cfg.trials + t]) res.trials.push_back({horizon, sigma, std::move(o)});
  }
  return res;
}

std::vector<Table> Example1Result::tables() const {
  Table curve_t{"example1_curves.csv",
               {"method", "lambda", "gamma", "T", "sigma_w", "trials", "stabilizing", "S", "M", "q1", "q3",
                "solver_failures"},
               {}};
  for (const auto& c : curves) {
    const auto& s = c.summary;
    curve_t.add_row({c.method, format_double(c.lambda), format_double(c.gamma), std::to_string(c.horizon),
                    format_double(c.sigma_w), std::to_string(s.count), std::to_string(s.stabilizing),
                    format_double(s.s), nr_or(s.m), nr_or(s.q1), nr_or(s.q3), std::to_string(s.solver_failures)});
  }
  Table heat{"example1_heat.csv", {"T", "sigma_w", "S_I", "S_II", "M_I", "M_II", "log_S_ratio", "log_M_ratio"}, {}};
  Table best_t{"example1_best.csv",
             {"T", "sigma_w", "method", "S_best", "coefficient_at_S", "M_best", "coefficient_at_M"},
             {}};
  for (const auto& c : cells) {
    const double ls = c.s_i > 0.0 && c.s_ii > 0.0 ? std::log(c.s_ii / c.s_i) : NAN;
    const double lm = std::isfinite(c.m_i) && std::isfinite(c.m_ii) && c.m_i > 0.0 && c.m_ii > 0.0
                          ? std::log(c.m_i / c.m_ii)
                          : NAN;
    heat.add_row({std::to_string(c.horizon), format_double(c.sigma_w), format_double(c.s_i), format_double(c.s_ii),
                  nr_or(c.m_i), nr_or(c.m_ii), nr_or(ls), nr_or(lm)});
    best_t.add_row({std::to_string(c.horizon), format_double(c.sigma_w), "I", format_double(c.s_i),
                  format_double(c.lambda_s), nr_or(c.m_i), format_double(c.lambda_m)});
    best_t.add_row({std::to_string(c.horizon), format_double(c.sigma_w), "II", format_double(c.s_ii),
                  format_double(c.gamma_s), nr_or(c.m_ii), format_double(c.gamma_m)});
  }
  Table trial_table{"example1_trials.csv",
                    {"T", "sigma_w", "trial", "method", "lambda", "gamma", "status", "stabilizing", "E", "K"},
                    {}};
  for (const auto& t : trials) {
    const auto& o = t.outcome;
    trial_table.add_row({std::to_string(t.horizon), format_double(t.sigma_w), std::to_string(o.trial), o.method,
                         format_double(o.lambda), format_double(o.gamma), o.status, o.stabilizing ? "1" : "0",
                         format_double(o.gap), matrix_cell(o.k)});
  }
  return {std::move(curve_t), std::move(heat), std::move(best_t), std::move(trial_table)};
}

const Example2Counts& Example2Result::counts_for(double sigma_w) const {
  for (const auto& c : counts)
    if (c.sigma_w == sigma_w) return c;
  throw Error(ErrorCode::InvalidArgument, "no counts for that sigma_w");
}

Example2Result run_example2(const ExperimentConfig& cfg) {
  cfg.validate();
  require(cfg.plant.kind == PlantKind::Random, "example2 needs plant.kind = random");
  const std::size_t n = cfg.plant.n, m = cfg.plant.m;
  const std::size_t horizon = cfg.horizons.front();
  const LqrWeights w = LqrWeights::scaled_identity(n, m, cfg.q_scale, cfg.r_scale);
  const ToleranceConfig& tol = cfg.synthesis.tol;

  std::vector<LtiSystem> plants;
  std::vector<double> coefficient;
  for (std::size_t s = 0; s < cfg.systems; ++s) {
    GaussianStream rng(derive_seed(cfg.master_seed, 2 * s));
    plants.push_back(random_system(n, m, cfg.plant.entry_std, rng));
    coefficient.push_back(rng.uniform(cfg.coefficient_lo, cfg.coefficient_hi));
  }

  const std::size_t ns = cfg.sigma_w.size();
  const std::size_t items = ns * cfg.systems * cfg.trials;
  // 0: not stabilizing, bit 0: Method I stabilizing, bit 1: Method II.
  std::vector<unsigned char> verdict(items, 0);
  parallel_for(items, cfg.workers, [&](std::size_t item) {
    const std::size_t trial = item % cfg.trials;
    const std::size_t s = (item / cfg.trials) % cfg.systems;
    const std::size_t si = item / (cfg.trials * cfg.systems);
    const LtiSystem& plant = plants[s];
    const NoiseSpec noise{cfg.sigma_x, cfg.sigma_w[si], derive_seed(derive_seed(cfg.master_seed, 2 * s + 1), trial)};
    DataRecord rec;
    try {
      rec = simulate_and_collect(plant, noise, cfg.input_std, horizon);
    } catch (const Error&) {
      return;
    }
    const Judge judge{plant, w, NAN, tol};
    const double c = coefficient[s];
    const TrialOutcome i = judge(trial, "I", c, 0.0, [&] {
      return synth_direct_cov(covariances(rec, 0.0, tol), w, c, cfg.synthesis);
    });
    const TrialOutcome ii = judge(trial, "II", 0.0, c, [&] {
      return synth_direct_ridge(covariances(rec, c, tol), w, cfg.synthesis);
    });
    verdict[item] = static_cast<unsigned char>((i.stabilizing ? 1 : 0) | (ii.stabilizing ? 2 : 0));
  });

  Example2Result res;
  for (std::size_t si = 0; si < ns; ++si) {
    Example2Counts counts;
    counts.sigma_w = cfg.sigma_w[si];
    for (std::size_t s = 0; s < cfg.systems; ++s) {
      std::size_t ok_i = 0, ok_ii = 0;
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        const unsigned char v = verdict[(si * cfg.systems + s) * cfg.trials + t];
        ok_i += v & 1;
        ok_ii += (v >> 1) & 1;
      }
      Example2System sys;
      sys.index = s;
      sys.sigma_w = cfg.sigma_w[si];
      sys.coefficient = coefficient[s];
      sys.s_i = 100.0 * static_cast<double>(ok_i) / static_cast<double>(cfg.trials);
      sys.s_ii = 100.0 * static_cast<double>(ok_ii) / static_cast<double>(cfg.trials);
      sys.open_loop_radius = spectral_radius(plants[s].a(), tol);
      if (ok_i == 0 && ok_ii == 0) ++counts.both_zero;
      if (ok_i == 0 && ok_ii > 0) ++counts.only_ii;
      if (ok_i > 0 && ok_ii == 0) ++counts.only_i;
      if (ok_i > 0 && ok_ii > 0) ++counts.both_positive;
      res.systems.push_back(sys);
    }
    res.counts.push_back(counts);
  }
  return res;
}

std::vector<Table> Example2Result::tables() const {
  Table systems_t{"example2_systems.csv", {"system", "sigma_w", "coefficient", "S_I", "S_II", "open_loop_radius"}, {}};
  Table ratios{"example2_log_ratios.csv", {"system", "sigma_w", "log10_S_ratio"}, {}};
  for (const auto& s : systems) {
    systems_t.add_row({std::to_string(s.index), format_double(s.sigma_w), format_double(s.coefficient),
                       format_double(s.s_i), format_double(s.s_ii), format_double(s.open_loop_radius)});
    if (s.s_i > 0.0 && s.s_ii > 0.0) {
      ratios.add_row({std::to_string(s.index), format_double(s.sigma_w), format_double(std::log10(s.s_ii / s.s_i))});
    }
  }
  Table table1{"example2_table1.csv", {"sigma_w", "case", "count"}, {}};
  for (const auto& c : counts) {
    const std::string sw = format_double(c.sigma_w);
    table1.add_row({sw, "both_zero", std::to_string(c.both_zero)});
    table1.add_row({sw, "only_II", std::to_string(c.only_ii)});
    table1.add_row({sw, "only_I", std::to_string(c.only_i)});
    table1.add_row({sw, "both_positive", std::to_string(c.both_positive)});
  }
  // Fixed bins of width 0.1 over [-2, 2]; |log10(S_II/S_I)| ≤ log10(50) for 50 trials.
  constexpr int kBins = 40;
  Table hist{"example2_histogram.csv", {"sigma_w", "bin_lo", "bin_hi", "count"}, {}};
  for (const auto& c : counts) {
    std::vector<std::size_t> bins(kBins, 0);
    for (const auto& s : systems) {
      if (s.sigma_w != c.sigma_w || !(s.s_i > 0.0 && s.s_ii > 0.0)) continue;
      const double v = std::log10(s.s_ii / s.s_i);
      const int b = std::clamp(static_cast<int>(std::floor((v + 2.0) / 0.1)), 0, kBins - 1);
      ++bins[static_cast<std::size_t>(b)];
    }
    for (int b = 0; b < kBins; ++b) {
      hist.add_row({format_double(c.sigma_w), format_double(-2.0 + 0.1 * b), format_double(-2.0 + 0.1 * (b + 1)),
                    std::to_string(bins[static_cast<std::size_t>(b)])});
    }
  }
  return {std::move(systems_t), std::move(table1), std::move(ratios), std::move(hist)};
}

}  // namespace ddlqr
