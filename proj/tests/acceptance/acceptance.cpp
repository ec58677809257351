// Acceptance suite. Prints one PASS/FAIL line per criterion.
//
//   ddlqr_acceptance            run every criterion
//   ddlqr_acceptance <id>...    run the named criteria only
//   ddlqr_acceptance --list

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "certificate.hpp"
#include "ddlqr/cli.hpp"
#include "ddlqr/error.hpp"
#include "ddlqr/experiments.hpp"
#include "ddlqr/io.hpp"
#include "ddlqr/koopman.hpp"
#include "ddlqr/lqr.hpp"
#include "ddlqr/synthesis.hpp"
#include "sdp_oracle.hpp"
#include "support.hpp"

using namespace ddlqr;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  std::function<Verdict()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel_diff(const Matrix& a, const Matrix& b) { return (a - b).frobenius_norm() / (1.0 + b.frobenius_norm()); }

LqrWeights paper_weights(std::size_t n, std::size_t m) { return LqrWeights::scaled_identity(n, m, 1.0, 1e-3); }

LtiSystem random_plant(std::size_t n, std::size_t m, GaussianStream& g) {
  return LtiSystem(test::random_matrix(n, n, g, 1.0 / std::sqrt(static_cast<double>(n))), test::random_matrix(n, m, g));
}

// Shared by the equivalence and certificate criteria.
struct EquivalenceRun {
  int instances = 0;
  int both_ok = 0;
  int agree = 0;
  double worst = 0.0;
  double seconds = 0.0;
  std::vector<std::pair<CovarianceData, GainResult>> direct_solutions;
};

const EquivalenceRun& equivalence_run() {
  static const EquivalenceRun run = [] {
    EquivalenceRun r;
    const auto start = std::chrono::steady_clock::now();
    GaussianStream g(20240601);
    const double gammas[] = {1e-3, 1e-1, 1.0, 10.0};
    const std::size_t horizons[] = {8, 10, 20};
    for (int i = 0; i < 200; ++i) {
      const std::size_t n = 2 + i % 3, m = 1 + (i / 3) % 2;
      const std::size_t horizon = horizons[(i / 6) % 3];
      const double gamma = gammas[(i / 18) % 4];
      const LtiSystem sys = random_plant(n, m, g);
      ++r.instances;
      DataRecord rec;
      try {
        rec = simulate_and_collect(sys, NoiseSpec{1.0, 0.1, 5000u + static_cast<unsigned>(i)}, 1.0, horizon);
      } catch (const Error&) {
        continue;
      }
      const LqrWeights w = paper_weights(n, m);
      const CovarianceData cov = covariances(rec, gamma);
      std::optional<GainResult> direct, indirect;
      try {
        direct = synth_direct_ridge(cov, w);
        r.direct_solutions.emplace_back(cov, *direct);
      } catch (const SolverFailure&) {
      }
      try {
        indirect = synth_indirect(rec, w, gamma);
      } catch (const SolverFailure&) {
      }
      if (!direct || !indirect) continue;
      ++r.both_ok;
      const double e = (direct->k - indirect->k).frobenius_norm() / (1.0 + indirect->k.frobenius_norm());
      r.worst = std::max(r.worst, e);
      if (e <= 1e-5) ++r.agree;
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
  }();
  return run;
}

Verdict theorem_equivalence() {
  const EquivalenceRun& r = equivalence_run();
  const bool pass = r.both_ok > 0 && r.agree == r.both_ok && r.seconds < 120.0;
  return {pass, fmt("%d instances, %d with both pipelines successful, %d/%d within 1e-5*(1+|K|), worst %.2e, %.1fs",
                    r.instances, r.both_ok, r.agree, r.both_ok, r.worst, r.seconds)};
}

Verdict certificate_consistency() {
  const EquivalenceRun& r = equivalence_run();
  double eq = 0.0, schur = 0.0, gain = 0.0;
  std::size_t ok = 0;
  for (const auto& [cov, g] : r.direct_solutions) {
    const auto e = test::certificate_errors(cov, cov.psi, g);
    eq = std::max(eq, e.equality);
    schur = std::min(schur, e.schur_min_eig);
    gain = std::max(gain, e.gain);
    if (e.equality <= 1e-8 && e.schur_min_eig >= -1e-8 && e.gain <= 1e-8) ++ok;
  }
  const bool pass = !r.direct_solutions.empty() && ok == r.direct_solutions.size();
  return {pass, fmt("%zu/%zu Optimal solves consistent; worst Psi2*Y-P %.2e, Schur min eig %.2e, gain %.2e", ok,
                    r.direct_solutions.size(), eq, schur, gain)};
}

Verdict reduction_chain() {
  int mixed_exact = 0, mixed_total = 0, noiseless_ok = 0, noiseless_total = 0, noisy_ok = 0, noisy_total = 0;
  double worst_noiseless = 0.0, worst_noisy = 0.0;
  GaussianStream g(77);
  for (int i = 0; i < 10; ++i) {
    const LtiSystem sys = i < 5 ? benchmark_plant() : random_plant(2 + i % 3, 1 + i % 2, g);
    const LqrWeights w = paper_weights(sys.n(), sys.m());
    const DataRecord clean = simulate_and_collect(sys, NoiseSpec{1.0, 0.0, 900u + i}, 1.0, 20);
    const DataRecord noisy = simulate_and_collect(sys, NoiseSpec{1.0, 0.1, 950u + i}, 1.0, 20);
    try {
      const CovarianceData cov = covariances(noisy, 0.2);
      ++mixed_total;
      if (synth_direct_mixed(cov, w, 0.0).k == synth_direct_ridge(cov, w).k) ++mixed_exact;
    } catch (const SolverFailure&) {
      --mixed_total;
    }
    try {
      const Matrix ridge = synth_direct_ridge(covariances(clean, 1e-10), w).k;
      const Matrix cov0 = synth_direct_cov(covariances(clean, 0.0), w, 0.0).k;
      const Matrix ls = synth_indirect(clean, w, 0.0).k;
      const double e = std::max({rel_diff(ridge, ls), rel_diff(cov0, ls), rel_diff(ridge, cov0)});
      worst_noiseless = std::max(worst_noiseless, e);
      ++noiseless_total;
      if (e <= 1e-4) ++noiseless_ok;
    } catch (const SolverFailure&) {
    }
    try {
      const Matrix cov0 = synth_direct_cov(covariances(noisy, 0.0), w, 0.0).k;
      const Matrix ls = synth_indirect(noisy, w, 0.0).k;
      const double e = rel_diff(cov0, ls);
      worst_noisy = std::max(worst_noisy, e);
      ++noisy_total;
      if (e <= 1e-5) ++noisy_ok;
    } catch (const SolverFailure&) {
    }
  }
  const bool pass = mixed_total > 0 && mixed_exact == mixed_total && noiseless_total > 0 &&
                    noiseless_ok == noiseless_total && noisy_total > 0 && noisy_ok == noisy_total;
  return {pass, fmt("mixed(0)=ridge exactly %d/%d; noiseless ridge/cov/LS within 1e-4 %d/%d (worst %.2e); "
                    "noisy cov/LS within 1e-5 %d/%d (worst %.2e)",
                    mixed_exact, mixed_total, noiseless_ok, noiseless_total, worst_noiseless, noisy_ok, noisy_total,
                    worst_noisy)};
}

Verdict model_based_cross_check() {
  GaussianStream g(4242);
  int agree = 0, systems = 0;
  double worst = 0.0, worst_res = 0.0;
  while (systems < 50) {
    const std::size_t n = 2 + systems % 3, m = 1 + systems % 2;
    const LtiSystem sys = random_plant(n, m, g);
    const LqrWeights w = paper_weights(n, m);
    DareSolution dare;
    try {
      dare = dare_solve(sys, w);
    } catch (const Error&) {
      continue;  // not stabilizable
    }
    ++systems;
    const double res = dare_residual(sys, w, dare.p);
    worst_res = std::max(worst_res, res);
    try {
      const GainResult lmi = synth_model_based(sys, w);
      const double e = (lmi.k - dare.k).frobenius_norm() / (1.0 + dare.k.frobenius_norm());
      worst = std::max(worst, e);
      if (e <= 1e-5 && res <= 1e-9) ++agree;
    } catch (const SolverFailure&) {
    }
  }
  return {agree == systems, fmt("%d/%d systems agree within 1e-5 (worst %.2e); worst DARE residual %.2e", agree, systems,
                                worst, worst_res)};
}

ExperimentConfig example1_config(std::size_t horizon) {
  ExperimentConfig c;
  c.horizons = {horizon};
  c.sigma_w = {0.1};
  c.trials = 100;
  c.master_seed = 1;
  return c;
}

Verdict example1_reproduction() {
  const auto start = std::chrono::steady_clock::now();
  const Example1Result r = run_example1(example1_config(10));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const CellBest& c = r.cell(10, 0.1);
  const bool pass = c.s_ii >= 79 && c.s_ii <= 99 && c.m_ii >= 0.36 && c.m_ii <= 1.45 && c.s_ii >= c.s_i && secs < 600;
  return {pass, fmt("S_II=%.0f (gamma %.2f), M_II=%.4f (gamma %.2f), S_I=%.0f, M_I=%.4f, %.0fs", c.s_ii, c.gamma_s,
                    c.m_ii, c.gamma_m, c.s_i, c.m_i, secs)};
}

Verdict example1_large_horizon() {
  const CellBest c = run_example1(example1_config(200)).cell(200, 0.1);
  const bool pass = c.s_i == 100 && c.s_ii == 100 && c.m_i <= 0.05 && c.m_ii <= 0.05;
  return {pass, fmt("S_I=%.0f S_II=%.0f M_I=%.4g M_II=%.4g", c.s_i, c.s_ii, c.m_i, c.m_ii)};
}

Verdict example1_small_horizon() {
  const CellBest c = run_example1(example1_config(5)).cell(5, 0.1);
  return {c.s_i <= 40 && c.s_ii >= 55, fmt("S_I=%.0f S_II=%.0f", c.s_i, c.s_ii)};
}

Verdict example2_reproduction() {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig c;
  c.plant.kind = PlantKind::Random;
  c.plant.n = 3;
  c.plant.m = 1;
  c.horizons = {10};
  c.sigma_w = {0.1, 1.0};
  c.trials = 50;
  c.systems = 200;
  c.master_seed = 1;
  const Example2Result r = run_example2(c);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const Example2Counts& lo = r.counts_for(0.1);
  const Example2Counts& hi = r.counts_for(1.0);
  const bool pass = lo.only_ii > 3 * lo.only_i && hi.both_zero > lo.both_zero;
  return {pass, fmt("sigma_w=0.1: both0=%zu onlyII=%zu onlyI=%zu both+=%zu; sigma_w=1.0: both0=%zu onlyII=%zu onlyI=%zu "
                    "both+=%zu; %.0fs",
                    lo.both_zero, lo.only_ii, lo.only_i, lo.both_positive, hi.both_zero, hi.only_ii, hi.only_i,
                    hi.both_positive, secs)};
}

Verdict ridge_rank_deficiency() {
  int optimal = 0, infeasible = 0, other = 0, agree = 0;
  double worst = 0.0;
  const LqrWeights w = paper_weights(4, 1);
  for (unsigned seed = 0; seed < 20; ++seed) {
    const DataRecord rec = simulate_and_collect(benchmark_plant(), NoiseSpec{1.0, 0.1, 3000u + seed}, 1.0, 3);
    try {
      const GainResult d = synth_direct_ridge(covariances(rec, 1.0), w);
      ++optimal;
      const GainResult t = synth_indirect(rec, w, 1.0);
      const double e = (d.k - t.k).frobenius_norm() / (1.0 + t.k.frobenius_norm());
      worst = std::max(worst, e);
      if (e <= 1e-5) ++agree;
    } catch (const SolverFailure& f) {
      (f.status() == "Infeasible" ? infeasible : other) += 1;
    } catch (const Error&) {
      ++other;
    }
  }
  const bool pass = other == 0 && agree == optimal;
  return {pass, fmt("20 datasets with T=3: %d Optimal (%d match Tikhonov within 1e-5, worst %.2e), %d Infeasible, %d other",
                    optimal, agree, worst, infeasible, other)};
}

Verdict koopman_embedding() {
  const NonlinearPlant plant = quadratic_demo_plant();
  const LiftingDictionary d(2, {Observable::coordinate_of(0), Observable::coordinate_of(1), Observable::monomial({2, 0})});
  const DataRecord raw = collect_nonlinear(plant, NoiseSpec{1.0, 0.0, 7}, 1.0, 30);
  const LiftedDataRecord z = lift(raw, d);
  const double residual = embedding_residual(z);
  const GainResult g = synth_koopman(z, lifted_weights(d, LqrWeights::scaled_identity(2, 1, 1.0, 1.0)), 1e-6);
  const Matrix traj = koopman_rollout(plant, d, g.k, Matrix{{1.0}, {1.0}}, 50);
  const double final_norm = traj.col(50).frobenius_norm();
  return {residual <= 1e-8 && final_norm <= 1e-3,
          fmt("lifted residual %.2e, |x(50)| = %.4e (x1(50) = %.4e is input-independent)", residual, final_norm,
              traj(0, 50))};
}

Verdict solver_suite() {
  int optimal = 0, ok = 0;
  double worst_reported = 0.0, worst_checked = 0.0;
  std::string notes;
  const auto check = [&](const SdpProblem& p, const std::vector<double>& expect) {
    const SdpSolution s = solve_sdp(p);
    if (s.status != SdpStatus::Optimal) {
      notes += " non-optimal";
      return;
    }
    ++optimal;
    const double reported = std::max({s.primal_residual, s.dual_residual, s.gap});
    const auto kkt = test::check_kkt(p, s);
    const FeasibilityReport feas = verify_feasibility(p, s.x);
    worst_reported = std::max(worst_reported, reported);
    worst_checked = std::max(worst_checked, kkt.worst());
    bool good = reported <= 1e-8 && kkt.worst() <= 1e-8 && feas.equality_residual <= 1e-8 && feas.min_eigenvalue >= -1e-8;
    for (std::size_t i = 0; i < expect.size(); ++i) good &= std::abs(s.x[i] - expect[i]) <= 1e-6;
    if (good) ++ok;
  };
  check(SdpProblem{1, {1.0}, {LmiBlock{1, Matrix{{-1.0}}, {{0, 0, 0, 1.0}}}}, {}}, {1.0});
  check(SdpProblem{1, {1.0}, {LmiBlock{2, Matrix{{0, 1}, {1, 0}}, {{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}}}, {}}, {1.0});
  check(SdpProblem{1, {-1.0}, {LmiBlock{2, Matrix{{3, 0}, {0, 5}}, {{0, 0, 0, -1.0}, {0, 1, 1, -1.0}}}}, {}}, {3.0});
  GaussianStream g(31337);
  for (int i = 0; i < 20; ++i) check(test::random_sdp(g), {});
  return {ok == 23, fmt("%d/23 pass (%d Optimal); worst reported KKT %.2e, worst independent KKT %.2e%s", ok, optimal,
                        worst_reported, worst_checked, notes.c_str())};
}

struct CliRun {
  int code;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ddlqr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, err.str()};
}

// Reruns each experiment from the config echoed in its own manifest with a
// different worker count and compares the listed file hashes.
Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "ddlqr_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  write_file_atomic(root / "ex1.json",
                    R"({"horizons": [5, 10], "sigma_w": [0.1, 0.5], "lambda_grid": [0, 0.1, 1], "gamma_grid": [0, 0.1, 1], "trials": 4, "mixed": true})");
  write_file_atomic(root / "ex2.json", R"({"systems": 8, "trials": 4, "sigma_w": [0.1, 1.0]})");
  struct Job {
    std::string name, config;
  };
  const std::vector<Job> jobs{{"example1", "ex1.json"}, {"example2", "ex2.json"}, {"koopman-demo", ""}};
  int identical = 0;
  std::string detail;
  for (const Job& job : jobs) {
    const fs::path first = root / (job.name + "_a"), second = root / (job.name + "_b");
    std::vector<std::string> args{"experiment", job.name, "-o", first.string(), "--workers", "1"};
    if (!job.config.empty()) args.insert(args.end(), {"-c", (root / job.config).string()});
    const CliRun a = cli(args);
    if (a.code != 0) return {false, job.name + " failed: " + a.err};
    const auto manifest_a = nlohmann::json::parse(read_file(first / "manifest.json"));
    std::vector<std::string> rerun{"experiment", job.name, "-o", second.string(), "--workers", "4"};
    if (manifest_a.at("config").is_object() && job.name != "koopman-demo") {
      write_file_atomic(root / (job.name + "_echo.json"), manifest_a.at("config").dump(2));
      rerun.insert(rerun.end(), {"-c", (root / (job.name + "_echo.json")).string()});
    }
    const CliRun b = cli(rerun);
    if (b.code != 0) return {false, job.name + " rerun failed: " + b.err};
    const auto manifest_b = nlohmann::json::parse(read_file(second / "manifest.json"));
    const bool same = manifest_a.at("files") == manifest_b.at("files") && !manifest_a.at("files").empty();
    if (same) ++identical;
    detail += fmt("%s %s (%zu files); ", job.name.c_str(), same ? "identical" : "DIFFERENT", manifest_a.at("files").size());
  }
  return {identical == static_cast<int>(jobs.size()), detail + "workers 1 vs 4"};
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"theorem-equivalence", "ridge direct program equals Tikhonov certainty equivalence", theorem_equivalence},
      {"certificate", "certificate of every Optimal ridge solve is consistent", certificate_consistency},
      {"reduction-chain", "mixed/ridge/covariance/least-squares reductions", reduction_chain},
      {"model-based", "LMI model-based gain equals Riccati gain", model_based_cross_check},
      {"example1-T10", "Example 1 at T=10, sigma_w=0.1", example1_reproduction},
      {"example1-T200", "Example 1 large-horizon limit", example1_large_horizon},
      {"example1-T5", "Example 1 small-horizon contrast", example1_small_horizon},
      {"example2", "Example 2 random systems, quick mode", example2_reproduction},
      {"ridge-rank-deficient", "ridge program on rank-deficient data", ridge_rank_deficiency},
      {"koopman", "Koopman exact-embedding demo", koopman_embedding},
      {"solver-suite", "conic solver examples and random programs", solver_suite},
      {"determinism", "identical CSV hashes across reruns and worker counts", determinism},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> wanted(argv + 1, argv + argc);
  if (wanted.size() == 1 && wanted[0] == "--list") {
    for (const auto& c : criteria()) std::printf("%s\n", c.id.c_str());
    return 0;
  }
  for (const auto& w : wanted) {
    if (std::none_of(criteria().begin(), criteria().end(), [&](const Criterion& c) { return c.id == w; })) {
      std::fprintf(stderr, "unknown criterion '%s' (use --list)\n", w.c_str());
      return 2;
    }
  }
  int failed = 0;
  for (const auto& c : criteria()) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::printf("%s %s: %s | %s\n", v.pass ? "PASS" : "FAIL", c.id.c_str(), c.title.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
