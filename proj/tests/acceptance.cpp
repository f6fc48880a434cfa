// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Tolerances are fixed here, not tuned at run time.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dpfda/bench.hpp"
#include "dpfda/estimators.hpp"
#include "dpfda/fednet.hpp"
#include "qp_oracle.hpp"

using namespace dpfda;

namespace {

struct Context {
  std::vector<std::string> notes;
  void note(const std::string& text) { notes.push_back(text); }
  template <typename T>
  void expect(bool ok, const T& detail) {
    if (!ok) {
      failures.push_back(detail);
    }
  }
  std::vector<std::string> failures;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Mechanism calibration: analytic privacy-loss tail and empirical variance.
void criterion_mechanism_calibration(Context& ctx) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> eps_dist(0.05, 0.95);
  std::uniform_real_distribution<double> sens_dist(0.05, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int r = 1 + static_cast<int>(rng() % 16);
    Eigen::VectorXd sens(r);
    for (int i = 0; i < r; ++i) {
      sens(i) = sens_dist(rng);
    }
    const PrivacyBudget budget(eps_dist(rng), 1e-3);
    const PrivacyLossTail tail = privacy_loss_tail(sens, budget);
    ctx.expect(tail.passes, "tail check failed at trial " + std::to_string(trial) +
                                " (P = " + fmt(tail.tail_prob) + ")");

    const NoiseScales scales = mechanism_scales(sens, budget);
    const int draws = 200000;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(r);
    Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(r);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(r);
    for (int k = 0; k < draws; ++k) {
      const Eigen::VectorXd draw = anisotropic_gaussian(zero, sens, budget, rng);
      sum += draw;
      sum_sq += draw.cwiseAbs2();
    }
    for (int i = 0; i < r; ++i) {
      const double mean = sum(i) / draws;
      const double var = sum_sq(i) / draws - mean * mean;
      const double rel = std::abs(var / scales.variances(i) - 1.0);
      ctx.expect(rel < 0.03, "variance off by " + fmt(rel) + " at trial " +
                                 std::to_string(trial) + " coord " +
                                 std::to_string(i));
    }
  }
}

// ---------------------------------------------------------------------------
// 2. Anisotropic total variance <= isotropic, strictly for non-constant df.
void criterion_anisotropic_advantage(Context& ctx) {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> sens_dist(0.02, 1.0);
  const PrivacyBudget budget(0.8, 1e-3);
  const double log_term = 4.0 * std::log(2.0 / budget.delta);
  for (int trial = 0; trial < 100; ++trial) {
    const int r = 2 + static_cast<int>(rng() % 15);
    Eigen::VectorXd sens(r);
    for (int i = 0; i < r; ++i) {
      sens(i) = sens_dist(rng);
    }
    const double aniso = mechanism_scales(sens, budget).variances.sum();
    const double iso =
        r * log_term * sens.squaredNorm() / (budget.epsilon * budget.epsilon);
    ctx.expect(aniso <= iso * (1.0 + 1e-12),
               "total variance exceeded isotropic at trial " + std::to_string(trial));
    const bool constant = (sens.array() - sens(0)).abs().maxCoeff() < 1e-14;
    if (!constant) {
      ctx.expect(aniso < iso, "strict inequality failed at trial " +
                                  std::to_string(trial));
    }
  }
}

// ---------------------------------------------------------------------------
// 3. Ellipsoid projection vs the independent QP oracle; contraction laws.
void criterion_projection_oracle(Context& ctx) {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_real_distribution<double> alpha_dist(1.5, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int r = 1 + static_cast<int>(rng() % 8);
    const EllipsoidSpec spec(SobolevParams(alpha_dist(rng), 1.0), r);
    Eigen::VectorXd v(r);
    for (int i = 0; i < r; ++i) {
      v(i) = 3.0 * unif(rng);
    }
    if (in_ellipsoid(v, spec)) {
      v *= 20.0;
    }
    const Eigen::VectorXd mine = project_ellipsoid(v, spec);
    const Eigen::VectorXd oracle = dpfda_test::qp_oracle(v, spec);
    ctx.expect((mine - oracle).norm() < 1e-6,
               "oracle mismatch " + fmt((mine - oracle).norm()) + " at trial " +
                   std::to_string(trial));
    ctx.expect((project_ellipsoid(mine, spec) - mine).norm() <= 1e-10,
               "idempotence failed at trial " + std::to_string(trial));
    ctx.expect(in_ellipsoid(mine, spec),
               "infeasible projection at trial " + std::to_string(trial));

    Eigen::VectorXd u(r);
    for (int i = 0; i < r; ++i) {
      u(i) = 3.0 * unif(rng);
    }
    const Eigen::VectorXd pu = project_ellipsoid(u, spec);
    ctx.expect((mine - pu).norm() <= (v - u).norm() + 1e-10,
               "non-expansiveness failed at trial " + std::to_string(trial));
  }
}

// ---------------------------------------------------------------------------
// 4. Noise-off gradient descent matches the closed-form least squares.
void criterion_noise_off_equivalence(Context& ctx) {
  const BuiltinTargets targets = builtin_targets();
  const EllipsoidSpec spec(SobolevParams(3.0, default_c_alpha()), 3);

  {
    std::mt19937_64 rng(404);
    const MeanDataset data = gen_mean_dataset(targets.mu1_fn, 200, 20, 0.0,
                                              MaternSpec(0.0, 4.0, 0.8), rng);
    GdConfig cfg;
    cfg.r = 3;
    cfg.T = 200;  // >= 60, enough contraction for 1e-6
    cfg.rho = 0.1;
    cfg.c_r_const = 1e12;
    cfg.noise_enabled = false;
    const EstimationReport gd =
        dp_mean_cdp(data, cfg, PrivacyBudget::disabled(), spec);
    const CoeffVector ls = nonprivate_ls(data, 3);
    const double gap = l2_distance(gd.coefficients, ls);
    ctx.expect(gap < 1e-6, "mean GD vs LS gap " + fmt(gap));
    ctx.note("mean gap " + fmt(gap));
  }

  {
    std::vector<CoeffVector> blocks{targets.mu1, targets.mu1 / 2.0};
    std::mt19937_64 rng(405);
    const VcmDataset data = gen_vcm_dataset(blocks, 1, 1000, 20, 0.0, rng);
    GdConfig cfg;
    cfg.r = 3;
    cfg.T = 250;
    cfg.rho = 0.2;
    cfg.c_r_const = 1e12;
    cfg.noise_enabled = false;
    const EstimationReport gd = dp_vcm_cdp(data, cfg, PrivacyBudget::disabled(), spec);
    const Eigen::VectorXd ls = nonprivate_ls_vcm(data, 3);
    const double gap = (gd.coefficients - ls).norm();
    ctx.expect(gap < 1e-6, "VCM GD vs block LS gap " + fmt(gap));
    ctx.note("vcm gap " + fmt(gap));
  }
}

// ---------------------------------------------------------------------------
// 5. Sensitivity of the batch-averaged clipped gradient: <= 2 R_l / b.
void criterion_sensitivity_bound(Context& ctx) {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const BuiltinTargets targets = builtin_targets();
  for (int trial = 0; trial < 200; ++trial) {
    const int b = 2 + static_cast<int>(rng() % 12);
    const int m = 1 + static_cast<int>(rng() % 8);
    const int r = 1 + static_cast<int>(rng() % 6);
    const TruncationRadii radii =
        mean_truncation_radii(r, m, 200.0, 0.1, 0.5 + unif(rng) * 0.25, 3.0);
    MeanDataset batch = gen_mean_dataset(targets.mu1_fn, b, m, 0.7,
                                         MaternSpec(0.6, 4.0, 0.8), rng);
    Eigen::VectorXd a(r);
    for (int i = 0; i < r; ++i) {
      a(i) = 2.0 * unif(rng);
    }
    const Eigen::VectorXd g1 = compute_clipped_mean_gradient(
        std::span<const MeanSubject>(batch.subjects.data(), b), a, radii);

    MeanDataset neighbor = batch;
    const int swap = static_cast<int>(rng() % b);
    for (int j = 0; j < m; ++j) {
      neighbor.subjects[swap].x(j) = 0.5 * (unif(rng) + 1.0);
      neighbor.subjects[swap].y(j) = 100.0 * unif(rng);
    }
    const Eigen::VectorXd g2 = compute_clipped_mean_gradient(
        std::span<const MeanSubject>(neighbor.subjects.data(), b), a, radii);
    for (int i = 0; i < r; ++i) {
      ctx.expect(std::abs(g1(i) - g2(i)) <= 2.0 * radii.radii(i) / b + 1e-12,
                 "sensitivity bound violated at trial " + std::to_string(trial));
    }
  }
}

// ---------------------------------------------------------------------------
// Shared Monte Carlo setup for criteria 6-8.
bench::ExperimentSpec simulation_defaults() {
  bench::ExperimentSpec spec;
  spec.scenario = bench::Scenario::MeanCdp;
  spec.target = "mu1";
  spec.replicates = 100;
  spec.r_fixed = 3;
  spec.c_R = 0.75;
  spec.c_T = 4.0;
  spec.rho = 0.1;
  spec.alpha = 3.0;
  spec.delta = 1e-3;
  return spec;
}

// 6. Effect of the sampling frequency: large gain up to m ~ 12, flat after.
void criterion_sampling_frequency_trend(Context& ctx) {
  bench::ExperimentSpec spec = simulation_defaults();
  spec.n_grid = {250};
  spec.m_grid = {2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
  spec.eps_grid = {1.0};
  spec.seed = 606;
  const bench::MonteCarloResults results = bench::run_monte_carlo(spec);
  double mse_2 = 0.0, mse_12 = 0.0, mse_20 = 0.0;
  for (const auto& cell : results.cells) {
    ctx.expect(cell.error.empty(), "cell failed: " + cell.error);
    if (cell.m == 2) mse_2 = cell.mse_mean;
    if (cell.m == 12) mse_12 = cell.mse_mean;
    if (cell.m == 20) mse_20 = cell.mse_mean;
  }
  ctx.note("MSE m=2: " + fmt(mse_2) + ", m=12: " + fmt(mse_12) +
           ", m=20: " + fmt(mse_20));
  ctx.expect(mse_2 >= 2.0 * mse_12,
             "MSE(m=2) = " + fmt(mse_2) + " < 2 x MSE(m=12) = " + fmt(mse_12));
  ctx.expect(mse_12 <= 2.0 * mse_20,
             "MSE(m=12) = " + fmt(mse_12) + " > 2 x MSE(m=20) = " + fmt(mse_20));
}

// 7. Effect of the sample size: decreasing trend at the 5% level.
void criterion_sample_size_trend(Context& ctx) {
  bench::ExperimentSpec spec = simulation_defaults();
  spec.n_grid = {100, 150, 200, 250, 300, 350, 400, 450, 500};
  spec.m_grid = {10};
  spec.eps_grid = {1.0};
  spec.seed = 707;
  const bench::MonteCarloResults results = bench::run_monte_carlo(spec);
  std::vector<double> log_n, mean, se;
  double mse_100 = 0.0, mse_500 = 0.0;
  for (const auto& cell : results.cells) {
    ctx.expect(cell.error.empty(), "cell failed: " + cell.error);
    log_n.push_back(std::log(static_cast<double>(cell.n)));
    mean.push_back(cell.mse_mean);
    se.push_back(cell.mse_se);
    if (cell.n == 100) mse_100 = cell.mse_mean;
    if (cell.n == 500) mse_500 = cell.mse_mean;
  }
  const double z = bench::decreasing_trend_z(log_n, mean, se);
  ctx.note("trend z = " + fmt(z) + ", MSE n=100: " + fmt(mse_100) +
           ", n=500: " + fmt(mse_500));
  ctx.expect(z < -1.645, "one-sided trend test not significant: z = " + fmt(z));
  ctx.expect(mse_100 >= 2.0 * mse_500,
             "MSE(n=100) = " + fmt(mse_100) + " < 2 x MSE(n=500) = " + fmt(mse_500));
}

// 8. Cost of privacy: epsilon = 0.5 vs epsilon = 8.
void criterion_privacy_cost_trend(Context& ctx) {
  bench::ExperimentSpec spec = simulation_defaults();
  spec.n_grid = {250};
  spec.m_grid = {10};
  spec.eps_grid = {0.5, 8.0};
  spec.seed = 808;
  const bench::MonteCarloResults results = bench::run_monte_carlo(spec);
  double mse_low = 0.0, mse_high = 0.0;
  for (const auto& cell : results.cells) {
    ctx.expect(cell.error.empty(), "cell failed: " + cell.error);
    if (cell.eps == 0.5) mse_low = cell.mse_mean;
    if (cell.eps == 8.0) mse_high = cell.mse_mean;
  }
  ctx.note("MSE eps=0.5: " + fmt(mse_low) + ", eps=8: " + fmt(mse_high));
  ctx.expect(mse_low >= 1.5 * mse_high,
             "MSE(eps=0.5) = " + fmt(mse_low) +
                 " < 1.5 x MSE(eps=8) = " + fmt(mse_high));
}

// ---------------------------------------------------------------------------
// 9. Federated reduction: S = 1 equals the central path bitwise; S = 4 wins.
void criterion_federated_reduction(Context& ctx) {
  const BuiltinTargets targets = builtin_targets();
  const EllipsoidSpec spec(SobolevParams(3.0, default_c_alpha()), 3);

  {
    std::mt19937_64 rng(909);
    const MeanDataset data = gen_mean_dataset(targets.mu1_fn, 250, 10, 0.5,
                                              MaternSpec(1.0, 4.0, 0.8), rng);
    GdConfig cfg;
    cfg.r = 3;
    cfg.T = default_rounds(250);
    cfg.seed = 1234;
    const PrivacyBudget budget(1.0, 1e-3);
    const EstimationReport central = dp_mean_cdp(data, cfg, budget, spec);
    const FederatedReport federated =
        dp_mean_fdp({MeanServer{data, budget}}, cfg, spec);
    bool bitwise = central.iterate_history.size() ==
                   federated.estimate.iterate_history.size();
    for (std::size_t t = 0; bitwise && t < central.iterate_history.size(); ++t) {
      bitwise = central.iterate_history[t] == federated.estimate.iterate_history[t];
    }
    ctx.expect(bitwise, "S=1 federated path deviates from the central path");
  }

  {
    bench::ExperimentSpec spec_mc = simulation_defaults();
    spec_mc.scenario = bench::Scenario::MeanFdp;
    spec_mc.n_grid = {250};
    spec_mc.m_grid = {10};
    spec_mc.eps_grid = {1.0};
    spec_mc.s_grid = {1, 4};
    spec_mc.seed = 910;
    const bench::MonteCarloResults results = bench::run_monte_carlo(spec_mc);
    double mse_s1 = 0.0, mse_s4 = 0.0;
    for (const auto& cell : results.cells) {
      ctx.expect(cell.error.empty(), "cell failed: " + cell.error);
      if (cell.S == 1) mse_s1 = cell.mse_mean;
      if (cell.S == 4) mse_s4 = cell.mse_mean;
    }
    ctx.note("MSE S=1: " + fmt(mse_s1) + ", S=4: " + fmt(mse_s4));
    ctx.expect(mse_s4 < mse_s1, "S=4 MSE " + fmt(mse_s4) +
                                    " not smaller than S=1 MSE " + fmt(mse_s1));
  }
}

// ---------------------------------------------------------------------------
// 10. Rate table and phase diagram spot checks, hand-verified.
void criterion_rate_phase_reports(Context& ctx) {
  // Rate table at n=250, m=10, eps=1, alpha=3: recomputed term by term.
  const auto rows = bench::rate_table(250, 10, 1.0, 4, 2, 3.0);
  const double n = 250, m = 10;
  const struct {
    int row;
    int term;
    double expected;
  } checks[] = {
      {0, 0, std::pow(n * m, -6.0 / 7.0)},
      {0, 1, std::pow(n * n * m, -0.75)},
      {0, 2, 1.0 / n},
      {0, 3, 1.0 / (n * n)},
      {1, 0, std::pow(4.0 * n * m, -6.0 / 7.0)},
      {1, 3, 1.0 / (4.0 * n * n)},
      {2, 0, 2.0 * std::pow(n * m, -6.0 / 7.0)},
      {2, 1, std::pow(2.0, 7.0 / 4.0) * std::pow(n * n * m, -0.75)},
      {2, 3, 4.0 / (n * n)},
      {3, 3, 4.0 / (4.0 * n * n)},
  };
  for (const auto& check : checks) {
    const double got = rows[check.row].terms[check.term].value;
    ctx.expect(std::abs(got / check.expected - 1.0) < 1e-12,
               "rate term (" + std::to_string(check.row) + "," +
                   std::to_string(check.term) + ") = " + fmt(got) + ", expected " +
                   fmt(check.expected));
  }
  // S = 1 federated rows collapse onto the central rows.
  const auto rows_s1 = bench::rate_table(250, 10, 1.0, 1, 2, 3.0);
  for (int t = 0; t < 4; ++t) {
    ctx.expect(rows_s1[1].terms[t].value == rows_s1[0].terms[t].value,
               "S=1 mean-fdp row differs from mean-cdp");
    ctx.expect(rows_s1[3].terms[t].value == rows_s1[2].terms[t].value,
               "S=1 vcm-fdp row differs from vcm-cdp");
  }

  // Phase diagram: 20 points at alpha = 3, n = 4096 (n^{1/6} = 4, n^{1/3} = 16,
  // n^{-1/2} = 1/64) plus a high-privacy block at n = 10^4; labels were worked
  // out from the inequalities by hand.
  const struct {
    double n, m, eps;
    const char* label;
  } points[] = {
      {4096, 2, 1.0, "low-privacy/sparse"},
      {4096, 3, 1.0, "low-privacy/sparse"},
      {4096, 3.999, 1.0, "low-privacy/sparse"},
      {4096, 4, 1.0, "low-privacy/mid"},  // boundary tie, denser side
      {4096, 5, 1.0, "low-privacy/mid"},
      {4096, 8, 1.0, "low-privacy/mid"},
      {4096, 15.9, 1.0, "low-privacy/mid"},
      {4096, 16, 1.0, "low-privacy/dense"},  // boundary tie, denser side
      {4096, 40, 1.0, "low-privacy/dense"},
      {4096, 500, 1.0, "low-privacy/dense"},
      {4096, 2, 0.015625, "low-privacy/sparse"},  // eps = n^{-1/2} tie, low side
      {4096, 2, 0.0156, "high-privacy/sparse"},
      {10000, 2, 1e-3, "high-privacy/sparse"},    // (n^2 eps^2)^{1/3} = 4.64
      {10000, 2.5, 1e-3, "high-privacy/sparse"},
      {10000, 5, 1e-3, "high-privacy/dense"},
      {10000, 50, 1e-3, "high-privacy/dense"},
      {10000, 1, 2e-3, "high-privacy/sparse"},    // (n^2 eps^2)^{1/3} = 7.37
      {10000, 8, 2e-3, "high-privacy/dense"},
      {4096, 10, 8.0, "low-privacy/mid"},
      {4096, 17, 0.5, "low-privacy/dense"},
  };
  for (const auto& point : points) {
    const bench::PhaseRegion region =
        bench::phase_region(point.n, point.m, point.eps, 3.0);
    ctx.expect(region.label == point.label,
               "phase(" + fmt(point.n) + "," + fmt(point.m) + "," + fmt(point.eps) +
                   ") = " + region.label + ", expected " + point.label);
  }
  ctx.expect(bench::phase_region(4096, 4, 1.0, 3.0).on_boundary,
             "m = n^{1/(2 alpha)} not flagged as a boundary");

  // Dominant cells match the reported rate values.
  const bench::PhaseRegion dense = bench::phase_region(4096, 40, 1.0, 3.0);
  ctx.expect(std::abs(dense.rate_value - 1.0 / 4096.0) < 1e-15,
             "dense cell rate mismatch");
}

// ---------------------------------------------------------------------------
// 11. Determinism of full runs and the transcript audit.
void criterion_determinism_and_audit(Context& ctx) {
  bench::ExperimentSpec spec = simulation_defaults();
  spec.scenario = bench::Scenario::MeanFdp;
  spec.n_grid = {60};
  spec.m_grid = {6};
  spec.eps_grid = {1.0};
  spec.s_grid = {2};
  spec.replicates = 10;
  spec.seed = 1111;

  {
    std::ostringstream a, b;
    bench::write_results_csv(bench::run_monte_carlo(spec), a);
    spec.threads = 3;  // same manifest, different execution schedule
    bench::write_results_csv(bench::run_monte_carlo(spec), b);
    ctx.expect(a.str() == b.str(), "rerun with the same manifest differs");
  }

  {
    std::ostringstream a, b;
    fednet::export_transcripts(bench::sample_protocol_run(spec), a);
    fednet::export_transcripts(bench::sample_protocol_run(spec), b);
    ctx.expect(a.str() == b.str(), "transcript logs differ across reruns");
  }

  {
    const fednet::ProtocolRun run = bench::sample_protocol_run(spec);
    std::vector<double> raw;
    const fednet::AuditReport clean = fednet::audit_run(run, raw);
    ctx.expect(clean.passed, "audit failed on a well-formed run");

    fednet::ProtocolRun bypass = run;
    bypass.log[1].payload = Eigen::VectorXd::Constant(bypass.log[1].payload.size(),
                                                      0.001);
    const fednet::AuditReport caught = fednet::audit_run(bypass, raw);
    ctx.expect(!caught.passed, "audit accepted a payload that bypassed the mechanism");

    // Round-trip through the line format stays audit-clean.
    std::stringstream io;
    fednet::export_transcripts(run, io);
    const fednet::AuditReport reloaded =
        fednet::audit_run(fednet::import_transcripts(io), raw);
    ctx.expect(reloaded.passed, "audit failed after export/import round trip");
  }
}

struct Criterion {
  int id;
  std::string name;
  std::function<void(Context&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "mechanism calibration (tail bound + empirical variance)",
       criterion_mechanism_calibration},
      {2, "anisotropic variance advantage", criterion_anisotropic_advantage},
      {3, "ellipsoid projection vs QP oracle", criterion_projection_oracle},
      {4, "noise-off equivalence with least squares", criterion_noise_off_equivalence},
      {5, "clipped gradient sensitivity bound", criterion_sensitivity_bound},
      {6, "sampling frequency trend (setting 1)", criterion_sampling_frequency_trend},
      {7, "sample size trend (setting 2)", criterion_sample_size_trend},
      {8, "privacy cost trend", criterion_privacy_cost_trend},
      {9, "federated reduction and gain", criterion_federated_reduction},
      {10, "rate table and phase diagram spot checks", criterion_rate_phase_reports},
      {11, "determinism and transcript audit", criterion_determinism_and_audit},
  };

  int failed = 0;
  for (const auto& criterion : criteria) {
    Context ctx;
    const auto start = std::chrono::steady_clock::now();
    try {
      criterion.run(ctx);
    } catch (const std::exception& e) {
      ctx.failures.push_back(std::string("exception: ") + e.what());
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    const bool ok = ctx.failures.empty();
    failed += ok ? 0 : 1;
    std::printf("[%s] criterion %2d: %s (%.1fs)\n", ok ? "PASS" : "FAIL",
                criterion.id, criterion.name.c_str(), seconds);
    for (const auto& note : ctx.notes) {
      std::printf("       note: %s\n", note.c_str());
    }
    if (!ok) {
      int shown = 0;
      for (const auto& failure : ctx.failures) {
        std::printf("       fail: %s\n", failure.c_str());
        if (++shown >= 5) {
          std::printf("       ... %zu more\n", ctx.failures.size() - 5);
          break;
        }
      }
    }
  }
  std::printf("%d/%zu criteria passed\n",
              static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
