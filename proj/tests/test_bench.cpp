#include "dpfda/bench.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"

using namespace dpfda;
using namespace dpfda::bench;

namespace {

std::string write_temp(const std::string& contents, const std::string& name) {
  const std::string path = "/tmp/dpfda_test_" + name;
  std::ofstream out(path);
  out << contents;
  return path;
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("spec parsing") {
  SUBCASE("flat file") {
    std::istringstream in(
        "# comment\n"
        "scenario = mean-cdp\n"
        "target = mu1\n"
        "n = 250\n"
        "m = 2,4,6\n"
        "eps = 0.5,1\n"
        "replicates = 7\n"
        "seed = 42\n"
        "rho = 0.2\n"
        "r = 3\n"
        "noise = off\n");
    const ExperimentSpec spec = parse_spec(in);
    CHECK(spec.scenario == Scenario::MeanCdp);
    CHECK(spec.m_grid == std::vector<int>{2, 4, 6});
    CHECK(spec.eps_grid == std::vector<double>{0.5, 1.0});
    CHECK(spec.replicates == 7);
    CHECK(spec.seed == 42);
    CHECK(spec.rho == 0.2);
    CHECK(spec.r_fixed == 3);
    CHECK_FALSE(spec.noise_enabled);
  }

  SUBCASE("sections") {
    const std::string text =
        "seed = 9\n"
        "[small]\n"
        "n = 10\n"
        "[large]\n"
        "n = 100\n";
    std::istringstream a(text);
    const ExperimentSpec small = parse_spec(a, "small");
    CHECK(small.n_grid == std::vector<int>{10});
    CHECK(small.seed == 9);
    std::istringstream b(text);
    const ExperimentSpec large = parse_spec(b, "large");
    CHECK(large.n_grid == std::vector<int>{100});
    std::istringstream c(text);
    CHECK_THROWS_WITH_AS(parse_spec(c), doctest::Contains("sections"),
                         std::runtime_error);
    std::istringstream d(text);
    CHECK_THROWS(parse_spec(d, "missing"));
  }

  SUBCASE("bad input is rejected with a line number") {
    std::istringstream in("n = 10\nbogus_key = 3\n");
    CHECK_THROWS_WITH_AS(parse_spec(in), doctest::Contains("line 2"),
                         std::runtime_error);
  }
}

TEST_CASE("monte carlo harness") {
  SUBCASE("setting-1 grid enumerations with one noise-off replicate") {
    ExperimentSpec spec;
    spec.scenario = Scenario::MeanCdp;
    spec.target = "mu1";
    spec.n_grid = {250};
    spec.m_grid = {2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
    spec.eps_grid = {0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0};
    spec.replicates = 1;
    spec.r_fixed = 3;
    spec.noise_enabled = false;
    spec.gp_sigma2 = 0.0;
    spec.noise_sd = 0.0;
    spec.seed = 5;
    const MonteCarloResults results = run_monte_carlo(spec);
    REQUIRE(results.cells.size() == 120);
    for (const auto& cell : results.cells) {
      CHECK(cell.error.empty());
      CHECK(cell.mse_se == 0.0);  // single replicate
      CHECK(cell.T_used == 23);
      CHECK(cell.r_used == 3);
      CHECK(std::isfinite(cell.mse_mean));
    }
    // Noiseless, clip barely binding: errors should be small at larger m.
    CHECK(results.cells.back().mse_mean < 1e-2);
  }

  SUBCASE("doubling replicates moves means by less than 3 pooled SEs") {
    ExperimentSpec spec;
    spec.scenario = Scenario::MeanCdp;
    spec.n_grid = {60};
    spec.m_grid = {5};
    spec.eps_grid = {1.0};
    spec.r_fixed = 3;
    spec.seed = 11;
    spec.replicates = 40;
    const CellResult a = run_monte_carlo(spec).cells.front();
    spec.replicates = 80;
    const CellResult b = run_monte_carlo(spec).cells.front();
    const double pooled = std::sqrt(a.mse_se * a.mse_se + b.mse_se * b.mse_se);
    CHECK(std::abs(a.mse_mean - b.mse_mean) < 3.0 * pooled);
  }

  SUBCASE("output is independent of the thread count") {
    ExperimentSpec spec;
    spec.scenario = Scenario::MeanFdp;
    spec.n_grid = {30};
    spec.m_grid = {4};
    spec.eps_grid = {1.0};
    spec.s_grid = {2};
    spec.r_fixed = 3;
    spec.replicates = 12;
    spec.seed = 21;
    spec.threads = 1;
    std::ostringstream serial;
    write_results_csv(run_monte_carlo(spec), serial);
    spec.threads = 4;
    std::ostringstream parallel;
    write_results_csv(run_monte_carlo(spec), parallel);
    CHECK(serial.str() == parallel.str());
    CHECK(serial.str().find("mse_mean") != std::string::npos);
  }

  SUBCASE("vcm smoke run") {
    ExperimentSpec spec;
    spec.scenario = Scenario::VcmCdp;
    spec.n_grid = {40};
    spec.m_grid = {5};
    spec.eps_grid = {1.0};
    spec.d_grid = {1};
    spec.r_fixed = 3;
    spec.replicates = 3;
    spec.seed = 31;
    const MonteCarloResults results = run_monte_carlo(spec);
    REQUIRE(results.cells.size() == 1);
    CHECK(results.cells.front().error.empty());
    CHECK(std::isfinite(results.cells.front().mse_mean));
  }

  SUBCASE("budget violations are recorded per cell, not fatal") {
    ExperimentSpec spec;
    spec.n_grid = {30};
    spec.m_grid = {4};
    spec.eps_grid = {50.0};  // violates 4 log(2/delta) >= eps at delta = 1e-3
    spec.delta = 0.5;
    spec.r_fixed = 3;
    spec.replicates = 2;
    const MonteCarloResults results = run_monte_carlo(spec);
    REQUIRE(results.cells.size() == 1);
    CHECK_FALSE(results.cells.front().error.empty());
    CHECK(std::isnan(results.cells.front().mse_mean));
  }
}

TEST_CASE("rate table") {
  const double n = 250, m = 10, eps = 1.0, alpha = 3.0;
  const auto rows = rate_table(n, m, eps, 4, 2, alpha);
  REQUIRE(rows.size() == 4);

  const auto& cdp = rows[0];
  CHECK(cdp.setting == "mean-cdp");
  CHECK(cdp.terms[0].value ==
        doctest::Approx(std::pow(n * m, -6.0 / 7.0)).epsilon(1e-12));
  CHECK(cdp.terms[1].value ==
        doctest::Approx(std::pow(n * n * m * eps * eps, -0.75)).epsilon(1e-12));
  CHECK(cdp.terms[2].value == doctest::Approx(1.0 / n).epsilon(1e-12));
  CHECK(cdp.terms[3].value == doctest::Approx(1.0 / (n * n)).epsilon(1e-12));

  // S = 1 federated row equals the central row.
  const auto rows_s1 = rate_table(n, m, eps, 1, 2, alpha);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(rows_s1[1].terms[i].value == doctest::Approx(rows_s1[0].terms[i].value));
  }

  // Large eps: the privacy terms vanish and a nonprivate term dominates.
  const auto rows_free = rate_table(n, m, std::numeric_limits<double>::infinity(), 1,
                                    1, alpha);
  for (const auto& row : rows_free) {
    CHECK((row.dominant == 0 || row.dominant == 2));
  }

  // VCM rows carry the dimension factors.
  const double dd = 2.0;
  CHECK(rows[2].terms[0].value ==
        doctest::Approx(dd * std::pow(n * m, -6.0 / 7.0)).epsilon(1e-12));
  CHECK(rows[2].terms[1].value ==
        doctest::Approx(std::pow(dd, 7.0 / 4.0) *
                        std::pow(n * n * m * eps * eps, -0.75))
            .epsilon(1e-12));
  CHECK(rows[2].terms[3].value ==
        doctest::Approx(dd * dd / (n * n * eps * eps)).epsilon(1e-12));
}

TEST_CASE("phase regions") {
  const double alpha = 3.0;

  SUBCASE("high privacy, sparse") {
    // eps well below n^{-1/2}; m below (n^2 eps^2)^{1/alpha}
    const PhaseRegion region = phase_region(10000.0, 2.0, 1e-3, alpha);
    CHECK(region.label == "high-privacy/sparse");
    CHECK(region.rate_value ==
          doctest::Approx(std::pow(1e8 * 2.0 * 1e-6, -0.75)).epsilon(1e-12));
  }

  SUBCASE("high privacy, dense") {
    const PhaseRegion region = phase_region(10000.0, 50.0, 1e-3, alpha);
    CHECK(region.label == "high-privacy/dense");
    CHECK(region.rate_value == doctest::Approx(1.0 / 100.0).epsilon(1e-12));
  }

  SUBCASE("low privacy cells") {
    // n = 4096: n^{1/6} = 4, n^{1/3} = 16
    CHECK(phase_region(4096.0, 3.0, 1.0, alpha).label == "low-privacy/sparse");
    CHECK(phase_region(4096.0, 8.0, 1.0, alpha).label == "low-privacy/mid");
    const PhaseRegion dense = phase_region(4096.0, 40.0, 1.0, alpha);
    CHECK(dense.label == "low-privacy/dense");
    CHECK(dense.rate == "n^(-1)");
    CHECK(dense.rate_value == doctest::Approx(1.0 / 4096.0).epsilon(1e-12));
  }

  SUBCASE("boundary ties go to the denser side and are flagged") {
    const PhaseRegion region = phase_region(4096.0, 4.0, 1.0, alpha);
    CHECK(region.label == "low-privacy/mid");
    CHECK(region.on_boundary);
  }
}

TEST_CASE("csv ingestion") {
  SUBCASE("three-subject toy file") {
    const std::string path = write_temp(
        "subject_id,x,y\n"
        "a,46,10\n"
        "a,50,12\n"
        "b,55,11\n"
        "b,63,14\n"
        "b,60,13\n"
        "c,47,9\n",
        "toy.csv");
    const IngestResult result = ingest_csv(path, true);
    CHECK_FALSE(result.is_vcm);
    REQUIRE(result.mean.n() == 3);
    CHECK(result.mean.subjects[0].x.size() == 2);
    CHECK(result.mean.subjects[1].x.size() == 3);
    CHECK(result.mean.subjects[2].x.size() == 1);
    CHECK(result.x_map.offset == 46.0);
    CHECK(result.x_map.scale == 17.0);  // [46, 63] -> [0, 1]
    CHECK(result.mean.subjects[1].x(1) == doctest::Approx(1.0));
    CHECK(result.y_map.to_unit(9.0) == 0.0);
    CHECK(result.y_map.to_unit(14.0) == 1.0);
    std::remove(path.c_str());
  }

  SUBCASE("vcm columns") {
    const std::string path = write_temp(
        "subject_id,x,y,g_1,g_2\n"
        "a,0.1,1.0,0.5,-0.5\n"
        "a,0.2,1.1,0.5,-0.5\n"
        "b,0.3,0.9,-0.2,0.8\n",
        "vcm.csv");
    const IngestResult result = ingest_csv(path, false);
    CHECK(result.is_vcm);
    REQUIRE(result.vcm.n() == 2);
    CHECK(result.vcm.d() == 2);
    CHECK(result.vcm.subjects[0].g(0) == 1.0);
    CHECK(result.vcm.subjects[0].g(1) == 0.5);
    std::remove(path.c_str());
  }

  SUBCASE("errors carry line numbers") {
    const std::string bad_row = write_temp(
        "subject_id,x,y\n"
        "a,1,2\n"
        "a,oops,3\n",
        "bad.csv");
    CHECK_THROWS_WITH_AS(ingest_csv(bad_row, false), doctest::Contains("line 3"),
                         std::runtime_error);
    std::remove(bad_row.c_str());

    const std::string constant_y = write_temp(
        "subject_id,x,y\n"
        "a,1,2\n"
        "b,3,2\n",
        "const.csv");
    CHECK_THROWS_WITH_AS(ingest_csv(constant_y, true),
                         doctest::Contains("zero range"), std::runtime_error);
    std::remove(constant_y.c_str());

    const std::string changing_g = write_temp(
        "subject_id,x,y,g_1\n"
        "a,1,2,0.5\n"
        "a,2,3,0.6\n",
        "chg.csv");
    CHECK_THROWS(ingest_csv(changing_g, false));
    std::remove(changing_g.c_str());
  }

  SUBCASE("export then ingest round-trips exactly") {
    std::mt19937_64 rng(71);
    const MeanDataset data = gen_mean_dataset(builtin_targets().mu1_fn, 6, 4, 0.5,
                                              MaternSpec(1.0, 4.0, 0.8), rng);
    std::vector<std::string> ids;
    for (int i = 0; i < 6; ++i) {
      ids.push_back("s" + std::to_string(i));
    }
    std::ostringstream out;
    export_mean_csv(data, ids, out);
    const std::string path = write_temp(out.str(), "roundtrip.csv");
    const IngestResult result = ingest_csv(path, false);
    REQUIRE(result.mean.n() == 6);
    for (int i = 0; i < 6; ++i) {
      CHECK(result.mean.subjects[i].x == data.subjects[i].x);
      CHECK(result.mean.subjects[i].y == data.subjects[i].y);
    }
    std::remove(path.c_str());
  }
}

TEST_CASE("domain reflection") {
  std::mt19937_64 rng(81);
  const MeanDataset data = gen_mean_dataset(builtin_targets().mu1_fn, 4, 3, 0.0,
                                            MaternSpec(0.0, 4.0, 0.8), rng);
  const MeanDataset reflected = reflect_domain(data);
  REQUIRE(reflected.subjects[0].x.size() == 6);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double u = data.subjects[i].x(j) / 2.0;
      CHECK(reflected.subjects[i].x(j) == u);
      CHECK(reflected.subjects[i].x(3 + j) == 1.0 - u);
      CHECK(reflected.subjects[i].y(j) == reflected.subjects[i].y(3 + j));
    }
  }
  CoeffVector a(3);
  a << 0.5, 0.2, -0.1;
  CHECK(eval_reflected(a, 0.6) == eval_function(a, 0.3));
}

TEST_CASE("real data pipeline") {
  // Synthetic stand-in with a known smooth signal on a non-unit domain.
  std::ostringstream csv;
  csv << "subject_id,x,y\n";
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> age(46.0, 63.0);
  std::normal_distribution<double> noise(0.0, 0.15);
  for (int i = 0; i < 60; ++i) {
    for (int j = 0; j < 5; ++j) {
      const double x = age(rng);
      const double y = 2.0 + std::sin((x - 46.0) / 17.0 * 2.5) + noise(rng);
      csv << "s" << i << ',' << x << ',' << y << "\n";
    }
  }
  const std::string path = write_temp(csv.str(), "real.csv");
  const IngestResult data = ingest_csv(path, true);
  std::remove(path.c_str());

  RealDataOptions options;
  options.replicates = 30;
  options.eps = {0.5, 1.0, 3.0, 8.0};
  options.c_R = 0.75;  // synthetic scale, not the survey-data constant
  options.rho = 0.1;
  options.seed = 17;
  options.band_points = 21;

  const RealDataResults results = real_data_pipeline(data, options);
  CHECK(results.n_train == 20);
  CHECK(results.n_test == 40);
  REQUIRE(results.rows.size() == 4);

  SUBCASE("distance trend decreases in eps") {
    std::vector<double> eps, mean, se;
    for (const auto& row : results.rows) {
      eps.push_back(std::log(row.eps));
      mean.push_back(row.dist_mean);
      se.push_back(row.dist_se);
    }
    CHECK(decreasing_trend_z(eps, mean, se) < -1.645);
    CHECK(results.rows.front().dist_mean > results.rows.back().dist_mean);
  }

  SUBCASE("noise off leaves only split variability") {
    RealDataOptions quiet = options;
    quiet.noise_enabled = false;
    quiet.eps = {1.0};
    quiet.replicates = 30;
    const RealDataResults baseline = real_data_pipeline(data, quiet);
    for (const auto& row : results.rows) {
      CHECK(baseline.rows.front().dist_mean < row.dist_mean);
    }
  }

  SUBCASE("bands are ordered and de-normalized") {
    for (const auto& band : results.bands) {
      CHECK(band.x(0) == doctest::Approx(data.x_map.offset));
      CHECK(band.x(band.x.size() - 1) ==
            doctest::Approx(data.x_map.offset + data.x_map.scale));
      for (int p = 0; p < band.x.size(); ++p) {
        CHECK(band.lo(p) <= band.mean(p) + 1e-12);
        CHECK(band.mean(p) <= band.hi(p) + 1e-12);
      }
    }
    std::ostringstream bands_csv;
    write_bands_csv(results, bands_csv);
    CHECK(bands_csv.str().find("eps,x,mean,lo,hi") != std::string::npos);
  }

  SUBCASE("deterministic output") {
    std::ostringstream a, b;
    write_realdata_csv(real_data_pipeline(data, options), a);
    write_realdata_csv(real_data_pipeline(data, options), b);
    CHECK(a.str() == b.str());
  }
}

TEST_CASE("split arithmetic at survey scale") {
  IngestResult data;
  std::mt19937_64 rng(678);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  data.mean.subjects.resize(678);
  for (auto& subject : data.mean.subjects) {
    subject.x.resize(2);
    subject.y.resize(2);
    for (int j = 0; j < 2; ++j) {
      subject.x(j) = unif(rng);
      subject.y(j) = 0.2 + 0.1 * unif(rng);
    }
  }
  RealDataOptions options;
  options.replicates = 1;
  options.eps = {8.0};
  options.c_R = 0.75;
  options.rho = 0.1;
  options.band_points = 5;
  const RealDataResults results = real_data_pipeline(data, options);
  CHECK(results.n_train == 226);  // one third of 678
  CHECK(results.n_test == 452);
}

TEST_CASE("trend statistic") {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  const std::vector<double> falling{4.0, 3.0, 2.0, 1.0};
  const std::vector<double> se{0.05, 0.05, 0.05, 0.05};
  CHECK(decreasing_trend_z(x, falling, se) < -10.0);
  const std::vector<double> flat{1.0, 1.02, 0.99, 1.01};
  CHECK(std::abs(decreasing_trend_z(x, flat, se)) < 1.0);
  CHECK_THROWS(decreasing_trend_z({1.0}, {1.0}, {1.0}));
}

}  // TEST_SUITE
