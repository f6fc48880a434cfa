#include "dpfda/bench.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "dpfda/rng.hpp"

namespace dpfda {
namespace bench {

namespace {

constexpr const char* kVersion = "dpfda 0.1.0";

constexpr std::uint64_t kDataTag = 0x64617461;   // dataset generation
constexpr std::uint64_t kEstTag = 0x65737469;    // estimator noise seeds
constexpr std::uint64_t kSplitTag = 0x73706c74;  // train/test splitting
constexpr std::uint64_t kBandTag = 0x62616e64;   // full-data band replicates

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t double_key(double v) { return std::bit_cast<std::uint64_t>(v); }

int resolve_threads(int requested) {
  if (requested > 0) {
    return requested;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs `count` jobs on a small pool; each job writes only its own slot, so
/// completion order cannot affect results.
template <typename Fn>
void parallel_for(int count, int threads, const Fn& fn) {
  threads = std::min(std::max(threads, 1), count);
  if (threads == 1) {
    for (int i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= count) {
          return;
        }
        fn(i);
      }
    });
  }
  for (auto& t : pool) {
    t.join();
  }
}

struct SummaryStats {
  double mean = 0.0;
  double se = 0.0;
};

SummaryStats summarize(const std::vector<double>& values) {
  SummaryStats s;
  const double count = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / count;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) {
      ss += (v - s.mean) * (v - s.mean);
    }
    s.se = std::sqrt(ss / (count - 1.0)) / std::sqrt(count);
  }
  return s;
}

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= values.size()) {
    return values.back();
  }
  return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) {
    return "";
  }
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string token;
  std::istringstream ss(s);
  while (std::getline(ss, token, sep)) {
    parts.push_back(trim(token));
  }
  if (!s.empty() && s.back() == sep) {
    parts.push_back("");
  }
  return parts;
}

double parse_double(const std::string& token, int line_no) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": not a number: '" + token + "'");
  }
  if (pos != token.size()) {
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": trailing characters in number: '" + token + "'");
  }
  return v;
}

long long parse_int(const std::string& token, int line_no) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(token, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": not an integer: '" + token + "'");
  }
  if (pos != token.size()) {
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": trailing characters in integer: '" + token + "'");
  }
  return v;
}

}  // namespace

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::MeanCdp:
      return "mean-cdp";
    case Scenario::MeanFdp:
      return "mean-fdp";
    case Scenario::VcmCdp:
      return "vcm-cdp";
    case Scenario::VcmFdp:
      return "vcm-fdp";
  }
  return "unknown";
}

Scenario scenario_from_string(const std::string& name) {
  if (name == "mean-cdp") return Scenario::MeanCdp;
  if (name == "mean-fdp") return Scenario::MeanFdp;
  if (name == "vcm-cdp") return Scenario::VcmCdp;
  if (name == "vcm-fdp") return Scenario::VcmFdp;
  throw std::invalid_argument("unknown scenario: " + name);
}

namespace {

bool is_vcm_scenario(Scenario s) {
  return s == Scenario::VcmCdp || s == Scenario::VcmFdp;
}

bool is_fdp_scenario(Scenario s) {
  return s == Scenario::MeanFdp || s == Scenario::VcmFdp;
}

struct CellKey {
  int n, m, S, d;
  double eps;
};

std::vector<CoeffVector> vcm_truth_blocks(const CoeffVector& base, int d) {
  std::vector<CoeffVector> blocks(d + 1);
  for (int k = 0; k <= d; ++k) {
    blocks[k] = base / static_cast<double>(k + 1);
  }
  return blocks;
}

double vcm_error_sq(const Eigen::VectorXd& estimate, int r,
                    const std::vector<CoeffVector>& truth) {
  double total = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const double dist = l2_distance(
        estimate.segment(static_cast<Eigen::Index>(k) * r, r), truth[k]);
    total += dist * dist;
  }
  return total;
}

/// One Monte Carlo replicate for one grid cell; returns the squared L2 error.
/// For federated scenarios the protocol run is exposed through protocol_out.
double run_replicate(const ExperimentSpec& spec, const CellKey& key, int r, int T,
                     const EllipsoidSpec& ell, const BuiltinTargets& targets,
                     const Quadrature& quad, int rep,
                     fednet::ProtocolRun* protocol_out = nullptr) {
  const RngStream root{spec.seed};
  const auto data_stream = [&](int server) {
    return root.substream(kDataTag)
        .substream(static_cast<std::uint64_t>(key.n),
                   static_cast<std::uint64_t>(key.m),
                   static_cast<std::uint64_t>(key.d))
        .substream(static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(server));
  };
  GdConfig cfg;
  cfg.r = r;
  cfg.rho = spec.rho;
  cfg.T = T;
  cfg.c_r_const = spec.c_R;
  cfg.eta = spec.eta;
  cfg.noise_enabled = spec.noise_enabled;
  cfg.seed = root.substream(kEstTag)
                 .substream(static_cast<std::uint64_t>(key.n),
                            static_cast<std::uint64_t>(key.m),
                            static_cast<std::uint64_t>(key.S))
                 .substream(double_key(key.eps), static_cast<std::uint64_t>(rep))
                 .seed;
  const PrivacyBudget budget =
      spec.noise_enabled ? PrivacyBudget(key.eps, spec.delta) : PrivacyBudget::disabled();

  if (!is_vcm_scenario(spec.scenario)) {
    const auto& target_fn = spec.target == "mu1" ? targets.mu1_fn : targets.mu2_fn;
    const MaternSpec matern(spec.gp_sigma2, 4.0, 0.8);
    Eigen::VectorXd coeffs;
    if (spec.scenario == Scenario::MeanCdp) {
      auto rng = data_stream(0).engine();
      const MeanDataset data =
          gen_mean_dataset(target_fn, key.n, key.m, spec.noise_sd, matern, rng);
      coeffs = dp_mean_cdp(data, cfg, budget, ell).coefficients;
    } else {
      std::vector<MeanServer> servers;
      servers.reserve(key.S);
      for (int s = 0; s < key.S; ++s) {
        auto rng = data_stream(s).engine();
        servers.push_back(MeanServer{
            gen_mean_dataset(target_fn, key.n, key.m, spec.noise_sd, matern, rng),
            budget});
      }
      FederatedReport fed = dp_mean_fdp(servers, cfg, ell);
      if (protocol_out != nullptr) {
        *protocol_out = std::move(fed.protocol);
      }
      coeffs = std::move(fed.estimate.coefficients);
    }
    if (spec.target == "mu1") {
      const double dist = l2_distance(coeffs, targets.mu1);
      return dist * dist;
    }
    const double dist = l2_distance_fn(coeffs, targets.mu2_fn, quad);
    return dist * dist;
  }

  const std::vector<CoeffVector> truth = vcm_truth_blocks(targets.mu1, key.d);
  Eigen::VectorXd estimate;
  if (spec.scenario == Scenario::VcmCdp) {
    auto rng = data_stream(0).engine();
    const VcmDataset data =
        gen_vcm_dataset(truth, key.d, key.n, key.m, spec.noise_sd, rng);
    estimate = dp_vcm_cdp(data, cfg, budget, ell).coefficients;
  } else {
    std::vector<VcmServer> servers;
    servers.reserve(key.S);
    for (int s = 0; s < key.S; ++s) {
      auto rng = data_stream(s).engine();
      servers.push_back(VcmServer{
          gen_vcm_dataset(truth, key.d, key.n, key.m, spec.noise_sd, rng), budget});
    }
    FederatedReport fed = dp_vcm_fdp(servers, cfg, ell);
    if (protocol_out != nullptr) {
      *protocol_out = std::move(fed.protocol);
    }
    estimate = std::move(fed.estimate.coefficients);
  }
  return vcm_error_sq(estimate, r, truth);
}

}  // namespace

MonteCarloResults run_monte_carlo(const ExperimentSpec& spec) {
  if (spec.replicates < 1) {
    throw std::invalid_argument("run_monte_carlo: replicates must be >= 1");
  }
  if (spec.n_grid.empty() || spec.m_grid.empty() || spec.eps_grid.empty()) {
    throw std::invalid_argument("run_monte_carlo: empty grid");
  }
  if (spec.target != "mu1" && spec.target != "mu2") {
    throw std::invalid_argument("run_monte_carlo: unknown target " + spec.target);
  }
  if (is_vcm_scenario(spec.scenario) && spec.target == "mu2") {
    throw std::invalid_argument("run_monte_carlo: mu2 is a mean-only target");
  }

  const double c_alpha = spec.c_alpha > 0.0 ? spec.c_alpha : default_c_alpha();
  const BuiltinTargets targets = builtin_targets();
  const Quadrature quad = Quadrature::simpson(2049);
  const std::vector<int> s_values =
      is_fdp_scenario(spec.scenario) ? spec.s_grid : std::vector<int>{1};
  const std::vector<int> d_values =
      is_vcm_scenario(spec.scenario) ? spec.d_grid : std::vector<int>{0};
  const int threads = resolve_threads(spec.threads);

  MonteCarloResults results;
  results.spec = spec;
  for (int n : spec.n_grid) {
    for (int m : spec.m_grid) {
      for (double eps : spec.eps_grid) {
        for (int S : s_values) {
          for (int d : d_values) {
            CellKey key{n, m, S, d, eps};
            CellResult cell;
            cell.n = n;
            cell.m = m;
            cell.eps = eps;
            cell.S = S;
            cell.d = d;
            cell.replicates = spec.replicates;
            try {
              const double sel_eps =
                  spec.noise_enabled ? eps : std::numeric_limits<double>::infinity();
              int r = spec.r_fixed;
              if (r <= 0) {
                if (!is_vcm_scenario(spec.scenario)) {
                  r = select_r_mean_fdp(S, n, m, sel_eps, spec.alpha, spec.c_r);
                } else {
                  r = select_r_vcm_fdp(S, n, m, d, sel_eps, spec.alpha, spec.c_r);
                }
              }
              const int T = default_rounds(S * n, spec.c_T);
              cell.r_used = r;
              cell.T_used = T;
              const EllipsoidSpec ell(SobolevParams(spec.alpha, c_alpha), r);

              std::vector<double> errors(spec.replicates, 0.0);
              std::vector<std::string> failures(spec.replicates);
              parallel_for(spec.replicates, threads, [&](int rep) {
                try {
                  errors[rep] = run_replicate(spec, key, r, T, ell, targets, quad, rep);
                } catch (const std::exception& e) {
                  failures[rep] = e.what();
                }
              });
              for (const auto& failure : failures) {
                if (!failure.empty()) {
                  throw std::runtime_error(failure);
                }
              }
              const SummaryStats stats = summarize(errors);
              cell.mse_mean = stats.mean;
              cell.mse_se = stats.se;
            } catch (const std::exception& e) {
              cell.error = e.what();
              cell.mse_mean = std::numeric_limits<double>::quiet_NaN();
              cell.mse_se = std::numeric_limits<double>::quiet_NaN();
            }
            results.cells.push_back(std::move(cell));
          }
        }
      }
    }
  }
  return results;
}

fednet::ProtocolRun sample_protocol_run(const ExperimentSpec& spec) {
  if (!is_fdp_scenario(spec.scenario)) {
    throw std::invalid_argument(
        "sample_protocol_run: transcripts exist only for federated scenarios");
  }
  if (spec.n_grid.empty() || spec.m_grid.empty() || spec.eps_grid.empty() ||
      spec.s_grid.empty()) {
    throw std::invalid_argument("sample_protocol_run: empty grid");
  }
  const CellKey key{spec.n_grid.front(), spec.m_grid.front(), spec.s_grid.front(),
                    is_vcm_scenario(spec.scenario) ? spec.d_grid.front() : 0,
                    spec.eps_grid.front()};
  const double sel_eps =
      spec.noise_enabled ? key.eps : std::numeric_limits<double>::infinity();
  int r = spec.r_fixed;
  if (r <= 0) {
    r = is_vcm_scenario(spec.scenario)
            ? select_r_vcm_fdp(key.S, key.n, key.m, key.d, sel_eps, spec.alpha,
                               spec.c_r)
            : select_r_mean_fdp(key.S, key.n, key.m, sel_eps, spec.alpha, spec.c_r);
  }
  const int T = default_rounds(key.S * key.n, spec.c_T);
  const double c_alpha = spec.c_alpha > 0.0 ? spec.c_alpha : default_c_alpha();
  const EllipsoidSpec ell(SobolevParams(spec.alpha, c_alpha), r);
  fednet::ProtocolRun protocol;
  run_replicate(spec, key, r, T, ell, builtin_targets(), Quadrature::simpson(2049),
                0, &protocol);
  return protocol;
}

namespace {

void write_manifest(const ExperimentSpec& spec, const char* command,
                    std::ostream& out) {
  out << "# " << kVersion << " " << command << "\n";
  out << "# scenario=" << to_string(spec.scenario) << "\n";
  out << "# target=" << spec.target << "\n";
  const auto write_grid = [&out](const char* name, const auto& grid) {
    out << "# " << name << "=";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      out << (i == 0 ? "" : ",") << grid[i];
    }
    out << "\n";
  };
  write_grid("n", spec.n_grid);
  write_grid("m", spec.m_grid);
  out << "# eps=";
  for (std::size_t i = 0; i < spec.eps_grid.size(); ++i) {
    out << (i == 0 ? "" : ",") << fmt(spec.eps_grid[i]);
  }
  out << "\n";
  write_grid("S", spec.s_grid);
  write_grid("d", spec.d_grid);
  out << "# replicates=" << spec.replicates << "\n";
  out << "# seed=" << spec.seed << "\n";
  out << "# c_R=" << fmt(spec.c_R) << " c_T=" << fmt(spec.c_T) << " c_r="
      << fmt(spec.c_r) << " rho=" << fmt(spec.rho) << "\n";
  out << "# alpha=" << fmt(spec.alpha) << " delta=" << fmt(spec.delta)
      << " eta=" << fmt(spec.eta) << " c_alpha="
      << fmt(spec.c_alpha > 0.0 ? spec.c_alpha : default_c_alpha()) << "\n";
  out << "# r_fixed=" << spec.r_fixed << " gp_sigma2=" << fmt(spec.gp_sigma2)
      << " noise_sd=" << fmt(spec.noise_sd) << " noise="
      << (spec.noise_enabled ? "on" : "off") << "\n";
}

}  // namespace

void write_results_csv(const MonteCarloResults& results, std::ostream& out) {
  write_manifest(results.spec, "simulate", out);
  out << "scenario,target,n,m,eps,S,d,replicate_count,mse_mean,mse_se,r_used,T_used\n";
  for (const auto& cell : results.cells) {
    out << to_string(results.spec.scenario) << ',' << results.spec.target << ','
        << cell.n << ',' << cell.m << ',' << fmt(cell.eps) << ',' << cell.S << ','
        << cell.d << ',' << cell.replicates << ',' << fmt(cell.mse_mean) << ','
        << fmt(cell.mse_se) << ',' << cell.r_used << ',' << cell.T_used << "\n";
  }
  for (const auto& cell : results.cells) {
    if (!cell.error.empty()) {
      out << "# cell-error n=" << cell.n << " m=" << cell.m << " eps="
          << fmt(cell.eps) << " S=" << cell.S << " d=" << cell.d << ": "
          << cell.error << "\n";
    }
  }
}

ExperimentSpec parse_spec(std::istream& in, const std::string& section) {
  ExperimentSpec spec;
  std::string line;
  int line_no = 0;
  std::string current_section;
  bool saw_section = false;
  bool section_found = section.empty();

  const auto parse_int_list = [](const std::string& value, int line_no_) {
    std::vector<int> out;
    for (const auto& token : split(value, ',')) {
      out.push_back(static_cast<int>(parse_int(token, line_no_)));
    }
    return out;
  };
  const auto parse_double_list = [](const std::string& value, int line_no_) {
    std::vector<double> out;
    for (const auto& token : split(value, ',')) {
      out.push_back(parse_double(token, line_no_));
    }
    return out;
  };

  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') {
      continue;
    }
    if (text.front() == '[' && text.back() == ']') {
      saw_section = true;
      current_section = trim(text.substr(1, text.size() - 2));
      if (current_section == section) {
        section_found = true;
      }
      continue;
    }
    if (saw_section) {
      if (section.empty()) {
        throw std::runtime_error(
            "config defines sections; select one with --section");
      }
      if (current_section != section) {
        continue;
      }
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": expected key = value");
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key == "scenario") {
      spec.scenario = scenario_from_string(value);
    } else if (key == "target") {
      spec.target = value;
    } else if (key == "n") {
      spec.n_grid = parse_int_list(value, line_no);
    } else if (key == "m") {
      spec.m_grid = parse_int_list(value, line_no);
    } else if (key == "eps") {
      spec.eps_grid = parse_double_list(value, line_no);
    } else if (key == "S") {
      spec.s_grid = parse_int_list(value, line_no);
    } else if (key == "d") {
      spec.d_grid = parse_int_list(value, line_no);
    } else if (key == "replicates") {
      spec.replicates = static_cast<int>(parse_int(value, line_no));
    } else if (key == "seed") {
      spec.seed = static_cast<std::uint64_t>(parse_int(value, line_no));
    } else if (key == "c_R") {
      spec.c_R = parse_double(value, line_no);
    } else if (key == "c_T") {
      spec.c_T = parse_double(value, line_no);
    } else if (key == "c_r") {
      spec.c_r = parse_double(value, line_no);
    } else if (key == "rho") {
      spec.rho = parse_double(value, line_no);
    } else if (key == "alpha") {
      spec.alpha = parse_double(value, line_no);
    } else if (key == "delta") {
      spec.delta = parse_double(value, line_no);
    } else if (key == "eta") {
      spec.eta = parse_double(value, line_no);
    } else if (key == "c_alpha") {
      spec.c_alpha = parse_double(value, line_no);
    } else if (key == "r") {
      spec.r_fixed = static_cast<int>(parse_int(value, line_no));
    } else if (key == "gp_sigma2") {
      spec.gp_sigma2 = parse_double(value, line_no);
    } else if (key == "noise_sd") {
      spec.noise_sd = parse_double(value, line_no);
    } else if (key == "noise") {
      if (value == "on" || value == "true" || value == "1") {
        spec.noise_enabled = true;
      } else if (value == "off" || value == "false" || value == "0") {
        spec.noise_enabled = false;
      } else {
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": noise must be on or off");
      }
    } else if (key == "threads") {
      spec.threads = static_cast<int>(parse_int(value, line_no));
    } else {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": unknown key '" + key + "'");
    }
  }
  if (!section_found) {
    throw std::runtime_error("config section not found: [" + section + "]");
  }
  return spec;
}

std::vector<RateRow> rate_table(double n, double m, double eps, int S, int d,
                                double alpha) {
  if (!(n > 0.0) || !(m > 0.0) || !(eps > 0.0) || S < 1 || d < 0 || !(alpha > 1.0)) {
    throw std::invalid_argument("rate_table: invalid inputs");
  }
  const double dd = static_cast<double>(std::max(d, 1));
  const double eps_sq = eps * eps;
  const bool private_terms = std::isfinite(eps);

  const auto mean_row = [&](const std::string& name, double scale) {
    RateRow row;
    row.setting = name;
    row.terms = {
        {"nonprivate-sparse", std::pow(scale * n * m, -2.0 * alpha / (2.0 * alpha + 1.0))},
        {"private-sparse",
         private_terms
             ? std::pow(scale * n * n * m * eps_sq, -alpha / (alpha + 1.0))
             : 0.0},
        {"nonprivate-dense", 1.0 / (scale * n)},
        {"private-dense", private_terms ? 1.0 / (scale * n * n * eps_sq) : 0.0},
    };
    return row;
  };
  const auto vcm_row = [&](const std::string& name, double scale) {
    RateRow row;
    row.setting = name;
    row.terms = {
        {"nonprivate-sparse",
         dd * std::pow(scale * n * m, -2.0 * alpha / (2.0 * alpha + 1.0))},
        {"private-sparse",
         private_terms ? std::pow(dd, (2.0 * alpha + 1.0) / (alpha + 1.0)) *
                             std::pow(scale * n * n * m * eps_sq, -alpha / (alpha + 1.0))
                       : 0.0},
        {"nonprivate-dense", dd / (scale * n)},
        {"private-dense",
         private_terms ? dd * dd / (scale * n * n * eps_sq) : 0.0},
    };
    return row;
  };

  std::vector<RateRow> rows;
  rows.push_back(mean_row("mean-cdp", 1.0));
  rows.push_back(mean_row("mean-fdp", static_cast<double>(S)));
  rows.push_back(vcm_row("vcm-cdp", 1.0));
  rows.push_back(vcm_row("vcm-fdp", static_cast<double>(S)));
  for (auto& row : rows) {
    row.dominant = 0;
    for (int i = 1; i < static_cast<int>(row.terms.size()); ++i) {
      if (row.terms[i].value > row.terms[row.dominant].value) {
        row.dominant = i;
      }
    }
  }
  return rows;
}

PhaseRegion phase_region(double n, double m, double eps, double alpha) {
  if (!(n > 0.0) || !(m > 0.0) || !(eps > 0.0) || !(alpha > 1.0)) {
    throw std::invalid_argument("phase_region: invalid inputs");
  }
  const double eps_boundary = std::pow(n, -0.5);
  const double m_private = std::pow(n * n * eps * eps, 1.0 / alpha);
  const double m_sparse = std::pow(n, 1.0 / (2.0 * alpha));
  const double m_dense = std::pow(n, 1.0 / alpha);

  PhaseRegion region;
  region.boundary_log10_ratios = {
      {"eps_vs_n^-1/2", std::log10(eps / eps_boundary)},
      {"m_vs_(n^2eps^2)^1/alpha", std::log10(m / m_private)},
      {"m_vs_n^1/(2alpha)", std::log10(m / m_sparse)},
      {"m_vs_n^1/alpha", std::log10(m / m_dense)},
  };
  const auto near = [](double log_ratio) { return std::abs(log_ratio) <= 1e-12; };

  const double eps_log = region.boundary_log10_ratios[0].second;
  const double sparse_rate = std::pow(n * m, -2.0 * alpha / (2.0 * alpha + 1.0));
  const double private_sparse_rate =
      std::pow(n * n * m * eps * eps, -alpha / (alpha + 1.0));

  // Ties go to the denser / less-private side.
  if (eps_log < 0.0 && !near(eps_log)) {
    const double m_log = region.boundary_log10_ratios[1].second;
    region.on_boundary = near(m_log);
    if (m_log < 0.0 && !near(m_log)) {
      region.label = "high-privacy/sparse";
      region.rate = "(n^2*m*eps^2)^(-alpha/(alpha+1))";
      region.rate_value = private_sparse_rate;
    } else {
      region.label = "high-privacy/dense";
      region.rate = "(n^2*eps^2)^(-1)";
      region.rate_value = 1.0 / (n * n * eps * eps);
    }
    return region;
  }

  region.on_boundary = near(eps_log);
  const double m_sparse_log = region.boundary_log10_ratios[2].second;
  const double m_dense_log = region.boundary_log10_ratios[3].second;
  if (m_sparse_log < 0.0 && !near(m_sparse_log)) {
    region.label = "low-privacy/sparse";
    region.rate = "(n*m)^(-2alpha/(2alpha+1)) + (n^2*m*eps^2)^(-alpha/(alpha+1))";
    region.rate_value = sparse_rate + private_sparse_rate;
    region.on_boundary = region.on_boundary || near(m_sparse_log);
  } else if (m_dense_log < 0.0 && !near(m_dense_log)) {
    region.label = "low-privacy/mid";
    region.rate = "n^(-1) + (n^2*m*eps^2)^(-alpha/(alpha+1))";
    region.rate_value = 1.0 / n + private_sparse_rate;
    region.on_boundary = region.on_boundary || near(m_sparse_log);
  } else {
    region.label = "low-privacy/dense";
    region.rate = "n^(-1)";
    region.rate_value = 1.0 / n;
    region.on_boundary = region.on_boundary || near(m_dense_log);
  }
  return region;
}

IngestResult ingest_csv(const std::string& path, bool normalize) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("ingest_csv: cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("ingest_csv: empty file " + path);
  }
  const std::vector<std::string> header = split(trim(line), ',');
  if (header.size() < 3 || header[0] != "subject_id" || header[1] != "x" ||
      header[2] != "y") {
    throw std::runtime_error("ingest_csv: header must start subject_id,x,y");
  }
  const int d = static_cast<int>(header.size()) - 3;
  for (int k = 0; k < d; ++k) {
    if (header[3 + k] != "g_" + std::to_string(k + 1)) {
      throw std::runtime_error("ingest_csv: covariate columns must be g_1..g_d");
    }
  }

  struct RawSubject {
    std::vector<double> x, y;
    Eigen::VectorXd g;
  };
  std::vector<std::string> order;
  std::vector<RawSubject> subjects;
  std::vector<int> index_of;  // parallel to order
  const auto find_subject = [&](const std::string& id) -> int {
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (order[i] == id) {
        return static_cast<int>(i);
      }
    }
    order.push_back(id);
    subjects.emplace_back();
    return static_cast<int>(order.size()) - 1;
  };

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty()) {
      continue;
    }
    const std::vector<std::string> cols = split(text, ',');
    if (cols.size() != header.size()) {
      throw std::runtime_error("ingest_csv: line " + std::to_string(line_no) +
                               ": expected " + std::to_string(header.size()) +
                               " columns, got " + std::to_string(cols.size()));
    }
    if (cols[0].empty()) {
      throw std::runtime_error("ingest_csv: line " + std::to_string(line_no) +
                               ": empty subject id");
    }
    const double x = parse_double(cols[1], line_no);
    const double y = parse_double(cols[2], line_no);
    if (!std::isfinite(x) || !std::isfinite(y)) {
      throw std::runtime_error("ingest_csv: line " + std::to_string(line_no) +
                               ": non-finite x or y");
    }
    const int idx = find_subject(cols[0]);
    auto& subject = subjects[static_cast<std::size_t>(idx)];
    subject.x.push_back(x);
    subject.y.push_back(y);
    if (d > 0) {
      Eigen::VectorXd g(d + 1);
      g(0) = 1.0;
      for (int k = 0; k < d; ++k) {
        g(k + 1) = parse_double(cols[3 + static_cast<std::size_t>(k)], line_no);
        if (!std::isfinite(g(k + 1))) {
          throw std::runtime_error("ingest_csv: line " + std::to_string(line_no) +
                                   ": non-finite covariate");
        }
      }
      if (subject.g.size() == 0) {
        subject.g = g;
      } else if (subject.g != g) {
        throw std::runtime_error("ingest_csv: line " + std::to_string(line_no) +
                                 ": covariates change within subject " + cols[0]);
      }
    }
  }
  if (subjects.empty()) {
    throw std::runtime_error("ingest_csv: no data rows");
  }

  IngestResult result;
  result.is_vcm = d > 0;
  result.subject_ids = order;

  if (normalize) {
    double x_min = subjects[0].x[0], x_max = x_min;
    double y_min = subjects[0].y[0], y_max = y_min;
    for (const auto& s : subjects) {
      for (double v : s.x) {
        x_min = std::min(x_min, v);
        x_max = std::max(x_max, v);
      }
      for (double v : s.y) {
        y_min = std::min(y_min, v);
        y_max = std::max(y_max, v);
      }
    }
    if (!(x_max > x_min)) {
      throw std::runtime_error("ingest_csv: x has zero range, cannot normalize");
    }
    if (!(y_max > y_min)) {
      throw std::runtime_error("ingest_csv: y has zero range, cannot normalize");
    }
    result.x_map = AffineMap{x_min, x_max - x_min};
    result.y_map = AffineMap{y_min, y_max - y_min};
  }

  const auto build_xy = [&](const RawSubject& s, Eigen::VectorXd& x,
                            Eigen::VectorXd& y) {
    x.resize(static_cast<Eigen::Index>(s.x.size()));
    y.resize(static_cast<Eigen::Index>(s.y.size()));
    for (std::size_t j = 0; j < s.x.size(); ++j) {
      x(static_cast<Eigen::Index>(j)) = result.x_map.to_unit(s.x[j]);
      y(static_cast<Eigen::Index>(j)) = result.y_map.to_unit(s.y[j]);
    }
  };
  if (result.is_vcm) {
    result.vcm.subjects.resize(subjects.size());
    for (std::size_t i = 0; i < subjects.size(); ++i) {
      build_xy(subjects[i], result.vcm.subjects[i].x, result.vcm.subjects[i].y);
      result.vcm.subjects[i].g = subjects[i].g;
    }
  } else {
    result.mean.subjects.resize(subjects.size());
    for (std::size_t i = 0; i < subjects.size(); ++i) {
      build_xy(subjects[i], result.mean.subjects[i].x, result.mean.subjects[i].y);
    }
  }
  return result;
}

void export_mean_csv(const MeanDataset& data, const std::vector<std::string>& ids,
                     std::ostream& out) {
  if (ids.size() != data.subjects.size()) {
    throw std::invalid_argument("export_mean_csv: id count mismatch");
  }
  out << "subject_id,x,y\n";
  for (std::size_t i = 0; i < data.subjects.size(); ++i) {
    const auto& s = data.subjects[i];
    for (Eigen::Index j = 0; j < s.x.size(); ++j) {
      out << ids[i] << ',' << fmt(s.x(j)) << ',' << fmt(s.y(j)) << "\n";
    }
  }
}

MeanDataset reflect_domain(const MeanDataset& data) {
  MeanDataset out;
  out.subjects.resize(data.subjects.size());
  for (std::size_t i = 0; i < data.subjects.size(); ++i) {
    const auto& s = data.subjects[i];
    const Eigen::Index m = s.x.size();
    auto& t = out.subjects[i];
    t.x.resize(2 * m);
    t.y.resize(2 * m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const double u = s.x(j) / 2.0;
      t.x(j) = u;
      t.x(m + j) = 1.0 - u;
      t.y(j) = s.y(j);
      t.y(m + j) = s.y(j);
    }
  }
  return out;
}

double eval_reflected(const CoeffVector& a, double x) {
  return eval_function(a, x / 2.0);
}

namespace {

double curve_distance(const CoeffVector& a, const CoeffVector& b, bool reflected,
                      const Quadrature& quad) {
  if (!reflected) {
    return l2_distance(a, b);
  }
  const double sq = integrate(
      [&](double x) {
        const double d = eval_reflected(a, x) - eval_reflected(b, x);
        return d * d;
      },
      quad);
  return std::sqrt(std::max(sq, 0.0));
}

}  // namespace

RealDataResults real_data_pipeline(const IngestResult& data,
                                   const RealDataOptions& options) {
  if (data.is_vcm) {
    throw std::invalid_argument("real_data_pipeline: expects a mean-model dataset");
  }
  const int n = data.mean.n();
  if (n < 3) {
    throw std::invalid_argument("real_data_pipeline: need at least 3 subjects");
  }
  if (options.replicates < 1 || options.eps.empty()) {
    throw std::invalid_argument("real_data_pipeline: invalid options");
  }
  const int n_train = static_cast<int>(std::llround(options.split_fraction * n));
  if (n_train < 1 || n_train >= n) {
    throw std::invalid_argument("real_data_pipeline: split leaves an empty side");
  }
  const int n_test = n - n_train;

  const double c_alpha = options.c_alpha > 0.0 ? options.c_alpha : default_c_alpha();
  const EllipsoidSpec ell(SobolevParams(options.alpha, c_alpha), options.r);
  const Quadrature quad = Quadrature::simpson(513);
  const RngStream root{options.seed};
  const int R = options.replicates;
  const int E = static_cast<int>(options.eps.size());

  const MeanDataset full =
      options.reflect ? reflect_domain(data.mean) : data.mean;

  const auto nonprivate_cfg = [&](int rows, std::uint64_t seed) {
    GdConfig cfg;
    cfg.r = options.r;
    cfg.rho = 0.1;
    cfg.T = std::min(rows, 200);
    cfg.c_r_const = options.c_R * 1e12;  // clipping never binds
    cfg.eta = options.eta;
    cfg.seed = seed;
    cfg.noise_enabled = false;
    return cfg;
  };
  const auto private_cfg = [&](int rows, std::uint64_t seed) {
    GdConfig cfg;
    cfg.r = options.r;
    cfg.rho = options.rho;
    cfg.T = std::min(rows, default_rounds(rows, options.c_T));
    cfg.c_r_const = options.c_R;
    cfg.eta = options.eta;
    cfg.seed = seed;
    cfg.noise_enabled = options.noise_enabled;
    return cfg;
  };

  // dist(rep, e); band_curves[e](rep, grid point)
  Eigen::MatrixXd dist(R, E);
  Eigen::VectorXd band_grid = Eigen::VectorXd::LinSpaced(options.band_points, 0.0, 1.0);
  std::vector<Eigen::MatrixXd> band_curves(
      E, Eigen::MatrixXd::Zero(R, options.band_points));

  std::vector<int> base_order(n);
  std::iota(base_order.begin(), base_order.end(), 0);

  parallel_for(R, resolve_threads(options.threads), [&](int rep) {
    auto split_rng =
        root.substream(kSplitTag, static_cast<std::uint64_t>(rep)).engine();
    std::vector<int> order = base_order;
    std::shuffle(order.begin(), order.end(), split_rng);

    MeanDataset train, test;
    train.subjects.reserve(n_train);
    test.subjects.reserve(n_test);
    for (int i = 0; i < n; ++i) {
      (i < n_train ? train : test)
          .subjects.push_back(data.mean.subjects[static_cast<std::size_t>(order[i])]);
    }
    if (options.reflect) {
      train = reflect_domain(train);
      test = reflect_domain(test);
    }

    const std::uint64_t np_seed =
        root.substream(kEstTag, static_cast<std::uint64_t>(rep)).seed;
    const CoeffVector train_fit =
        dp_mean_cdp(train, nonprivate_cfg(n_train, np_seed), PrivacyBudget::disabled(),
                    ell)
            .coefficients;

    for (int e = 0; e < E; ++e) {
      const double eps = options.eps[static_cast<std::size_t>(e)];
      const PrivacyBudget budget(eps, options.delta);
      const std::uint64_t dp_seed =
          root.substream(kEstTag, static_cast<std::uint64_t>(rep))
              .substream(double_key(eps))
              .seed;
      const CoeffVector test_fit =
          dp_mean_cdp(test, private_cfg(n_test, dp_seed), budget, ell).coefficients;
      dist(rep, e) = curve_distance(test_fit, train_fit, options.reflect, quad);

      const std::uint64_t band_seed =
          root.substream(kBandTag, static_cast<std::uint64_t>(rep))
              .substream(double_key(eps))
              .seed;
      const CoeffVector full_fit =
          dp_mean_cdp(full, private_cfg(n, band_seed), budget, ell).coefficients;
      for (int p = 0; p < options.band_points; ++p) {
        const double x = band_grid(p);
        band_curves[static_cast<std::size_t>(e)](rep, p) =
            options.reflect ? eval_reflected(full_fit, x) : eval_function(full_fit, x);
      }
    }
  });

  RealDataResults results;
  results.options = options;
  results.n_train = n_train;
  results.n_test = n_test;
  for (int e = 0; e < E; ++e) {
    std::vector<double> column(R);
    for (int rep = 0; rep < R; ++rep) {
      column[static_cast<std::size_t>(rep)] = dist(rep, e);
    }
    const SummaryStats stats = summarize(column);
    results.rows.push_back(
        RealDataEpsRow{options.eps[static_cast<std::size_t>(e)], stats.mean, stats.se});

    RealDataBand band;
    band.eps = options.eps[static_cast<std::size_t>(e)];
    band.x.resize(options.band_points);
    band.mean.resize(options.band_points);
    band.lo.resize(options.band_points);
    band.hi.resize(options.band_points);
    for (int p = 0; p < options.band_points; ++p) {
      std::vector<double> values(R);
      for (int rep = 0; rep < R; ++rep) {
        values[static_cast<std::size_t>(rep)] =
            band_curves[static_cast<std::size_t>(e)](rep, p);
      }
      band.x(p) = data.x_map.from_unit(band_grid(p));
      band.mean(p) = data.y_map.from_unit(summarize(values).mean);
      band.lo(p) = data.y_map.from_unit(quantile(values, 0.05));
      band.hi(p) = data.y_map.from_unit(quantile(values, 0.95));
    }
    results.bands.push_back(std::move(band));
  }

  const std::uint64_t ref_seed = root.substream(kEstTag).substream(0xfu).seed;
  const CoeffVector reference =
      dp_mean_cdp(full, nonprivate_cfg(n, ref_seed), PrivacyBudget::disabled(), ell)
          .coefficients;
  results.reference_x.resize(options.band_points);
  results.reference_curve.resize(options.band_points);
  for (int p = 0; p < options.band_points; ++p) {
    const double x = band_grid(p);
    results.reference_x(p) = data.x_map.from_unit(x);
    results.reference_curve(p) = data.y_map.from_unit(
        options.reflect ? eval_reflected(reference, x) : eval_function(reference, x));
  }
  return results;
}

namespace {

void write_realdata_manifest(const RealDataOptions& o, const char* command,
                             std::ostream& out) {
  out << "# " << kVersion << " " << command << "\n";
  out << "# split_fraction=" << fmt(o.split_fraction) << " replicates="
      << o.replicates << " seed=" << o.seed << "\n";
  out << "# r=" << o.r << " c_R=" << fmt(o.c_R) << " c_T=" << fmt(o.c_T)
      << " rho=" << fmt(o.rho) << " alpha=" << fmt(o.alpha) << " delta="
      << fmt(o.delta) << " eta=" << fmt(o.eta) << " c_alpha="
      << fmt(o.c_alpha > 0.0 ? o.c_alpha : default_c_alpha()) << " reflect="
      << (o.reflect ? "on" : "off") << " noise=" << (o.noise_enabled ? "on" : "off")
      << "\n";
}

}  // namespace

void write_realdata_csv(const RealDataResults& results, std::ostream& out) {
  write_realdata_manifest(results.options, "realdata", out);
  out << "eps,dist_mean,dist_se\n";
  for (const auto& row : results.rows) {
    out << fmt(row.eps) << ',' << fmt(row.dist_mean) << ',' << fmt(row.dist_se)
        << "\n";
  }
}

void write_bands_csv(const RealDataResults& results, std::ostream& out) {
  write_realdata_manifest(results.options, "realdata-bands", out);
  out << "eps,x,mean,lo,hi\n";
  for (const auto& band : results.bands) {
    for (Eigen::Index p = 0; p < band.x.size(); ++p) {
      out << fmt(band.eps) << ',' << fmt(band.x(p)) << ',' << fmt(band.mean(p)) << ','
          << fmt(band.lo(p)) << ',' << fmt(band.hi(p)) << "\n";
    }
  }
  for (Eigen::Index p = 0; p < results.reference_x.size(); ++p) {
    out << "inf," << fmt(results.reference_x(p)) << ','
        << fmt(results.reference_curve(p)) << ',' << fmt(results.reference_curve(p))
        << ',' << fmt(results.reference_curve(p)) << "\n";
  }
}

double decreasing_trend_z(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& se) {
  if (x.size() != y.size() || x.size() != se.size() || x.size() < 3) {
    throw std::invalid_argument("decreasing_trend_z: need >= 3 matched points");
  }
  double se_floor = 0.0;
  for (double s : se) {
    se_floor = std::max(se_floor, s);
  }
  se_floor = std::max(se_floor * 1e-9, 1e-12);
  double w_sum = 0.0, wx = 0.0, wy = 0.0;
  std::vector<double> w(se.size());
  for (std::size_t i = 0; i < se.size(); ++i) {
    const double s = std::max(se[i], se_floor);
    w[i] = 1.0 / (s * s);
    w_sum += w[i];
    wx += w[i] * x[i];
    wy += w[i] * y[i];
  }
  const double x_bar = wx / w_sum;
  const double y_bar = wy / w_sum;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - x_bar) * (x[i] - x_bar);
    sxy += w[i] * (x[i] - x_bar) * (y[i] - y_bar);
  }
  const double slope = sxy / sxx;
  const double slope_sd = std::sqrt(1.0 / sxx);
  return slope / slope_sd;
}

}  // namespace bench
}  // namespace dpfda
