#include "dpfda/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dpfda/rng.hpp"

namespace dpfda {

namespace {

constexpr std::uint64_t kNoiseStreamTag = 0x6e6f6973;  // per-(server, round) noise

std::mt19937_64 noise_engine(std::uint64_t seed, int server_id, int round) {
  return RngStream{seed}
      .substream(kNoiseStreamTag, static_cast<std::uint64_t>(server_id),
                 static_cast<std::uint64_t>(round))
      .engine();
}

int common_m(const std::vector<const Eigen::VectorXd*>& grids) {
  if (grids.empty()) {
    throw std::invalid_argument("estimator: empty dataset");
  }
  const Eigen::Index m = grids.front()->size();
  for (const auto* g : grids) {
    if (g->size() != m) {
      throw std::invalid_argument("estimator: subject-varying m is unsupported");
    }
    if (g->size() == 0) {
      throw std::invalid_argument("estimator: subject with no observations");
    }
    if ((g->array() < 0.0).any() || (g->array() > 1.0).any()) {
      throw std::invalid_argument("estimator: grid points must lie in [0,1]");
    }
  }
  return static_cast<int>(m);
}

int mean_dataset_m(const MeanDataset& data) {
  std::vector<const Eigen::VectorXd*> grids;
  grids.reserve(data.subjects.size());
  for (const auto& s : data.subjects) {
    grids.push_back(&s.x);
  }
  return common_m(grids);
}

int vcm_dataset_m(const VcmDataset& data) {
  std::vector<const Eigen::VectorXd*> grids;
  grids.reserve(data.subjects.size());
  for (const auto& s : data.subjects) {
    grids.push_back(&s.x);
  }
  return common_m(grids);
}

double positive_min(std::initializer_list<double> terms) {
  double best = std::numeric_limits<double>::infinity();
  for (double t : terms) {
    if (std::isfinite(t)) {
      best = std::min(best, t);
    }
  }
  if (!std::isfinite(best)) {
    throw std::invalid_argument("select_r: no finite selection term");
  }
  return best;
}

int finish_r(double value, double c_r_mult) {
  if (!(c_r_mult > 0.0)) {
    throw std::invalid_argument("select_r: c_r_mult must be positive");
  }
  return std::max(1, static_cast<int>(std::ceil(c_r_mult * value)));
}

Eigen::VectorXd normalized_weights(const Eigen::VectorXd& u) {
  const double total = u.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::invalid_argument("server weights: degenerate variance terms");
  }
  return u / total;
}

}  // namespace

int default_rounds(int n, double c_t) {
  if (n < 1 || !(c_t > 0.0)) {
    throw std::invalid_argument("default_rounds: invalid inputs");
  }
  return std::max(1, static_cast<int>(std::ceil(c_t * std::log(static_cast<double>(n)))));
}

int select_r_mean_cdp(double n, double m, double epsilon, double alpha,
                      double c_r_mult) {
  return select_r_mean_fdp(1, n, m, epsilon, alpha, c_r_mult);
}

int select_r_mean_fdp(int S, double n, double m, double epsilon, double alpha,
                      double c_r_mult) {
  if (S < 1 || !(n > 0.0) || !(m > 0.0) || !(epsilon > 0.0) || !(alpha > 1.0)) {
    throw std::invalid_argument("select_r: invalid inputs");
  }
  const double s = static_cast<double>(S);
  const double eps_sq = epsilon * epsilon;
  const double value = positive_min({
      std::pow(s * n * m, 1.0 / (2.0 * alpha + 1.0)),
      std::pow(s * n * n * m * eps_sq, 1.0 / (2.0 * alpha + 2.0)),
      std::pow(s * n, 1.0 / (2.0 * alpha)),
      std::pow(s * n * n * eps_sq, 1.0 / (2.0 * alpha)),
  });
  return finish_r(value, c_r_mult);
}

int select_r_vcm_fdp(int S, double n, double m, int d, double epsilon, double alpha,
                     double c_r_mult) {
  if (S < 1 || !(n > 0.0) || !(m > 0.0) || d < 0 || !(epsilon > 0.0) ||
      !(alpha > 1.0)) {
    throw std::invalid_argument("select_r: invalid inputs");
  }
  const double s = static_cast<double>(S);
  const double dd = static_cast<double>(std::max(d, 1));
  const double eps_sq = epsilon * epsilon;
  const double value = positive_min({
      std::pow(s * n * m, 1.0 / (2.0 * alpha + 1.0)),
      std::pow(dd, -1.0 / (2.0 * alpha + 2.0)) *
          std::pow(s * n * n * m * eps_sq, 1.0 / (2.0 * alpha + 2.0)),
      std::pow(s * n, 1.0 / (2.0 * alpha)),
      std::pow(dd, -1.0 / (2.0 * alpha)) *
          std::pow(s * n * n * eps_sq, 1.0 / (2.0 * alpha)),
  });
  return finish_r(value, c_r_mult);
}

Eigen::VectorXd compute_clipped_mean_gradient(std::span<const MeanSubject> batch,
                                              const CoeffVector& a,
                                              const TruncationRadii& R) {
  if (batch.empty()) {
    throw std::invalid_argument("compute_clipped_mean_gradient: empty batch");
  }
  if (a.size() != R.radii.size()) {
    throw std::invalid_argument("compute_clipped_mean_gradient: length mismatch");
  }
  const int r = static_cast<int>(a.size());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(r);
  for (const auto& subject : batch) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(r);
    const Eigen::Index m = subject.x.size();
    for (Eigen::Index j = 0; j < m; ++j) {
      const Eigen::VectorXd phi = eval_basis_vector(r, subject.x(j));
      grad += (phi.dot(a) - subject.y(j)) * phi;
    }
    grad /= static_cast<double>(m);
    acc += entrywise_clip(grad, R);
  }
  return acc / static_cast<double>(batch.size());
}

Eigen::VectorXd compute_clipped_vcm_gradient(std::span<const VcmSubject> batch,
                                             const Eigen::VectorXd& B,
                                             const TruncationRadii& R, int r, int d) {
  if (batch.empty()) {
    throw std::invalid_argument("compute_clipped_vcm_gradient: empty batch");
  }
  const Eigen::Index dim = static_cast<Eigen::Index>(r) * (d + 1);
  if (B.size() != dim || R.radii.size() != dim) {
    throw std::invalid_argument("compute_clipped_vcm_gradient: dimension mismatch");
  }
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
  for (const auto& subject : batch) {
    if (subject.g.size() != d + 1) {
      throw std::invalid_argument("compute_clipped_vcm_gradient: covariate mismatch");
    }
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
    const Eigen::Index m = subject.x.size();
    for (Eigen::Index j = 0; j < m; ++j) {
      const Eigen::VectorXd phi = eval_basis_vector(r, subject.x(j));
      double fitted = 0.0;
      for (int k = 0; k <= d; ++k) {
        fitted += subject.g(k) * phi.dot(B.segment(static_cast<Eigen::Index>(k) * r, r));
      }
      const double resid = fitted - subject.y(j);
      for (int k = 0; k <= d; ++k) {
        grad.segment(static_cast<Eigen::Index>(k) * r, r) +=
            subject.g(k) * resid * phi;
      }
    }
    grad /= static_cast<double>(m);
    acc += entrywise_clip(grad, R);
  }
  return acc / static_cast<double>(batch.size());
}

CoeffVector nonprivate_ls(const MeanDataset& data, int r) {
  mean_dataset_m(data);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(r, r);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(r);
  double count = 0.0;
  for (const auto& subject : data.subjects) {
    for (Eigen::Index j = 0; j < subject.x.size(); ++j) {
      const Eigen::VectorXd phi = eval_basis_vector(r, subject.x(j));
      gram.selfadjointView<Eigen::Lower>().rankUpdate(phi);
      rhs += subject.y(j) * phi;
      count += 1.0;
    }
  }
  gram = gram.selfadjointView<Eigen::Lower>();
  gram /= count;
  rhs /= count;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smallest = svd.singularValues()(r - 1);
  const double largest = svd.singularValues()(0);
  if (!(smallest > 1e-12 * largest)) {
    throw std::runtime_error(
        "nonprivate_ls: singular design Gram matrix, condition >= " +
        std::to_string(largest / std::max(smallest, 1e-300)));
  }
  return svd.solve(rhs);
}

Eigen::VectorXd nonprivate_ls_vcm(const VcmDataset& data, int r) {
  vcm_dataset_m(data);
  const int d = data.d();
  const Eigen::Index dim = static_cast<Eigen::Index>(r) * (d + 1);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd row(dim);
  double count = 0.0;
  for (const auto& subject : data.subjects) {
    if (subject.g.size() != d + 1) {
      throw std::invalid_argument("nonprivate_ls_vcm: covariate mismatch");
    }
    for (Eigen::Index j = 0; j < subject.x.size(); ++j) {
      const Eigen::VectorXd phi = eval_basis_vector(r, subject.x(j));
      for (int k = 0; k <= d; ++k) {
        row.segment(static_cast<Eigen::Index>(k) * r, r) = subject.g(k) * phi;
      }
      gram.selfadjointView<Eigen::Lower>().rankUpdate(row);
      rhs += subject.y(j) * row;
      count += 1.0;
    }
  }
  gram = gram.selfadjointView<Eigen::Lower>();
  gram /= count;
  rhs /= count;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smallest = svd.singularValues()(dim - 1);
  const double largest = svd.singularValues()(0);
  if (!(smallest > 1e-12 * largest)) {
    throw std::runtime_error(
        "nonprivate_ls_vcm: singular design Gram matrix, condition >= " +
        std::to_string(largest / std::max(smallest, 1e-300)));
  }
  return svd.solve(rhs);
}

Eigen::VectorXd server_weights_mean(const std::vector<MeanServer>& servers, int r,
                                    int m) {
  if (servers.empty() || r < 1 || m < 1) {
    throw std::invalid_argument("server_weights_mean: invalid inputs");
  }
  Eigen::VectorXd u(static_cast<Eigen::Index>(servers.size()));
  for (std::size_t s = 0; s < servers.size(); ++s) {
    const double ns = static_cast<double>(servers[s].data.n());
    const double eps = servers[s].budget.epsilon;
    const double rr = static_cast<double>(r);
    const double mm = static_cast<double>(m);
    double worst = std::max(rr / (ns * mm), 1.0 / (ns * ns));
    if (std::isfinite(eps)) {
      worst = std::max({worst, rr * rr / (ns * ns * mm * eps * eps),
                        1.0 / (ns * ns * eps * eps)});
    }
    u(static_cast<Eigen::Index>(s)) = 1.0 / worst;
  }
  return normalized_weights(u);
}

Eigen::VectorXd server_weights_vcm(const std::vector<VcmServer>& servers, int r, int m,
                                   int d) {
  if (servers.empty() || r < 1 || m < 1 || d < 0) {
    throw std::invalid_argument("server_weights_vcm: invalid inputs");
  }
  const double dd = static_cast<double>(std::max(d, 1));
  Eigen::VectorXd u(static_cast<Eigen::Index>(servers.size()));
  for (std::size_t s = 0; s < servers.size(); ++s) {
    const double ns = static_cast<double>(servers[s].data.n());
    const double eps = servers[s].budget.epsilon;
    const double rr = static_cast<double>(r);
    const double mm = static_cast<double>(m);
    double worst = std::max(dd / ns, dd * rr / (ns * mm));
    if (std::isfinite(eps)) {
      worst = std::max({worst, dd * dd / (ns * ns * eps * eps),
                        dd * dd * rr * rr / (ns * ns * mm * eps * eps)});
    }
    u(static_cast<Eigen::Index>(s)) = 1.0 / worst;
  }
  return normalized_weights(u);
}

fednet::AggregateFn make_mean_aggregate(double rho, Eigen::VectorXd weights,
                                        EllipsoidSpec spec) {
  return [rho, weights = std::move(weights), spec](
             const Eigen::VectorXd& iterate,
             const std::vector<fednet::Transcript>& msgs) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(iterate.size());
    for (const auto& msg : msgs) {
      acc += weights(msg.server_id) * msg.payload;
    }
    return project_ellipsoid(iterate - rho * acc, spec);
  };
}

fednet::AggregateFn make_vcm_aggregate(double rho, Eigen::VectorXd weights,
                                       EllipsoidSpec spec, int d) {
  return [rho, weights = std::move(weights), spec, d](
             const Eigen::VectorXd& iterate,
             const std::vector<fednet::Transcript>& msgs) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(iterate.size());
    for (const auto& msg : msgs) {
      acc += weights(msg.server_id) * msg.payload;
    }
    return project_vcm(iterate - rho * acc, spec, d);
  };
}

namespace {

void validate_gd_config(const GdConfig& cfg, const EllipsoidSpec& spec) {
  if (cfg.r < 1 || cfg.T < 1 || !(cfg.rho > 0.0) || !(cfg.eta > 0.0) ||
      !(cfg.eta < 1.0) || !(cfg.c_r_const > 0.0)) {
    throw std::invalid_argument("GdConfig: invalid configuration");
  }
  if (cfg.r != spec.r) {
    throw std::invalid_argument("GdConfig: r does not match the projection spec");
  }
}

EstimationReport finish_report(std::vector<Eigen::VectorXd> history,
                               std::vector<RoundDiagnostics> rounds, TuningEcho tuning,
                               bool noise_on, const Eigen::VectorXd* truth) {
  EstimationReport report;
  report.coefficients = history.back();
  report.iterate_history = std::move(history);
  report.rounds = std::move(rounds);
  report.tuning = std::move(tuning);
  report.noise_enabled = noise_on;
  report.lemma_condition_ok = true;  // enforced at budget construction
  if (truth != nullptr) {
    report.l2_error = l2_distance(report.coefficients, *truth);
  }
  return report;
}

}  // namespace

EstimationReport dp_mean_cdp(const MeanDataset& data, const GdConfig& cfg,
                             const PrivacyBudget& budget, const EllipsoidSpec& spec,
                             const CoeffVector* truth) {
  validate_gd_config(cfg, spec);
  const int m = mean_dataset_m(data);
  const int n = data.n();
  if (n < cfg.T) {
    throw std::invalid_argument("dp_mean_cdp: n < T leaves empty batches");
  }
  const int b = n / cfg.T;
  const bool noise_on = cfg.noise_enabled && !budget.noise_disabled();
  const PrivacyBudget effective = noise_on ? budget : PrivacyBudget::disabled();
  const TruncationRadii radii = mean_truncation_radii(
      cfg.r, m, static_cast<double>(n), cfg.eta, cfg.c_r_const, spec.sobolev.alpha);
  const NoiseScales scales = noise_scales_for_batch(radii, b, effective);

  Eigen::VectorXd a = Eigen::VectorXd::Zero(cfg.r);
  std::vector<Eigen::VectorXd> history;
  history.reserve(cfg.T + 1);
  history.push_back(a);
  std::vector<RoundDiagnostics> rounds(cfg.T);
  for (int t = 0; t < cfg.T; ++t) {
    const std::span<const MeanSubject> batch(
        data.subjects.data() + static_cast<std::size_t>(t) * b, b);
    const Eigen::VectorXd grad = compute_clipped_mean_gradient(batch, a, radii);
    auto rng = noise_engine(cfg.seed, 0, t);
    const PrivatizedVector released = privatize_with_scales(grad, scales, 0, t, rng);
    a = project_ellipsoid(a - cfg.rho * released.value, spec);
    rounds[t].gradient_norm = grad.norm();
    rounds[t].noise_norm = (released.value - grad).norm();
    rounds[t].feasible = in_ellipsoid(a, spec);
    history.push_back(a);
  }

  TuningEcho tuning;
  tuning.r = cfg.r;
  tuning.T = cfg.T;
  tuning.batch_sizes = {b};
  tuning.weights = Eigen::VectorXd::Ones(1);
  tuning.unused_subjects = n - b * cfg.T;
  return finish_report(std::move(history), std::move(rounds), std::move(tuning),
                       noise_on, truth);
}

FederatedReport dp_mean_fdp(const std::vector<MeanServer>& servers, const GdConfig& cfg,
                            const EllipsoidSpec& spec, const CoeffVector* truth) {
  validate_gd_config(cfg, spec);
  if (servers.empty()) {
    throw std::invalid_argument("dp_mean_fdp: no servers");
  }
  const int S = static_cast<int>(servers.size());
  int m = 0;
  double total_n = 0.0;
  std::vector<int> batch_sizes(S);
  bool noise_on = cfg.noise_enabled;
  for (int s = 0; s < S; ++s) {
    const int ms = mean_dataset_m(servers[s].data);
    if (s == 0) {
      m = ms;
    } else if (ms != m) {
      throw std::invalid_argument("dp_mean_fdp: servers disagree on m");
    }
    const int ns = servers[s].data.n();
    if (ns < cfg.T) {
      throw std::invalid_argument("dp_mean_fdp: server " + std::to_string(s) +
                                  " has n < T");
    }
    batch_sizes[s] = ns / cfg.T;
    total_n += static_cast<double>(ns);
    noise_on = noise_on && !servers[s].budget.noise_disabled();
  }

  const TruncationRadii radii = mean_truncation_radii(
      cfg.r, m, total_n, cfg.eta, cfg.c_r_const, spec.sobolev.alpha);
  std::vector<NoiseScales> scales(S);
  for (int s = 0; s < S; ++s) {
    const PrivacyBudget effective =
        noise_on ? servers[s].budget : PrivacyBudget::disabled();
    scales[s] = noise_scales_for_batch(radii, batch_sizes[s], effective);
  }
  const Eigen::VectorXd weights = server_weights_mean(servers, cfg.r, m);

  Eigen::MatrixXd grad_sum = Eigen::MatrixXd::Zero(cfg.r, cfg.T);
  Eigen::MatrixXd noise_sum = Eigen::MatrixXd::Zero(cfg.r, cfg.T);
  const fednet::RoundFn round_fn = [&](int s, int t, const Eigen::VectorXd& iterate) {
    const int bs = batch_sizes[s];
    const std::span<const MeanSubject> batch(
        servers[s].data.subjects.data() + static_cast<std::size_t>(t) * bs, bs);
    const Eigen::VectorXd grad = compute_clipped_mean_gradient(batch, iterate, radii);
    auto rng = noise_engine(cfg.seed, s, t);
    PrivatizedVector released = privatize_with_scales(grad, scales[s], s, t, rng);
    grad_sum.col(t) += weights(s) * grad;
    noise_sum.col(t) += weights(s) * (released.value - grad);
    fednet::Transcript msg;
    msg.payload = std::move(released.value);
    msg.noise_scale_digest = scales[s].variances;
    msg.provenance_tag = released.tag;
    return msg;
  };
  const fednet::AggregateFn aggregate = make_mean_aggregate(cfg.rho, weights, spec);

  FederatedReport result;
  result.protocol = fednet::run_protocol(S, cfg.T, Eigen::VectorXd::Zero(cfg.r),
                                         round_fn, aggregate);
  result.protocol.run_id = "mean-fdp:seed=" + std::to_string(cfg.seed) +
                           ":S=" + std::to_string(S) + ":T=" + std::to_string(cfg.T) +
                           ":r=" + std::to_string(cfg.r);
  result.protocol.noise_enabled = noise_on;
  result.protocol.radii = radii.radii;
  int unused = 0;
  for (int s = 0; s < S; ++s) {
    result.protocol.servers[s].subject_count = servers[s].data.n();
    result.protocol.servers[s].batch_size = batch_sizes[s];
    unused += servers[s].data.n() - batch_sizes[s] * cfg.T;
  }

  std::vector<RoundDiagnostics> rounds(cfg.T);
  for (int t = 0; t < cfg.T; ++t) {
    rounds[t].gradient_norm = grad_sum.col(t).norm();
    rounds[t].noise_norm = noise_sum.col(t).norm();
    rounds[t].feasible = in_ellipsoid(result.protocol.iterate_history[t + 1], spec);
  }
  TuningEcho tuning;
  tuning.r = cfg.r;
  tuning.T = cfg.T;
  tuning.batch_sizes = batch_sizes;
  tuning.weights = weights;
  tuning.unused_subjects = unused;
  result.estimate = finish_report(result.protocol.iterate_history, std::move(rounds),
                                  std::move(tuning), noise_on, truth);
  return result;
}

EstimationReport dp_vcm_cdp(const VcmDataset& data, const GdConfig& cfg,
                            const PrivacyBudget& budget, const EllipsoidSpec& spec,
                            const Eigen::VectorXd* truth) {
  validate_gd_config(cfg, spec);
  const int m = vcm_dataset_m(data);
  const int n = data.n();
  const int d = data.d();
  if (n < cfg.T) {
    throw std::invalid_argument("dp_vcm_cdp: n < T leaves empty batches");
  }
  const int b = n / cfg.T;
  const Eigen::Index dim = static_cast<Eigen::Index>(cfg.r) * (d + 1);
  const bool noise_on = cfg.noise_enabled && !budget.noise_disabled();
  const PrivacyBudget effective = noise_on ? budget : PrivacyBudget::disabled();
  const TruncationRadii radii =
      vcm_truncation_radii(cfg.r, d, m, static_cast<double>(n), cfg.eta,
                           cfg.c_r_const, spec.sobolev.alpha);
  const NoiseScales scales = noise_scales_for_batch(radii, b, effective);

  Eigen::VectorXd B = Eigen::VectorXd::Zero(dim);
  std::vector<Eigen::VectorXd> history;
  history.reserve(cfg.T + 1);
  history.push_back(B);
  std::vector<RoundDiagnostics> rounds(cfg.T);
  for (int t = 0; t < cfg.T; ++t) {
    const std::span<const VcmSubject> batch(
        data.subjects.data() + static_cast<std::size_t>(t) * b, b);
    const Eigen::VectorXd grad =
        compute_clipped_vcm_gradient(batch, B, radii, cfg.r, d);
    auto rng = noise_engine(cfg.seed, 0, t);
    const PrivatizedVector released = privatize_with_scales(grad, scales, 0, t, rng);
    B = project_vcm(B - cfg.rho * released.value, spec, d);
    rounds[t].gradient_norm = grad.norm();
    rounds[t].noise_norm = (released.value - grad).norm();
    rounds[t].feasible = in_ellipsoid_blocks(B, spec, d);
    history.push_back(B);
  }

  TuningEcho tuning;
  tuning.r = cfg.r;
  tuning.T = cfg.T;
  tuning.batch_sizes = {b};
  tuning.weights = Eigen::VectorXd::Ones(1);
  tuning.unused_subjects = n - b * cfg.T;
  return finish_report(std::move(history), std::move(rounds), std::move(tuning),
                       noise_on, truth);
}

FederatedReport dp_vcm_fdp(const std::vector<VcmServer>& servers, const GdConfig& cfg,
                           const EllipsoidSpec& spec, const Eigen::VectorXd* truth) {
  validate_gd_config(cfg, spec);
  if (servers.empty()) {
    throw std::invalid_argument("dp_vcm_fdp: no servers");
  }
  const int S = static_cast<int>(servers.size());
  int m = 0;
  int d = -1;
  double total_n = 0.0;
  std::vector<int> batch_sizes(S);
  bool noise_on = cfg.noise_enabled;
  for (int s = 0; s < S; ++s) {
    const int ms = vcm_dataset_m(servers[s].data);
    const int ds = servers[s].data.d();
    if (s == 0) {
      m = ms;
      d = ds;
    } else if (ms != m || ds != d) {
      throw std::invalid_argument("dp_vcm_fdp: servers disagree on m or d");
    }
    const int ns = servers[s].data.n();
    if (ns < cfg.T) {
      throw std::invalid_argument("dp_vcm_fdp: server " + std::to_string(s) +
                                  " has n < T");
    }
    batch_sizes[s] = ns / cfg.T;
    total_n += static_cast<double>(ns);
    noise_on = noise_on && !servers[s].budget.noise_disabled();
  }

  const Eigen::Index dim = static_cast<Eigen::Index>(cfg.r) * (d + 1);
  const TruncationRadii radii = vcm_truncation_radii(
      cfg.r, d, m, total_n, cfg.eta, cfg.c_r_const, spec.sobolev.alpha);
  std::vector<NoiseScales> scales(S);
  for (int s = 0; s < S; ++s) {
    const PrivacyBudget effective =
        noise_on ? servers[s].budget : PrivacyBudget::disabled();
    scales[s] = noise_scales_for_batch(radii, batch_sizes[s], effective);
  }
  const Eigen::VectorXd weights = server_weights_vcm(servers, cfg.r, m, d);

  Eigen::MatrixXd grad_sum = Eigen::MatrixXd::Zero(dim, cfg.T);
  Eigen::MatrixXd noise_sum = Eigen::MatrixXd::Zero(dim, cfg.T);
  const fednet::RoundFn round_fn = [&](int s, int t, const Eigen::VectorXd& iterate) {
    const int bs = batch_sizes[s];
    const std::span<const VcmSubject> batch(
        servers[s].data.subjects.data() + static_cast<std::size_t>(t) * bs, bs);
    const Eigen::VectorXd grad =
        compute_clipped_vcm_gradient(batch, iterate, radii, cfg.r, d);
    auto rng = noise_engine(cfg.seed, s, t);
    PrivatizedVector released = privatize_with_scales(grad, scales[s], s, t, rng);
    grad_sum.col(t) += weights(s) * grad;
    noise_sum.col(t) += weights(s) * (released.value - grad);
    fednet::Transcript msg;
    msg.payload = std::move(released.value);
    msg.noise_scale_digest = scales[s].variances;
    msg.provenance_tag = released.tag;
    return msg;
  };
  const fednet::AggregateFn aggregate = make_vcm_aggregate(cfg.rho, weights, spec, d);

  FederatedReport result;
  result.protocol =
      fednet::run_protocol(S, cfg.T, Eigen::VectorXd::Zero(dim), round_fn, aggregate);
  result.protocol.run_id = "vcm-fdp:seed=" + std::to_string(cfg.seed) +
                           ":S=" + std::to_string(S) + ":T=" + std::to_string(cfg.T) +
                           ":r=" + std::to_string(cfg.r) + ":d=" + std::to_string(d);
  result.protocol.noise_enabled = noise_on;
  result.protocol.radii = radii.radii;
  int unused = 0;
  for (int s = 0; s < S; ++s) {
    result.protocol.servers[s].subject_count = servers[s].data.n();
    result.protocol.servers[s].batch_size = batch_sizes[s];
    unused += servers[s].data.n() - batch_sizes[s] * cfg.T;
  }

  std::vector<RoundDiagnostics> rounds(cfg.T);
  for (int t = 0; t < cfg.T; ++t) {
    rounds[t].gradient_norm = grad_sum.col(t).norm();
    rounds[t].noise_norm = noise_sum.col(t).norm();
    rounds[t].feasible =
        in_ellipsoid_blocks(result.protocol.iterate_history[t + 1], spec, d);
  }
  TuningEcho tuning;
  tuning.r = cfg.r;
  tuning.T = cfg.T;
  tuning.batch_sizes = batch_sizes;
  tuning.weights = weights;
  tuning.unused_subjects = unused;
  result.estimate = finish_report(result.protocol.iterate_history, std::move(rounds),
                                  std::move(tuning), noise_on, truth);
  return result;
}

}  // namespace dpfda
