#include "srw/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "srw/errors.hpp"
#include "srw/numeric.hpp"

namespace srw {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
constexpr double kLog2 = 0.69314718055994530941723212145818;

bool has_scale_term(const GroupStats& s) { return s.count >= 2 && s.sd && *s.sd > 0.0; }

/// Per-group constants of the summary log-likelihood; the sigma-dependent
/// part is C - (nu+1) log sigma - q / (2 sigma^2) with q = nu sd^2 + count d^2
/// evaluated per mu grid point (nu = 0 without a scale term).
struct GroupTerms {
  double count = 0.0;
  double mean = 0.0;
  double nu = 0.0;
  double nu_s2 = 0.0;
  double constant = 0.0;
};

GroupTerms group_terms(const GroupStats& s) {
  GroupTerms t;
  t.count = static_cast<double>(s.count);
  t.mean = s.mean;
  t.constant = -0.5 * (kLogTwoPi - std::log(t.count));
  if (has_scale_term(s)) {
    t.nu = static_cast<double>(s.count - 1);
    const double s2 = *s.sd * *s.sd;
    t.nu_s2 = t.nu * s2;
    t.constant += (0.5 * t.nu - 1.0) * (std::log(t.nu) + std::log(s2)) - 0.5 * t.nu * kLog2 -
                  std::lgamma(0.5 * t.nu) + std::log(t.nu);
  }
  return t;
}

/// Fills `block` (row-major mu x sigma) with the group's log-likelihood and
/// returns the maximum entry.
double fill_loglik_block(const GroupTerms& t, std::span<const double> mu_grid,
                         std::span<const double> log_sigma,
                         std::span<const double> inv_two_sigma2, std::vector<double>& block) {
  const std::size_t m_count = mu_grid.size();
  const std::size_t s_count = log_sigma.size();
  block.resize(m_count * s_count);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < m_count; ++m) {
    const double d = t.mean - mu_grid[m];
    const double q = t.nu_s2 + t.count * d * d;
    double* row = block.data() + m * s_count;
    for (std::size_t s = 0; s < s_count; ++s) {
      const double v = t.constant - (t.nu + 1.0) * log_sigma[s] - q * inv_two_sigma2[s];
      row[s] = v;
      if (v > best) best = v;
    }
  }
  return best;
}

std::vector<double> linspace(double lo, double hi, int points) {
  std::vector<double> grid(points);
  if (points == 1) {
    grid[0] = 0.5 * (lo + hi);
    return grid;
  }
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (int i = 0; i < points; ++i) grid[i] = lo + step * static_cast<double>(i);
  return grid;
}

std::vector<double> logspace(double lo, double hi, int points) {
  auto grid = linspace(std::log(lo), std::log(hi), points);
  for (double& v : grid) v = std::exp(v);
  return grid;
}

}  // namespace

namespace detail {

double summary_loglik(const GroupStats& stats, double mu, double sigma) {
  if (stats.count < 1) return 0.0;
  double ll = log_normal_pdf(stats.mean, mu,
                             sigma * sigma / static_cast<double>(stats.count));
  if (has_scale_term(stats))
    ll += log_sample_variance_pdf(*stats.sd * *stats.sd, sigma, stats.count);
  return ll;
}

}  // namespace detail

PriorModel fit_prior(std::span<const GroupStats> stats, const PriorConfig& cfg) {
  if (cfg.mu_grid_size < 2 || cfg.sigma_grid_size < 2)
    throw ValidationError("prior grids need at least 2 points");
  if (cfg.max_iterations < 1) throw ValidationError("max_iterations must be positive");

  std::vector<GroupStats> used;
  for (const auto& s : stats)
    if (s.count >= 1) used.push_back(s);
  if (std::none_of(used.begin(), used.end(), [](const GroupStats& s) { return s.count >= 2; }))
    throw ValidationError("fit_prior needs at least one group with count >= 2");

  // Grid spans from the summaries.
  std::vector<double> means;
  std::vector<double> sds;
  std::int64_t min_count = std::numeric_limits<std::int64_t>::max();
  for (const auto& s : used) {
    means.push_back(s.mean);
    if (s.count >= 2 && s.sd) sds.push_back(*s.sd);
    min_count = std::min(min_count, s.count);
  }
  const double mu_lo_raw = *std::min_element(means.begin(), means.end());
  const double mu_hi_raw = *std::max_element(means.begin(), means.end());
  const double max_sd = *std::max_element(sds.begin(), sds.end());
  const double min_sd = *std::min_element(sds.begin(), sds.end());

  double spread = std::max(sample_sd(means), max_sd / std::sqrt(static_cast<double>(min_count)));
  if (!(spread > 0.0))
    spread = std::max(1e-9 * (1.0 + std::max(std::abs(mu_lo_raw), std::abs(mu_hi_raw))), 1e-9);

  double sigma_lo = std::max(cfg.sd_floor, min_sd) / 4.0;
  double sigma_hi = 4.0 * max_sd;
  if (!(sigma_lo > 0.0)) sigma_lo = std::max(sigma_hi * 1e-9, 1e-12);
  if (!(sigma_hi > sigma_lo)) sigma_hi = sigma_lo * 16.0;

  PriorModel prior;
  prior.mu_grid = linspace(mu_lo_raw - 2.0 * spread, mu_hi_raw + 2.0 * spread, cfg.mu_grid_size);
  prior.sigma_grid = logspace(sigma_lo, sigma_hi, cfg.sigma_grid_size);

  const std::size_t m_count = prior.mu_grid.size();
  const std::size_t s_count = prior.sigma_grid.size();
  std::vector<double> log_sigma(s_count);
  std::vector<double> inv_two_sigma2(s_count);
  for (std::size_t s = 0; s < s_count; ++s) {
    log_sigma[s] = std::log(prior.sigma_grid[s]);
    inv_two_sigma2[s] = 0.5 / (prior.sigma_grid[s] * prior.sigma_grid[s]);
  }

  // Shifted likelihood blocks, one per contributing group.
  const std::size_t n_groups = used.size();
  std::vector<std::vector<double>> blocks(n_groups);
  std::vector<double> shifts(n_groups);
  for (std::size_t i = 0; i < n_groups; ++i) {
    const auto terms = group_terms(used[i]);
    shifts[i] = fill_loglik_block(terms, prior.mu_grid, log_sigma, inv_two_sigma2, blocks[i]);
    for (double& v : blocks[i]) v = std::exp(v - shifts[i]);
  }

  prior.mu_weights.assign(m_count, 1.0 / static_cast<double>(m_count));
  prior.sigma_weights.assign(s_count, 1.0 / static_cast<double>(s_count));

  std::vector<double> g_acc(m_count);
  std::vector<double> h_acc(s_count);
  std::vector<double> row(m_count);
  std::vector<double> col(s_count);
  double prev_ll = -std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    std::fill(g_acc.begin(), g_acc.end(), 0.0);
    std::fill(h_acc.begin(), h_acc.end(), 0.0);
    double ll = 0.0;

    // E-step: responsibilities r_i(m,s) = g_m h_s A_i(m,s) / f_i, accumulated
    // marginally into g_acc and h_acc.
    for (std::size_t i = 0; i < n_groups; ++i) {
      const double* block = blocks[i].data();
      std::fill(col.begin(), col.end(), 0.0);
      double f = 0.0;
      for (std::size_t m = 0; m < m_count; ++m) {
        const double gm = prior.mu_weights[m];
        const double* block_row = block + m * s_count;
        double row_sum = 0.0;
        for (std::size_t s = 0; s < s_count; ++s) {
          const double a = block_row[s];
          row_sum += prior.sigma_weights[s] * a;
          col[s] += gm * a;
        }
        row[m] = gm * row_sum;
        f += row[m];
      }
      if (!(f > 0.0)) throw ValidationError("EM marginal likelihood underflowed");
      const double inv_f = 1.0 / f;
      for (std::size_t m = 0; m < m_count; ++m) g_acc[m] += row[m] * inv_f;
      for (std::size_t s = 0; s < s_count; ++s)
        h_acc[s] += prior.sigma_weights[s] * col[s] * inv_f;
      ll += std::log(f) + shifts[i];
    }

    prior.em_loglik.push_back(ll);
    if (iter > 0 && std::abs(ll - prev_ll) <= cfg.rel_tolerance * std::abs(prev_ll)) break;
    prev_ll = ll;

    // M-step: coordinate-wise maximization under the product family.
    const double inv_n = 1.0 / static_cast<double>(n_groups);
    for (std::size_t m = 0; m < m_count; ++m) prior.mu_weights[m] = g_acc[m] * inv_n;
    for (std::size_t s = 0; s < s_count; ++s) prior.sigma_weights[s] = h_acc[s] * inv_n;
  }

  // Absorb accumulated rounding so the weights sum to one exactly enough for
  // downstream invariants.
  const double g_total = pairwise_sum(prior.mu_weights);
  for (double& w : prior.mu_weights) w /= g_total;
  const double h_total = pairwise_sum(prior.sigma_weights);
  for (double& w : prior.sigma_weights) w /= h_total;
  return prior;
}

GroupPosterior posterior_group(const GroupStats& stats, const PriorModel& prior) {
  const std::size_t m_count = prior.mu_grid.size();
  const std::size_t s_count = prior.sigma_grid.size();
  if (m_count == 0 || s_count == 0 || prior.mu_weights.size() != m_count ||
      prior.sigma_weights.size() != s_count)
    throw ValidationError("malformed prior model");

  GroupPosterior post;
  post.mu_points = m_count;
  post.sigma_points = s_count;
  post.joint.assign(m_count * s_count, 0.0);

  if (stats.count == 0) {
    for (std::size_t m = 0; m < m_count; ++m)
      for (std::size_t s = 0; s < s_count; ++s)
        post.joint[m * s_count + s] = prior.mu_weights[m] * prior.sigma_weights[s];
  } else {
    std::vector<double> log_sigma(s_count);
    std::vector<double> inv_two_sigma2(s_count);
    for (std::size_t s = 0; s < s_count; ++s) {
      log_sigma[s] = std::log(prior.sigma_grid[s]);
      inv_two_sigma2[s] = 0.5 / (prior.sigma_grid[s] * prior.sigma_grid[s]);
    }
    std::vector<double> block;
    const double shift =
        fill_loglik_block(group_terms(stats), prior.mu_grid, log_sigma, inv_two_sigma2, block);
    double total = 0.0;
    for (std::size_t m = 0; m < m_count; ++m) {
      for (std::size_t s = 0; s < s_count; ++s) {
        const double w =
            prior.mu_weights[m] * prior.sigma_weights[s] * std::exp(block[m * s_count + s] - shift);
        post.joint[m * s_count + s] = w;
        total += w;
      }
    }
    if (!(total > 0.0)) throw ValidationError("posterior underflowed");
    for (double& w : post.joint) w /= total;
  }

  // Normalize exactly once more to absorb rounding.
  const double total = pairwise_sum(post.joint);
  for (double& w : post.joint) w /= total;

  std::size_t best = 0;
  double mean_mu = 0.0;
  double mean_sigma = 0.0;
  for (std::size_t m = 0; m < m_count; ++m) {
    for (std::size_t s = 0; s < s_count; ++s) {
      const double w = post.joint[m * s_count + s];
      if (w > post.joint[best]) best = m * s_count + s;
      mean_mu += w * prior.mu_grid[m];
      mean_sigma += w * prior.sigma_grid[s];
    }
  }
  post.map_mu = prior.mu_grid[best / s_count];
  post.map_sigma = prior.sigma_grid[best % s_count];
  post.post_mean_mu = mean_mu;
  post.post_mean_sigma = mean_sigma;
  return post;
}

BayesSrwResult run_bayes_srw(const PopulationFrame& frame, const Sampler& sampler,
                             const TwoStageConfig& cfg, const PriorConfig& prior_cfg) {
  if (cfg.pilot_fraction <= 0.0)
    throw InfeasibleError("BayesSRW requires a pilot stage (pilot_fraction > 0)");

  ObservationSet obs(frame);
  auto stage1 = detail::run_stage1(frame, sampler, cfg, obs);

  PriorConfig pcfg = prior_cfg;
  pcfg.sd_floor = std::max(prior_cfg.sd_floor, stage1.effective_sd_floor);

  const auto pilot_stats = group_stats(obs);
  BayesSrwResult out;
  out.pilot_prior = fit_prior(pilot_stats, pcfg);

  SdVector shrunken(frame.group_count());
  for (std::size_t i = 0; i < frame.group_count(); ++i)
    shrunken[i] = posterior_group(pilot_stats[i], out.pilot_prior).post_mean_sigma;

  out.trace = detail::finish_two_stage(frame, sampler, cfg, std::move(obs),
                                       std::move(stage1.plan), shrunken,
                                       stage1.effective_sd_floor);

  const auto combined_stats = group_stats(out.trace.observations);
  out.prior = fit_prior(combined_stats, pcfg);
  out.posteriors.reserve(frame.group_count());
  double acc = 0.0;
  for (std::size_t i = 0; i < frame.group_count(); ++i) {
    out.posteriors.push_back(posterior_group(combined_stats[i], out.prior));
    acc += static_cast<double>(frame.group(i).size) * out.posteriors.back().post_mean_mu;
  }
  out.mu_hat_bayes = acc / static_cast<double>(frame.total_size());
  return out;
}

BayesSrwResult run_bayes_srw(const PopulationFrame& frame, const TwoStageConfig& cfg,
                             const PriorConfig& prior_cfg, std::uint64_t seed) {
  return run_bayes_srw(frame, frame_sampler(frame, RngStream(seed)), cfg, prior_cfg);
}

void to_json(nlohmann::json& j, const PriorModel& prior) {
  j = nlohmann::json{{"mu_grid", prior.mu_grid},
                     {"mu_weights", prior.mu_weights},
                     {"sigma_grid", prior.sigma_grid},
                     {"sigma_weights", prior.sigma_weights},
                     {"em_loglik", prior.em_loglik}};
}

void to_json(nlohmann::json& j, const GroupPosterior& posterior) {
  j = nlohmann::json{{"mu_points", posterior.mu_points},
                     {"sigma_points", posterior.sigma_points},
                     {"joint", posterior.joint},
                     {"map_mu", posterior.map_mu},
                     {"map_sigma", posterior.map_sigma},
                     {"post_mean_mu", posterior.post_mean_mu},
                     {"post_mean_sigma", posterior.post_mean_sigma}};
}

void to_json(nlohmann::json& j, const BayesSrwResult& result) {
  j = nlohmann::json{{"trace", result.trace},
                     {"pilot_prior", result.pilot_prior},
                     {"prior", result.prior},
                     {"posteriors", result.posteriors},
                     {"mu_hat_bayes", result.mu_hat_bayes}};
}

}  // namespace srw
