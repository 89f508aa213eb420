#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "srw/estimate.hpp"
#include "srw/frame.hpp"
#include "srw/twostage.hpp"

namespace srw {

struct PriorConfig {
  int mu_grid_size = 41;
  int sigma_grid_size = 41;
  /// Lower anchor for the sigma grid; also guards against zero sample sds.
  double sd_floor = 1e-9;
  int max_iterations = 500;
  double rel_tolerance = 1e-8;
};

/// Factorized discrete prior p(mu, sigma) = g(mu) h(sigma) on product grids.
/// mu_grid is equispaced, sigma_grid log-spaced; both weight vectors are
/// nonnegative and sum to one.
struct PriorModel {
  std::vector<double> mu_grid;
  std::vector<double> mu_weights;
  std::vector<double> sigma_grid;  // strictly positive, strictly increasing
  std::vector<double> sigma_weights;
  /// Marginal log-likelihood at the start of every EM iteration
  /// (nondecreasing).
  std::vector<double> em_loglik;
};

/// Joint posterior over the (mu_grid x sigma_grid) product for one group.
struct GroupPosterior {
  std::size_t mu_points = 0;
  std::size_t sigma_points = 0;
  std::vector<double> joint;  // row-major [mu][sigma], sums to 1
  double map_mu = 0.0;
  double map_sigma = 0.0;
  double post_mean_mu = 0.0;
  double post_mean_sigma = 0.0;
};

/// Fits g and h by EM on the marginal likelihood of per-group summaries,
/// treating mean_i | (mu, sigma) ~ N(mu, sigma^2/count_i) and
/// (count_i - 1) sd_i^2 / sigma^2 ~ chi-square(count_i - 1). Groups with a
/// single observation contribute their mean term only; at least one group
/// must have count >= 2. Grid spans derive from the summaries (see the
/// implementation); grid sizes come from `cfg`.
PriorModel fit_prior(std::span<const GroupStats> stats, const PriorConfig& cfg = {});

/// Posterior for one group: joint weight proportional to
/// g(mu) h(sigma) L(stats | mu, sigma) with the fit_prior likelihood; the
/// scale term is dropped when count < 2. A zero-count group returns the
/// prior itself. MAP ties resolve to the lowest grid indices.
GroupPosterior posterior_group(const GroupStats& stats, const PriorModel& prior);

struct BayesSrwResult {
  /// Two-stage trace whose stage-2 allocation used the shrunken sds
  /// (posterior means); trace.result is the plain IPW estimate for
  /// comparison.
  TwoStageTrace trace;
  PriorModel pilot_prior;                  // fitted on stage-1 summaries
  PriorModel prior;                        // refitted on combined summaries
  std::vector<GroupPosterior> posteriors;  // against the refitted prior
  /// Size-weighted posterior-mean estimate (1/N) sum_i N_i post_mean_mu_i.
  double mu_hat_bayes = 0.0;
};

/// Pilot stage as in run_two_stage, prior fit on the pilot summaries,
/// stage-2 allocation with posterior-mean sds, prior refit and posterior
/// update on the combined data. Requires a pilot stage (p > 0).
BayesSrwResult run_bayes_srw(const PopulationFrame& frame, const Sampler& sampler,
                             const TwoStageConfig& cfg, const PriorConfig& prior_cfg = {});

BayesSrwResult run_bayes_srw(const PopulationFrame& frame, const TwoStageConfig& cfg,
                             const PriorConfig& prior_cfg, std::uint64_t seed);

void to_json(nlohmann::json& j, const PriorModel& prior);
void to_json(nlohmann::json& j, const GroupPosterior& posterior);
void to_json(nlohmann::json& j, const BayesSrwResult& result);

namespace detail {

/// Log-likelihood of one group's summaries at (mu, sigma); the building
/// block shared by fit_prior and posterior_group.
double summary_loglik(const GroupStats& stats, double mu, double sigma);

}  // namespace detail

}  // namespace srw
