#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "srw/alloc.hpp"
#include "srw/frame.hpp"

namespace srw {

/// Sample moments of one group: count, arithmetic mean and the n-1 sample
/// standard deviation (absent below two observations).
struct GroupStats {
  std::int64_t count = 0;
  double mean = 0.0;
  std::optional<double> sd;
};

std::vector<GroupStats> group_stats(const ObservationSet& obs);

/// Inverse-probability-weighted population mean over the sampled groups:
/// sum_i sum_j (N_i/n_i) X_i^j / sum_i sum_j (N_i/n_i), which reduces to
/// sum_i N_i xbar_i / sum_i N_i. `counts` must match the per-group
/// observation counts. Groups with zero count contribute no terms.
double ipw_mean(const ObservationSet& obs, const PopulationFrame& frame,
                std::span<const std::int64_t> counts);

double ipw_mean_from_stats(const PopulationFrame& frame, std::span<const GroupStats> stats);

struct EstimateResult {
  double mu_hat = 0.0;
  double variance = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.0;
  std::vector<double> group_means;
  std::vector<double> group_sds;  // 0 where no sample sd is available
  std::vector<std::int64_t> group_counts;
  /// Set when some group received no samples; the estimate then covers only
  /// the sampled part of the population and is biased for the full mean.
  bool has_unsampled_groups = false;
};

/// IPW estimate with a normal-quantile confidence interval. The plug-in
/// variance is (1/N^2) sum_i N_i^2 sd_i^2 / n_i over sampled groups, using
/// `sd_override` when given and the per-group sample sds otherwise (every
/// sampled group then needs at least two observations).
EstimateResult estimate_with_ci(const ObservationSet& obs, const PopulationFrame& frame,
                                std::span<const std::int64_t> counts,
                                const std::optional<SdVector>& sd_override, double level);

/// Same computation from precomputed group stats (the simulator fast path).
EstimateResult estimate_from_stats(const PopulationFrame& frame,
                                   std::span<const GroupStats> stats,
                                   const std::optional<SdVector>& sd_override, double level);

/// One-line CSV summary: header `mu_hat,se,ci_low,ci_high,level` plus a row.
void write_estimate_csv(const EstimateResult& result, std::ostream& out);

void to_json(nlohmann::json& j, const EstimateResult& result);

}  // namespace srw
