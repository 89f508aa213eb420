#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include <nlohmann/json_fwd.hpp>

#include "srw/alloc.hpp"
#include "srw/estimate.hpp"
#include "srw/frame.hpp"
#include "srw/rng.hpp"

namespace srw {

struct TwoStageConfig {
  std::int64_t budget = 0;
  /// Fraction p of the budget spent on the uniform pilot stage; 0 skips the
  /// pilot and runs a proportional design on the whole budget.
  double pilot_fraction = 0.0;
  /// Every group receives at least this many pilot draws (a sample sd needs
  /// two points).
  int min_pilot_per_group = 2;
  /// Estimated sds below the floor are raised to it. The effective floor is
  /// max(sd_floor, 1e-9 * (max |observed value| + 1)) so allocation weights
  /// can never divide by zero.
  double sd_floor = 0.0;
  /// Include the pilot observations in the final estimate (combined counts).
  /// Disable to estimate from stage-2 data only.
  bool reuse_pilot = true;
  double level = 0.95;
};

/// Produces the observed value for (stage, group, draw index). Values must be
/// a pure function of the arguments so that runs are reproducible.
using Sampler = std::function<double(int stage, std::size_t group, std::int64_t index)>;

/// Sampler drawing N(mu_i, sd_i^2) values from a fully specified frame.
/// Substreams are keyed per (stage, group), the draw index is the counter.
Sampler frame_sampler(const PopulationFrame& frame, RngStream root);

struct TwoStageTrace {
  AllocationPlan stage1_plan;
  /// Sds that drove the stage-2 allocation (pilot estimates after flooring,
  /// or shrunken posterior means for the Bayes runner). Empty when p = 0.
  SdVector sd_estimates;
  AllocationPlan stage2_plan;
  std::vector<std::int64_t> combined_counts;
  EstimateResult result;
  /// Union of stage-1 and stage-2 observations (not serialized).
  ObservationSet observations;
};

/// Per-group sample sds of the stage-1 observations, raised to `sd_floor`.
/// Every group must carry at least two stage-1 observations.
SdVector sd_estimate_stage1(const ObservationSet& obs, double sd_floor);

/// Algorithm: spend round(n*p) uniformly (floored at min_pilot_per_group),
/// estimate per-group sds, allocate the remaining budget optimally with the
/// estimates, and form the IPW estimate over the union of both stages.
TwoStageTrace run_two_stage(const PopulationFrame& frame, const Sampler& sampler,
                            const TwoStageConfig& cfg);

/// Simulation entry point: draws from the frame's true parameters with
/// substreams keyed per (stage, group). Identical (frame, cfg, seed) yields
/// an identical trace.
TwoStageTrace run_two_stage(const PopulationFrame& frame, const TwoStageConfig& cfg,
                            std::uint64_t seed);

void to_json(nlohmann::json& j, const TwoStageTrace& trace);

namespace detail {

struct StageOneResult {
  AllocationPlan plan;
  SdVector sd_estimates;
  double effective_sd_floor = 0.0;
};

/// Runs the pilot stage into `obs`; shared by the two-stage and Bayes runners.
StageOneResult run_stage1(const PopulationFrame& frame, const Sampler& sampler,
                          const TwoStageConfig& cfg, ObservationSet& obs);

/// Allocates and draws stage 2 with `alloc_sds`, then assembles the trace.
TwoStageTrace finish_two_stage(const PopulationFrame& frame, const Sampler& sampler,
                               const TwoStageConfig& cfg, ObservationSet obs,
                               AllocationPlan stage1_plan, const SdVector& alloc_sds,
                               double effective_sd_floor);

}  // namespace detail

}  // namespace srw
