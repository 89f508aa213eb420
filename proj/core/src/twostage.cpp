#include "srw/twostage.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "srw/errors.hpp"
#include "srw/numeric.hpp"

namespace srw {

namespace {

void validate_config(const PopulationFrame& frame, const TwoStageConfig& cfg) {
  if (cfg.budget < 1) throw ValidationError("budget must be at least 1");
  if (cfg.budget > frame.total_size())
    throw InfeasibleError("budget " + std::to_string(cfg.budget) + " exceeds population size " +
                          std::to_string(frame.total_size()));
  if (!(cfg.pilot_fraction >= 0.0 && cfg.pilot_fraction < 1.0))
    throw ValidationError("pilot fraction must lie in [0,1)");
  if (cfg.min_pilot_per_group < 2)
    throw ValidationError("min_pilot_per_group must be at least 2");
  if (!(cfg.sd_floor >= 0.0)) throw ValidationError("sd_floor must be nonnegative");
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) throw ValidationError("level must lie in (0,1)");
}

/// Proportional pilot plan on budget n1 with every group raised to the pilot
/// minimum; surplus units come off the largest counts.
AllocationPlan pilot_plan(const PopulationFrame& frame, std::int64_t n1, std::int64_t min_pilot) {
  const std::size_t k = frame.group_count();
  for (std::size_t i = 0; i < k; ++i)
    if (frame.group(i).size < min_pilot)
      throw InfeasibleError("group '" + frame.group(i).id + "' is smaller than the pilot minimum");

  AllocationPlan plan = proportional_allocation(frame, n1);
  std::int64_t surplus = 0;
  for (auto& c : plan.counts) {
    if (c < min_pilot) {
      surplus -= min_pilot - c;
      c = min_pilot;
    }
  }
  while (surplus < 0) {
    std::size_t donor = k;
    for (std::size_t j = 0; j < k; ++j)
      if (plan.counts[j] > min_pilot && (donor == k || plan.counts[j] > plan.counts[donor]))
        donor = j;
    if (donor == k) throw InfeasibleError("pilot budget cannot satisfy the per-group minimum");
    --plan.counts[donor];
    ++surplus;
  }
  return plan;
}

void draw_stage(const PopulationFrame& frame, const Sampler& sampler, int stage,
                const AllocationPlan& plan, ObservationSet& obs) {
  for (std::size_t g = 0; g < frame.group_count(); ++g)
    for (std::int64_t j = 0; j < plan.counts[g]; ++j) obs.add(g, stage, sampler(stage, g, j));
}

}  // namespace

Sampler frame_sampler(const PopulationFrame& frame, RngStream root) {
  if (!frame.fully_specified())
    throw ValidationError("sampling requires a fully specified frame (mean and sd per group)");
  std::vector<double> means(frame.group_count());
  std::vector<double> sds(frame.group_count());
  for (std::size_t i = 0; i < frame.group_count(); ++i) {
    means[i] = *frame.group(i).true_mean;
    sds[i] = *frame.group(i).true_sd;
  }
  return [root, means = std::move(means), sds = std::move(sds)](int stage, std::size_t group,
                                                                std::int64_t index) {
    if (sds[group] == 0.0) return means[group];
    const RngStream stream = root.fork(static_cast<std::uint64_t>(stage)).fork(group);
    return means[group] + sds[group] * stream.normal(static_cast<std::uint64_t>(index));
  };
}

SdVector sd_estimate_stage1(const ObservationSet& obs, double sd_floor) {
  SdVector sds(obs.group_count());
  for (std::size_t g = 0; g < obs.group_count(); ++g) {
    const auto values = obs.stage_values(g, 1);
    if (values.size() < 2)
      throw ValidationError("pilot group " + std::to_string(g) +
                            " has fewer than 2 stage-1 observations");
    sds[g] = std::max(sample_sd(values), sd_floor);
  }
  return sds;
}

namespace detail {

StageOneResult run_stage1(const PopulationFrame& frame, const Sampler& sampler,
                          const TwoStageConfig& cfg, ObservationSet& obs) {
  validate_config(frame, cfg);
  const auto k = static_cast<std::int64_t>(frame.group_count());

  StageOneResult out;
  if (cfg.pilot_fraction == 0.0) {
    out.plan = AllocationPlan{std::vector<std::int64_t>(frame.group_count(), 0), 0,
                              AllocationMethod::Proportional};
    out.effective_sd_floor = cfg.sd_floor;
    return out;
  }

  const double raw_pilot = static_cast<double>(cfg.budget) * cfg.pilot_fraction;
  if (std::floor(raw_pilot) < static_cast<double>(k * cfg.min_pilot_per_group))
    throw InfeasibleError("pilot budget floor(n*p) = " +
                          std::to_string(static_cast<std::int64_t>(std::floor(raw_pilot))) +
                          " cannot cover " + std::to_string(cfg.min_pilot_per_group) +
                          " draws in each of " + std::to_string(k) + " groups");
  const auto n1 = static_cast<std::int64_t>(std::llround(raw_pilot));

  out.plan = pilot_plan(frame, n1, cfg.min_pilot_per_group);
  draw_stage(frame, sampler, 1, out.plan, obs);

  out.effective_sd_floor = std::max(cfg.sd_floor, 1e-9 * (obs.max_abs_value() + 1.0));
  out.sd_estimates = sd_estimate_stage1(obs, out.effective_sd_floor);
  return out;
}

TwoStageTrace finish_two_stage(const PopulationFrame& frame, const Sampler& sampler,
                               const TwoStageConfig& cfg, ObservationSet obs,
                               AllocationPlan stage1_plan, const SdVector& alloc_sds,
                               double effective_sd_floor) {
  const std::size_t k = frame.group_count();
  const std::int64_t n2 = cfg.budget - stage1_plan.budget;

  std::vector<std::int64_t> caps(k);
  for (std::size_t i = 0; i < k; ++i) caps[i] = frame.group(i).size - stage1_plan.counts[i];

  AllocationPlan stage2_plan;
  if (n2 == 0) {
    stage2_plan =
        AllocationPlan{std::vector<std::int64_t>(k, 0), 0, AllocationMethod::Proportional};
  } else if (stage1_plan.budget == 0) {
    // No pilot: the whole budget runs as the uniform (proportional) design.
    stage2_plan = proportional_allocation(frame, n2);
  } else {
    const bool all_floored = std::all_of(alloc_sds.begin(), alloc_sds.end(), [&](double s) {
      return s <= effective_sd_floor;
    });
    if (all_floored) {
      const SdVector flat(k, 1.0);
      stage2_plan = optimal_allocation_capped(frame, flat, n2, caps, 0);
      stage2_plan.method = AllocationMethod::Proportional;
    } else {
      stage2_plan = optimal_allocation_capped(frame, alloc_sds, n2, caps, 0);
    }
  }

  draw_stage(frame, sampler, 2, stage2_plan, obs);

  TwoStageTrace trace{std::move(stage1_plan), alloc_sds, std::move(stage2_plan),
                      std::vector<std::int64_t>(), EstimateResult{}, std::move(obs)};
  trace.combined_counts.resize(k);
  for (std::size_t i = 0; i < k; ++i)
    trace.combined_counts[i] = trace.stage1_plan.counts[i] + trace.stage2_plan.counts[i];

  if (cfg.reuse_pilot) {
    trace.result = estimate_with_ci(trace.observations, frame, trace.combined_counts,
                                    std::nullopt, cfg.level);
  } else {
    const ObservationSet stage2_only = trace.observations.stage_subset(2);
    trace.result = estimate_with_ci(stage2_only, frame, trace.stage2_plan.counts, std::nullopt,
                                    cfg.level);
  }
  return trace;
}

}  // namespace detail

TwoStageTrace run_two_stage(const PopulationFrame& frame, const Sampler& sampler,
                            const TwoStageConfig& cfg) {
  ObservationSet obs(frame);
  auto stage1 = detail::run_stage1(frame, sampler, cfg, obs);
  return detail::finish_two_stage(frame, sampler, cfg, std::move(obs), std::move(stage1.plan),
                                  stage1.sd_estimates, stage1.effective_sd_floor);
}

TwoStageTrace run_two_stage(const PopulationFrame& frame, const TwoStageConfig& cfg,
                            std::uint64_t seed) {
  return run_two_stage(frame, frame_sampler(frame, RngStream(seed)), cfg);
}

void to_json(nlohmann::json& j, const TwoStageTrace& trace) {
  j = nlohmann::json{{"stage1_plan", trace.stage1_plan},
                     {"sd_estimates", trace.sd_estimates},
                     {"stage2_plan", trace.stage2_plan},
                     {"combined_counts", trace.combined_counts},
                     {"result", trace.result}};
}

}  // namespace srw
