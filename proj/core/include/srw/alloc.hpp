#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "srw/frame.hpp"

namespace srw {

enum class AllocationMethod { Proportional, Optimal, Custom };

std::string to_string(AllocationMethod method);

/// Integer per-group sample counts n_i summing exactly to the budget n.
struct AllocationPlan {
  std::vector<std::int64_t> counts;
  std::int64_t budget = 0;
  AllocationMethod method = AllocationMethod::Custom;
};

/// Per-group standard deviations (true values or estimates), frame order.
using SdVector = std::vector<double>;

/// Largest-remainder (Hamilton) rounding of nonnegative real weights summing
/// to an integer n: floors first, then one extra unit per group in descending
/// fractional-part order, ties broken by ascending group index. The result
/// sums to n exactly.
std::vector<std::int64_t> round_counts(std::span<const double> weights,
                                       const PopulationFrame& frame);

/// n_i proportional to N_i (the uniform design), rounded by round_counts.
/// When n >= k every group receives at least one unit.
AllocationPlan proportional_allocation(const PopulationFrame& frame, std::int64_t n);

/// Raw variance-minimizing weights n * N_i sd_i / sum_j N_j sd_j, with no
/// capping or rounding. Groups with sd_i = 0 get weight 0.
std::vector<double> optimal_weights(const PopulationFrame& frame, const SdVector& sd,
                                    std::int64_t n);

/// Variance-minimizing allocation: weights proportional to N_i sd_i, capped
/// at N_i with the excess redistributed over uncapped groups, then rounded.
/// When n >= k every group receives at least one unit, taking units from the
/// largest counts. Throws ZeroSdError when every sd is zero.
AllocationPlan optimal_allocation(const PopulationFrame& frame, const SdVector& sd,
                                  std::int64_t n);

/// As optimal_allocation but with explicit per-group caps and a per-group
/// minimum; used by the two-stage runner where stage-1 draws consume caps.
AllocationPlan optimal_allocation_capped(const PopulationFrame& frame, const SdVector& sd,
                                         std::int64_t n, std::span<const std::int64_t> caps,
                                         std::int64_t min_count);

/// Design variance (1/N^2) sum_i N_i^2 sd_i^2 / n_i. Groups with sd_i = 0
/// contribute nothing; a group with sd_i > 0 and n_i = 0 makes the plan
/// infeasible and throws.
double analytic_variance(const PopulationFrame& frame, const SdVector& sd,
                         const AllocationPlan& plan);

/// Same formula over real-valued counts (e.g. unrounded optimal weights).
double analytic_variance(const PopulationFrame& frame, const SdVector& sd,
                         std::span<const double> counts);

/// Cauchy-Schwarz lower bound (1/N^2)(1/n)(sum_i N_i sd_i)^2, attained by the
/// unrounded optimal weights.
double variance_lower_bound(const PopulationFrame& frame, const SdVector& sd, std::int64_t n);

/// Budget-free ratio of optimal to uniform design variance:
/// (sum N_i sd_i)^2 / ((sum N_i sd_i^2)(sum N_i)), in (0,1].
double variance_ratio(const PopulationFrame& frame, const SdVector& sd);

/// variance_ratio specialized to two equal-size groups with sd = [1, t]:
/// (1+t)^2 / (2(1+t^2)). Log-symmetric: f(t) = f(1/t).
double f_of_t(double t);

/// CSV serialization: header `group,n_i`, one row per group.
void write_plan_csv(const AllocationPlan& plan, const PopulationFrame& frame, std::ostream& out);

/// JSON document carrying method, budget and counts.
void to_json(nlohmann::json& j, const AllocationPlan& plan);

}  // namespace srw
