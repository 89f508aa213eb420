#include "srw/alloc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "srw/errors.hpp"

namespace srw {

namespace {

void validate_sd(const PopulationFrame& frame, const SdVector& sd) {
  if (sd.size() != frame.group_count())
    throw ValidationError("sd vector length does not match group count");
  for (double s : sd)
    if (!(s >= 0.0) || !std::isfinite(s)) throw ValidationError("sd entries must be finite and >= 0");
}

void validate_budget(const PopulationFrame& frame, std::int64_t n) {
  if (n < 1) throw ValidationError("budget must be at least 1");
  if (n > frame.total_size())
    throw InfeasibleError("budget " + std::to_string(n) + " exceeds population size " +
                          std::to_string(frame.total_size()));
}

/// Raise every zero count to one when the budget allows (n >= k), taking
/// units from the largest counts; ties go to the lowest index. Groups with a
/// zero cap cannot hold a unit and are skipped.
void ensure_min_one(std::vector<std::int64_t>& counts, std::int64_t n,
                    std::span<const std::int64_t> caps) {
  const auto k = static_cast<std::int64_t>(counts.size());
  if (n < k) return;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] != 0 || caps[i] == 0) continue;
    std::size_t donor = 0;
    for (std::size_t j = 1; j < counts.size(); ++j)
      if (counts[j] > counts[donor]) donor = j;
    if (counts[donor] <= 1) break;
    --counts[donor];
    counts[i] = 1;
  }
}

}  // namespace

std::string to_string(AllocationMethod method) {
  switch (method) {
    case AllocationMethod::Proportional: return "proportional";
    case AllocationMethod::Optimal: return "optimal";
    case AllocationMethod::Custom: return "custom";
  }
  return "custom";
}

std::vector<std::int64_t> round_counts(std::span<const double> weights,
                                       const PopulationFrame& frame) {
  if (weights.size() != frame.group_count())
    throw ValidationError("weight vector length does not match group count");

  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("weights must be finite and >= 0");
    total += w;
  }
  const auto n = static_cast<std::int64_t>(std::llround(total));
  if (std::abs(total - static_cast<double>(n)) > 1e-9 * std::max<double>(1.0, total))
    throw ValidationError("weights must sum to an integer total");

  std::vector<std::int64_t> counts(weights.size());
  std::vector<double> fractional(weights.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double fl = std::floor(weights[i]);
    counts[i] = static_cast<std::int64_t>(fl);
    fractional[i] = weights[i] - fl;
    assigned += counts[i];
  }

  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (fractional[a] != fractional[b]) return fractional[a] > fractional[b];
    return a < b;
  });

  std::int64_t remaining = n - assigned;
  for (std::size_t pos = 0; remaining > 0 && pos < order.size(); ++pos, --remaining)
    ++counts[order[pos]];
  return counts;
}

AllocationPlan proportional_allocation(const PopulationFrame& frame, std::int64_t n) {
  validate_budget(frame, n);
  const double scale = static_cast<double>(n) / static_cast<double>(frame.total_size());
  std::vector<double> weights(frame.group_count());
  for (std::size_t i = 0; i < weights.size(); ++i)
    weights[i] = scale * static_cast<double>(frame.group(i).size);
  auto counts = round_counts(weights, frame);
  std::vector<std::int64_t> caps(frame.group_count());
  for (std::size_t i = 0; i < caps.size(); ++i) caps[i] = frame.group(i).size;
  ensure_min_one(counts, n, caps);
  return AllocationPlan{std::move(counts), n, AllocationMethod::Proportional};
}

std::vector<double> optimal_weights(const PopulationFrame& frame, const SdVector& sd,
                                    std::int64_t n) {
  validate_sd(frame, sd);
  double total = 0.0;
  for (std::size_t i = 0; i < sd.size(); ++i)
    total += static_cast<double>(frame.group(i).size) * sd[i];
  if (total <= 0.0) throw ZeroSdError("all group sds are zero; optimal weights undefined");

  std::vector<double> weights(sd.size());
  for (std::size_t i = 0; i < sd.size(); ++i)
    weights[i] = static_cast<double>(n) * static_cast<double>(frame.group(i).size) * sd[i] / total;
  return weights;
}

AllocationPlan optimal_allocation_capped(const PopulationFrame& frame, const SdVector& sd,
                                         std::int64_t n, std::span<const std::int64_t> caps,
                                         std::int64_t min_count) {
  validate_sd(frame, sd);
  if (caps.size() != frame.group_count())
    throw ValidationError("caps length does not match group count");
  if (n < 0) throw ValidationError("budget must be nonnegative");

  const std::size_t k = frame.group_count();
  std::int64_t cap_total = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (caps[i] < 0 || caps[i] > frame.group(i).size)
      throw ValidationError("cap out of range for group " + frame.group(i).id);
    cap_total += caps[i];
  }
  if (n > cap_total)
    throw InfeasibleError("budget " + std::to_string(n) + " exceeds remaining capacity " +
                          std::to_string(cap_total));

  bool any_positive = false;
  for (double s : sd) any_positive = any_positive || s > 0.0;
  if (!any_positive) throw ZeroSdError("all group sds are zero; optimal allocation undefined");

  // Cap-and-redistribute on real weights. Fixed groups sit at their caps;
  // the rest share the remaining budget in proportion to N_i sd_i. When only
  // zero-sd capacity remains, the leftover is spread proportionally to N_i
  // (any split among zero-variance groups yields the same design variance).
  std::vector<double> weights(k, 0.0);
  std::vector<char> fixed(k, 0);
  for (std::size_t i = 0; i < k; ++i)
    if (caps[i] == 0) fixed[i] = 1;

  for (;;) {
    double score_total = 0.0;
    double fixed_budget = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (fixed[i])
        fixed_budget += weights[i];
      else
        score_total += static_cast<double>(frame.group(i).size) * sd[i];
    }
    const double remaining = static_cast<double>(n) - fixed_budget;

    if (score_total <= 0.0) {
      double size_total = 0.0;
      for (std::size_t i = 0; i < k; ++i)
        if (!fixed[i]) size_total += static_cast<double>(frame.group(i).size);
      if (remaining > 0.0 && size_total <= 0.0)
        throw InfeasibleError("no capacity left to absorb remaining budget");
      for (std::size_t i = 0; i < k; ++i)
        if (!fixed[i])
          weights[i] = remaining * static_cast<double>(frame.group(i).size) / size_total;
    } else {
      for (std::size_t i = 0; i < k; ++i)
        if (!fixed[i])
          weights[i] =
              remaining * static_cast<double>(frame.group(i).size) * sd[i] / score_total;
    }

    bool overflowed = false;
    for (std::size_t i = 0; i < k; ++i) {
      if (!fixed[i] && weights[i] > static_cast<double>(caps[i])) {
        weights[i] = static_cast<double>(caps[i]);
        fixed[i] = 1;
        overflowed = true;
      }
    }
    if (!overflowed) break;
  }

  auto counts = round_counts(weights, frame);
  // Rounding may push a count one past its cap when many fractional parts
  // tie; repair deterministically.
  for (std::size_t i = 0; i < k; ++i) {
    while (counts[i] > caps[i]) {
      --counts[i];
      std::size_t best = k;
      for (std::size_t j = 0; j < k; ++j)
        if (counts[j] < caps[j] && (best == k || counts[j] > counts[best])) best = j;
      if (best == k) throw InfeasibleError("cannot repair capped rounding");
      ++counts[best];
    }
  }

  if (min_count > 0 && n >= static_cast<std::int64_t>(k) * min_count)
    ensure_min_one(counts, n, caps);
  return AllocationPlan{std::move(counts), n, AllocationMethod::Optimal};
}

AllocationPlan optimal_allocation(const PopulationFrame& frame, const SdVector& sd,
                                  std::int64_t n) {
  validate_budget(frame, n);
  std::vector<std::int64_t> caps(frame.group_count());
  for (std::size_t i = 0; i < caps.size(); ++i) caps[i] = frame.group(i).size;
  return optimal_allocation_capped(frame, sd, n, caps, 1);
}

namespace {

template <typename Count>
double variance_impl(const PopulationFrame& frame, const SdVector& sd,
                     std::span<const Count> counts) {
  validate_sd(frame, sd);
  if (counts.size() != frame.group_count())
    throw ValidationError("count vector length does not match group count");

  double acc = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (sd[i] == 0.0) continue;
    const double ni = static_cast<double>(counts[i]);
    if (!(ni > 0.0))
      throw ValidationError("group '" + frame.group(i).id +
                            "' has positive sd but zero samples; variance undefined");
    const double term = static_cast<double>(frame.group(i).size) * sd[i];
    acc += term * term / ni;
  }
  const double total = static_cast<double>(frame.total_size());
  return acc / (total * total);
}

}  // namespace

double analytic_variance(const PopulationFrame& frame, const SdVector& sd,
                         const AllocationPlan& plan) {
  return variance_impl<std::int64_t>(frame, sd, plan.counts);
}

double analytic_variance(const PopulationFrame& frame, const SdVector& sd,
                         std::span<const double> counts) {
  return variance_impl<double>(frame, sd, counts);
}

double variance_lower_bound(const PopulationFrame& frame, const SdVector& sd, std::int64_t n) {
  validate_sd(frame, sd);
  if (n < 1) throw ValidationError("budget must be at least 1");
  double weighted = 0.0;
  for (std::size_t i = 0; i < sd.size(); ++i)
    weighted += static_cast<double>(frame.group(i).size) * sd[i];
  const double total = static_cast<double>(frame.total_size());
  return weighted * weighted / (static_cast<double>(n) * total * total);
}

double variance_ratio(const PopulationFrame& frame, const SdVector& sd) {
  validate_sd(frame, sd);
  double weighted = 0.0;
  double weighted_sq = 0.0;
  for (std::size_t i = 0; i < sd.size(); ++i) {
    const double size = static_cast<double>(frame.group(i).size);
    weighted += size * sd[i];
    weighted_sq += size * sd[i] * sd[i];
  }
  if (weighted_sq <= 0.0) throw ZeroSdError("all group sds are zero; variance ratio undefined");
  return weighted * weighted / (weighted_sq * static_cast<double>(frame.total_size()));
}

double f_of_t(double t) {
  if (!(t > 0.0)) throw ValidationError("f_of_t requires t > 0");
  const double s = 1.0 + t;
  return s * s / (2.0 * (1.0 + t * t));
}

void write_plan_csv(const AllocationPlan& plan, const PopulationFrame& frame, std::ostream& out) {
  if (plan.counts.size() != frame.group_count())
    throw ValidationError("plan length does not match group count");
  out << "group,n_i\n";
  for (std::size_t i = 0; i < plan.counts.size(); ++i)
    out << frame.group(i).id << ',' << plan.counts[i] << '\n';
}

void to_json(nlohmann::json& j, const AllocationPlan& plan) {
  j = nlohmann::json{{"method", to_string(plan.method)},
                     {"budget", plan.budget},
                     {"counts", plan.counts}};
}

}  // namespace srw
