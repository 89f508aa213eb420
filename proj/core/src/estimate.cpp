#include "srw/estimate.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "srw/errors.hpp"
#include "srw/numeric.hpp"

namespace srw {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void check_counts(const PopulationFrame& frame, std::span<const GroupStats> stats,
                  std::span<const std::int64_t> counts) {
  if (counts.size() != frame.group_count())
    throw ValidationError("count vector length does not match group count");
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (counts[i] != stats[i].count)
      throw ValidationError("counts do not match observations for group '" +
                            frame.group(i).id + "'");
}

}  // namespace

std::vector<GroupStats> group_stats(const ObservationSet& obs) {
  std::vector<GroupStats> stats(obs.group_count());
  for (std::size_t g = 0; g < obs.group_count(); ++g) {
    const auto values = obs.values(g);
    GroupStats& s = stats[g];
    s.count = static_cast<std::int64_t>(values.size());
    if (s.count == 0) continue;
    s.mean = mean(values);
    if (s.count >= 2) s.sd = sample_sd(values);
  }
  return stats;
}

double ipw_mean_from_stats(const PopulationFrame& frame, std::span<const GroupStats> stats) {
  if (stats.size() != frame.group_count())
    throw ValidationError("stats length does not match group count");
  double num = 0.0;
  double den = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    if (stats[i].count == 0) continue;
    const double size = static_cast<double>(frame.group(i).size);
    num += size * stats[i].mean;
    den += size;
    any = true;
  }
  if (!any) throw ValidationError("cannot estimate from an empty observation set");
  return num / den;
}

double ipw_mean(const ObservationSet& obs, const PopulationFrame& frame,
                std::span<const std::int64_t> counts) {
  const auto stats = group_stats(obs);
  check_counts(frame, stats, counts);
  return ipw_mean_from_stats(frame, stats);
}

EstimateResult estimate_from_stats(const PopulationFrame& frame,
                                   std::span<const GroupStats> stats,
                                   const std::optional<SdVector>& sd_override, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("level must lie in (0,1)");
  if (sd_override && sd_override->size() != frame.group_count())
    throw ValidationError("sd override length does not match group count");

  EstimateResult result;
  result.level = level;
  result.mu_hat = ipw_mean_from_stats(frame, stats);

  double var_acc = 0.0;
  result.group_means.resize(stats.size(), 0.0);
  result.group_sds.resize(stats.size(), 0.0);
  result.group_counts.resize(stats.size(), 0);
  for (std::size_t i = 0; i < stats.size(); ++i) {
    result.group_means[i] = stats[i].mean;
    result.group_counts[i] = stats[i].count;
    if (stats[i].sd) result.group_sds[i] = *stats[i].sd;
    if (stats[i].count == 0) {
      result.has_unsampled_groups = true;
      continue;
    }
    double sd = 0.0;
    if (sd_override) {
      sd = (*sd_override)[i];
    } else if (stats[i].sd) {
      sd = *stats[i].sd;
    } else {
      throw ValidationError("group '" + frame.group(i).id +
                            "' has a single observation and no supplied sd");
    }
    const double term = static_cast<double>(frame.group(i).size) * sd;
    var_acc += term * term / static_cast<double>(stats[i].count);
  }
  const double total = static_cast<double>(frame.total_size());
  result.variance = var_acc / (total * total);

  const double z = normal_quantile(0.5 * (1.0 + level));
  const double half_width = z * std::sqrt(result.variance);
  result.ci_low = result.mu_hat - half_width;
  result.ci_high = result.mu_hat + half_width;
  return result;
}

EstimateResult estimate_with_ci(const ObservationSet& obs, const PopulationFrame& frame,
                                std::span<const std::int64_t> counts,
                                const std::optional<SdVector>& sd_override, double level) {
  const auto stats = group_stats(obs);
  check_counts(frame, stats, counts);
  return estimate_from_stats(frame, stats, sd_override, level);
}

void write_estimate_csv(const EstimateResult& result, std::ostream& out) {
  out << "mu_hat,se,ci_low,ci_high,level\n"
      << fmt_double(result.mu_hat) << ',' << fmt_double(std::sqrt(result.variance)) << ','
      << fmt_double(result.ci_low) << ',' << fmt_double(result.ci_high) << ','
      << fmt_double(result.level) << '\n';
}

void to_json(nlohmann::json& j, const EstimateResult& result) {
  j = nlohmann::json{{"mu_hat", result.mu_hat},
                     {"variance", result.variance},
                     {"se", std::sqrt(result.variance)},
                     {"ci_low", result.ci_low},
                     {"ci_high", result.ci_high},
                     {"level", result.level},
                     {"group_means", result.group_means},
                     {"group_sds", result.group_sds},
                     {"group_counts", result.group_counts},
                     {"has_unsampled_groups", result.has_unsampled_groups}};
}

}  // namespace srw
