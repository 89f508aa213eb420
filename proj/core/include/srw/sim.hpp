#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "srw/bayes.hpp"
#include "srw/frame.hpp"
#include "srw/rng.hpp"
#include "srw/twostage.hpp"

namespace srw {

enum class Method { UniformIPW, OracleOptimal, TwoStage, BayesSRW };

std::string to_string(Method method);
std::optional<Method> parse_method(std::string_view name);

struct SimConfig {
  PopulationFrame frame;
  std::int64_t budget = 1000;
  double pilot_fraction = 0.1;
  int replications = 1000;
  std::uint64_t seed = 0;
  std::vector<Method> methods{Method::UniformIPW, Method::OracleOptimal};
  double level = 0.95;
  int min_pilot_per_group = 2;
  bool reuse_pilot = true;
  PriorConfig prior;
};

/// `count` iid draws from the group's true distribution at counter positions
/// 0..count-1 of `stream`; sd = 0 yields copies of the mean.
std::vector<double> draw_group(const GroupSpec& group, std::int64_t count,
                               const RngStream& stream);

struct MethodSummary {
  Method method = Method::UniformIPW;
  std::vector<double> mu_hats;    // one per replication
  std::vector<double> ci_widths;  // one per replication
  double emp_variance = 0.0;
  double mean_ci_width = 0.0;
  double bias = 0.0;
  double mc_se_mean = 0.0;
};

struct McRun {
  std::vector<MethodSummary> methods;
  double mu_true = 0.0;
};

/// Simulates the full pipeline per replication and method. Replication r
/// derives every draw from substreams keyed on (seed, r, stage, group), so
/// results are identical for any thread count; methods share draw streams
/// (common random numbers). Fixed-plan methods (UniformIPW, OracleOptimal)
/// use precomputed plans; TwoStage and BayesSRW run their full algorithms.
McRun run_mc(const SimConfig& cfg, int threads = 1);

/// Delete-one jackknife for the ratio of empirical variances of two per-
/// replication series, plus the derived CI-width reduction 1 - sqrt(ratio).
struct RatioEstimate {
  double ratio = 0.0;
  double se = 0.0;
  double reduction = 0.0;
  double reduction_se = 0.0;
};

RatioEstimate variance_ratio_jackknife(std::span<const double> method_mu_hats,
                                       std::span<const double> baseline_mu_hats);

/// Delete-one jackknife standard error of the median.
double jackknife_median_se(std::vector<double> values);

/// One emitted point of a sweep: the swept coordinate, a method label, the
/// empirical variance ratio against the uniform baseline, the CI-width
/// reduction 1 - sqrt(var_ratio), the jackknife se of var_ratio, and the
/// theoretical ratio overlay.
struct CurvePoint {
  double x = 0.0;
  std::string method;
  double var_ratio = 0.0;
  double ci_reduction = 0.0;
  double mc_se = 0.0;
  double theory = 0.0;
};

/// Default 25-point log-spaced sd-ratio grid over [0.01, 100].
std::vector<double> default_t_grid(int points = 25);

/// Sweep the sd ratio t on a two-group frame with sd = [1, t].
std::vector<CurvePoint> sweep_t(std::span<const double> t_grid, const SimConfig& base,
                                int threads = 1);

/// One curve of the size-ratio study: group sizes [N1, ratio*N1], sd = [1, t].
std::vector<CurvePoint> sweep_size_ratio(double size_ratio, std::span<const double> t_grid,
                                         const SimConfig& base, int threads = 1);

/// Group-count sweep with sd ratios drawn as 10^Y, Y ~ N(0, 2), per draw;
/// reports medians across draws. Budget scales as budget_per_group * k.
/// Methods beyond UniformIPW in base.methods are simulated; otherwise only
/// the theoretical ratio is reported (label "Theory").
std::vector<CurvePoint> sweep_k(std::span<const int> k_grid, int draws_per_k,
                                const SimConfig& base, int threads = 1,
                                std::int64_t budget_per_group = 20);

/// One curve of the pilot-fraction study at a fixed sd ratio t.
std::vector<CurvePoint> sweep_p(std::span<const double> p_grid, double t, const SimConfig& base,
                                int threads = 1);

/// CSV with header `x,method,var_ratio,ci_reduction,mc_se,theory`.
void write_curve_csv(std::span<const CurvePoint> points, std::ostream& out);

/// Frame builders used by the sweeps, the CLI and tests.
PopulationFrame two_group_frame(std::int64_t n1, std::int64_t n2, double sd1, double sd2,
                                double mu1 = 0.0, double mu2 = 0.0);
PopulationFrame equal_size_frame(std::span<const double> sds, std::int64_t group_size,
                                 double mu = 0.0);

}  // namespace srw
