#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace srw {

/// One population group: a label, its size N_i, and (for simulation only)
/// the true mean and standard deviation of its measurement distribution.
/// A group is either fully specified for simulation (both mean and sd) or
/// carries neither.
struct GroupSpec {
  std::string id;
  std::int64_t size = 0;
  std::optional<double> true_mean;
  std::optional<double> true_sd;

  bool fully_specified() const { return true_mean.has_value() && true_sd.has_value(); }
};

/// Ordered collection of groups. Group order is significant: it is the file
/// order on load and the deterministic tie-break order everywhere downstream.
class PopulationFrame {
 public:
  /// Validates and adopts `groups`: k >= 1, sizes >= 1, unique ids,
  /// sd >= 0 where present, mean and sd present together or not at all.
  explicit PopulationFrame(std::vector<GroupSpec> groups);

  std::size_t group_count() const { return groups_.size(); }
  std::int64_t total_size() const { return total_size_; }
  const GroupSpec& group(std::size_t i) const { return groups_[i]; }
  const std::vector<GroupSpec>& groups() const { return groups_; }

  std::optional<std::size_t> index_of(std::string_view id) const;

  /// True when every group carries (mean, sd); required by the simulator.
  bool fully_specified() const;

  /// Size-weighted average of the group means; requires fully_specified().
  double population_mean() const;

  /// Per-group true standard deviations; requires fully_specified().
  std::vector<double> true_sds() const;

 private:
  std::vector<GroupSpec> groups_;
  std::int64_t total_size_ = 0;
};

/// Stage tag carried by every observation; pilot draws are stage 1,
/// follow-up draws stage 2.
struct Observation {
  int stage = 1;
  double value = 0.0;
};

/// Observed values grouped by frame index. Enforces that per-group counts
/// never exceed the group size recorded in the frame it was built from.
class ObservationSet {
 public:
  explicit ObservationSet(const PopulationFrame& frame);

  void add(std::size_t group, int stage, double value);

  std::size_t group_count() const { return obs_.size(); }
  std::int64_t count(std::size_t group) const;
  std::int64_t total_count() const;
  std::vector<std::int64_t> counts() const;
  std::vector<std::int64_t> stage_counts(int stage) const;

  const std::vector<Observation>& observations(std::size_t group) const { return obs_[group]; }
  std::vector<double> values(std::size_t group) const;
  std::vector<double> stage_values(std::size_t group, int stage) const;

  /// Copy containing only observations with the given stage tag.
  ObservationSet stage_subset(int stage) const;

  /// Largest |value| over all groups; 0 for an empty set.
  double max_abs_value() const;

 private:
  std::vector<std::int64_t> caps_;
  std::vector<std::vector<Observation>> obs_;
};

/// Reads a frame from CSV with header `group,size` or `group,size,mean,sd`.
/// In the 4-column form a row may leave both mean and sd empty. Errors
/// carry 1-based row numbers (the header is row 1).
PopulationFrame load_frame(const std::filesystem::path& path);

void write_frame_csv(const PopulationFrame& frame, std::ostream& out);
void write_frame_csv(const PopulationFrame& frame, const std::filesystem::path& path);

/// Reads observations from CSV with header `group,stage,value`. Every group
/// id must exist in `frame`; stage must be 1 or 2. An empty body is valid.
ObservationSet load_observations(const std::filesystem::path& path, const PopulationFrame& frame);

}  // namespace srw
