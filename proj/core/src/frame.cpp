#include "srw/frame.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "srw/errors.hpp"

namespace srw {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

std::optional<double> parse_double(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(value))
    return std::nullopt;
  return value;
}

std::optional<std::int64_t> parse_int(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  std::int64_t value = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

[[noreturn]] void row_error(const std::string& what, std::size_t row) {
  throw ValidationError(what + " at row " + std::to_string(row));
}

}  // namespace

PopulationFrame::PopulationFrame(std::vector<GroupSpec> groups) : groups_(std::move(groups)) {
  if (groups_.empty()) throw ValidationError("frame must contain at least one group");
  std::unordered_set<std::string> seen;
  total_size_ = 0;
  for (const auto& g : groups_) {
    if (g.id.empty()) throw ValidationError("empty group id");
    if (!seen.insert(g.id).second) throw ValidationError("duplicate group id '" + g.id + "'");
    if (g.size < 1) throw ValidationError("nonpositive size for group '" + g.id + "'");
    if (g.true_mean.has_value() != g.true_sd.has_value())
      throw ValidationError("group '" + g.id + "' must carry both mean and sd or neither");
    if (g.true_sd && (!(*g.true_sd >= 0.0) || !std::isfinite(*g.true_sd)))
      throw ValidationError("negative or non-finite sd for group '" + g.id + "'");
    if (g.true_mean && !std::isfinite(*g.true_mean))
      throw ValidationError("non-finite mean for group '" + g.id + "'");
    total_size_ += g.size;
  }
}

std::optional<std::size_t> PopulationFrame::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < groups_.size(); ++i)
    if (groups_[i].id == id) return i;
  return std::nullopt;
}

bool PopulationFrame::fully_specified() const {
  return std::all_of(groups_.begin(), groups_.end(),
                     [](const GroupSpec& g) { return g.fully_specified(); });
}

double PopulationFrame::population_mean() const {
  double acc = 0.0;
  for (const auto& g : groups_) {
    if (!g.fully_specified())
      throw ValidationError("population_mean requires a fully specified frame");
    acc += static_cast<double>(g.size) * *g.true_mean;
  }
  return acc / static_cast<double>(total_size_);
}

std::vector<double> PopulationFrame::true_sds() const {
  std::vector<double> sds;
  sds.reserve(groups_.size());
  for (const auto& g : groups_) {
    if (!g.true_sd) throw ValidationError("true_sds requires a fully specified frame");
    sds.push_back(*g.true_sd);
  }
  return sds;
}

ObservationSet::ObservationSet(const PopulationFrame& frame)
    : caps_(frame.group_count()), obs_(frame.group_count()) {
  for (std::size_t i = 0; i < frame.group_count(); ++i) caps_[i] = frame.group(i).size;
}

void ObservationSet::add(std::size_t group, int stage, double value) {
  if (group >= obs_.size()) throw ValidationError("observation group index out of range");
  if (stage != 1 && stage != 2) throw ValidationError("observation stage must be 1 or 2");
  if (!std::isfinite(value)) throw ValidationError("non-finite observation value");
  if (static_cast<std::int64_t>(obs_[group].size()) >= caps_[group])
    throw ValidationError("observation count exceeds group size");
  obs_[group].push_back(Observation{stage, value});
}

std::int64_t ObservationSet::count(std::size_t group) const {
  return static_cast<std::int64_t>(obs_[group].size());
}

std::int64_t ObservationSet::total_count() const {
  std::int64_t total = 0;
  for (const auto& g : obs_) total += static_cast<std::int64_t>(g.size());
  return total;
}

std::vector<std::int64_t> ObservationSet::counts() const {
  std::vector<std::int64_t> out(obs_.size());
  for (std::size_t i = 0; i < obs_.size(); ++i) out[i] = count(i);
  return out;
}

std::vector<std::int64_t> ObservationSet::stage_counts(int stage) const {
  std::vector<std::int64_t> out(obs_.size(), 0);
  for (std::size_t i = 0; i < obs_.size(); ++i)
    for (const auto& o : obs_[i])
      if (o.stage == stage) ++out[i];
  return out;
}

std::vector<double> ObservationSet::values(std::size_t group) const {
  std::vector<double> out;
  out.reserve(obs_[group].size());
  for (const auto& o : obs_[group]) out.push_back(o.value);
  return out;
}

std::vector<double> ObservationSet::stage_values(std::size_t group, int stage) const {
  std::vector<double> out;
  for (const auto& o : obs_[group])
    if (o.stage == stage) out.push_back(o.value);
  return out;
}

ObservationSet ObservationSet::stage_subset(int stage) const {
  ObservationSet sub = *this;
  for (auto& g : sub.obs_) {
    std::erase_if(g, [stage](const Observation& o) { return o.stage != stage; });
  }
  return sub;
}

double ObservationSet::max_abs_value() const {
  double m = 0.0;
  for (const auto& g : obs_)
    for (const auto& o : g) m = std::max(m, std::abs(o.value));
  return m;
}

PopulationFrame load_frame(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open frame file '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty frame file '" + path.string() + "'");
  const auto header = split_csv_row(line);
  bool with_params = false;
  if (header.size() == 2 && trim(header[0]) == "group" && trim(header[1]) == "size") {
    with_params = false;
  } else if (header.size() == 4 && trim(header[0]) == "group" && trim(header[1]) == "size" &&
             trim(header[2]) == "mean" && trim(header[3]) == "sd") {
    with_params = true;
  } else {
    throw ValidationError("frame header must be 'group,size' or 'group,size,mean,sd'");
  }

  std::vector<GroupSpec> groups;
  std::unordered_set<std::string> seen;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_row(line);
    if (fields.size() != header.size()) row_error("malformed row (wrong field count)", row);

    GroupSpec g;
    g.id = trim(fields[0]);
    if (g.id.empty()) row_error("empty group id", row);
    if (!seen.insert(g.id).second) row_error("duplicate group id '" + g.id + "'", row);

    const auto size = parse_int(fields[1]);
    if (!size) row_error("malformed size", row);
    if (*size < 1) row_error("nonpositive size", row);
    g.size = *size;

    if (with_params) {
      const bool mean_empty = trim(fields[2]).empty();
      const bool sd_empty = trim(fields[3]).empty();
      if (mean_empty != sd_empty) row_error("mean and sd must be given together", row);
      if (!mean_empty) {
        const auto mean = parse_double(fields[2]);
        const auto sd = parse_double(fields[3]);
        if (!mean) row_error("malformed mean", row);
        if (!sd) row_error("malformed sd", row);
        if (*sd < 0.0) row_error("negative sd", row);
        g.true_mean = *mean;
        g.true_sd = *sd;
      }
    }
    groups.push_back(std::move(g));
  }
  return PopulationFrame(std::move(groups));
}

void write_frame_csv(const PopulationFrame& frame, std::ostream& out) {
  const bool with_params =
      std::any_of(frame.groups().begin(), frame.groups().end(),
                  [](const GroupSpec& g) { return g.fully_specified(); });
  out << (with_params ? "group,size,mean,sd\n" : "group,size\n");
  for (const auto& g : frame.groups()) {
    out << g.id << ',' << g.size;
    if (with_params) {
      out << ',';
      if (g.true_mean) out << fmt_double(*g.true_mean);
      out << ',';
      if (g.true_sd) out << fmt_double(*g.true_sd);
    }
    out << '\n';
  }
}

void write_frame_csv(const PopulationFrame& frame, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path.string() + "' for writing");
  write_frame_csv(frame, out);
}

ObservationSet load_observations(const std::filesystem::path& path,
                                 const PopulationFrame& frame) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open observation file '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("empty observation file '" + path.string() + "'");
  const auto header = split_csv_row(line);
  if (header.size() != 3 || trim(header[0]) != "group" || trim(header[1]) != "stage" ||
      trim(header[2]) != "value")
    throw ValidationError("observation header must be 'group,stage,value'");

  ObservationSet set(frame);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_row(line);
    if (fields.size() != 3) row_error("malformed row (wrong field count)", row);

    const std::string id = trim(fields[0]);
    const auto idx = frame.index_of(id);
    if (!idx) row_error("unknown group id '" + id + "'", row);

    const auto stage = parse_int(fields[1]);
    if (!stage || (*stage != 1 && *stage != 2)) row_error("stage must be 1 or 2", row);

    const auto value = parse_double(fields[2]);
    if (!value) row_error("non-numeric value", row);

    set.add(*idx, static_cast<int>(*stage), *value);
  }
  return set;
}

}  // namespace srw
