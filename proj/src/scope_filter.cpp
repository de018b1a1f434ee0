#include "signrec/scope_filter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "signrec/errors.hpp"
#include "signrec/util.hpp"

namespace signrec {

namespace {

constexpr std::string_view kSamplesHeader = "signdist v1";

LabelStats stats_for(std::span<const DistanceSample> samples, ScopeLabel label) {
  LabelStats stats;
  double sum = 0.0;
  for (const auto& s : samples) {
    if (s.label != label) continue;
    sum += s.rank1_distance;
    ++stats.count;
  }
  if (stats.count == 0) return stats;
  stats.mean = sum / static_cast<double>(stats.count);
  double ss = 0.0;
  for (const auto& s : samples) {
    if (s.label != label) continue;
    double d = s.rank1_distance - stats.mean;
    ss += d * d;
  }
  stats.sd = stats.count > 1 ? std::sqrt(ss / static_cast<double>(stats.count - 1)) : 0.0;
  return stats;
}

void check_samples(std::span<const DistanceSample> samples) {
  std::size_t n_in = 0;
  std::size_t n_out = 0;
  for (const auto& s : samples) {
    if (!std::isfinite(s.rank1_distance) || s.rank1_distance < 0.0) {
      throw Error(ErrorKind::validation,
                  "distance sample must be finite and non-negative, got " +
                      std::to_string(s.rank1_distance));
    }
    (s.label == ScopeLabel::in_scope ? n_in : n_out)++;
  }
  if (n_in < 2 || n_out < 2) {
    throw Error(ErrorKind::validation,
                "calibration needs at least 2 samples per label (got " +
                    std::to_string(n_in) + " in-scope, " + std::to_string(n_out) +
                    " out-of-scope)");
  }
}

double quantile(std::vector<double> sorted_values, double p) {
  if (sorted_values.empty()) return 0.0;
  double idx = p * static_cast<double>(sorted_values.size() - 1);
  std::size_t lo = static_cast<std::size_t>(std::floor(idx));
  std::size_t hi = static_cast<std::size_t>(std::ceil(idx));
  double frac = idx - static_cast<double>(lo);
  return sorted_values[lo] * (1.0 - frac) + sorted_values[hi] * frac;
}

double silverman_bandwidth(const std::vector<double>& values) {
  std::size_t n = values.size();
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;

  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);

  double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  if (spread <= 0.0) {
    // point-mass label: keep the peak finite
    spread = std::max(std::abs(mean) * 1e-3, 1e-6);
  }
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

double gaussian_kde(const std::vector<double>& values, double bandwidth, double x) {
  constexpr double inv_sqrt_2pi = 0.3989422804014327;
  double sum = 0.0;
  for (double v : values) {
    double z = (x - v) / bandwidth;
    sum += std::exp(-0.5 * z * z);
  }
  return sum * inv_sqrt_2pi / (static_cast<double>(values.size()) * bandwidth);
}

}  // namespace

double balanced_accuracy(std::span<const DistanceSample> samples, double threshold) {
  std::size_t in_total = 0, in_accepted = 0, out_total = 0, out_rejected = 0;
  for (const auto& s : samples) {
    if (s.label == ScopeLabel::in_scope) {
      ++in_total;
      if (s.rank1_distance <= threshold) ++in_accepted;
    } else {
      ++out_total;
      if (s.rank1_distance > threshold) ++out_rejected;
    }
  }
  if (in_total == 0 || out_total == 0) {
    throw Error(ErrorKind::validation, "balanced accuracy needs both labels");
  }
  double tpr = static_cast<double>(in_accepted) / static_cast<double>(in_total);
  double tnr = static_cast<double>(out_rejected) / static_cast<double>(out_total);
  return 0.5 * (tpr + tnr);
}

FilterModel calibrate(std::span<const DistanceSample> samples) {
  check_samples(samples);

  std::vector<double> distinct;
  distinct.reserve(samples.size());
  for (const auto& s : samples) distinct.push_back(s.rank1_distance);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  // Candidate intervals for the threshold: (-inf, d0), [d_j, d_{j+1}), and
  // [d_last, inf). Balanced accuracy is constant on each; unbounded ends are
  // clamped one unit past the sample range.
  struct Interval {
    double lo, hi;
    double objective;
  };
  std::vector<Interval> intervals;
  const double d_min = distinct.front();
  const double d_max = distinct.back();
  intervals.push_back({d_min - 1.0, d_min, balanced_accuracy(samples, d_min - 1.0)});
  for (std::size_t j = 0; j < distinct.size(); ++j) {
    double lo = distinct[j];
    double hi = j + 1 < distinct.size() ? distinct[j + 1] : d_max;
    intervals.push_back({lo, hi, balanced_accuracy(samples, distinct[j])});
  }

  double best = 0.0;
  for (const auto& iv : intervals) best = std::max(best, iv.objective);

  // merge adjacent maximizing intervals, then take the midpoint
  double lo = 0.0, hi = 0.0;
  bool open = false, done = false;
  for (const auto& iv : intervals) {
    if (iv.objective == best && !done) {
      if (!open) {
        lo = iv.lo;
        open = true;
      }
      hi = iv.hi;
    } else if (open) {
      done = true;
    }
  }

  FilterModel model;
  model.threshold = 0.5 * (lo + hi);
  model.in_scope = stats_for(samples, ScopeLabel::in_scope);
  model.out_of_scope = stats_for(samples, ScopeLabel::out_of_scope);
  model.separation = 2.0 * best - 1.0;

  double in_max = 0.0, out_min = 0.0;
  bool first_in = true, first_out = true;
  for (const auto& s : samples) {
    if (s.label == ScopeLabel::in_scope) {
      in_max = first_in ? s.rank1_distance : std::max(in_max, s.rank1_distance);
      first_in = false;
    } else {
      out_min = first_out ? s.rank1_distance : std::min(out_min, s.rank1_distance);
      first_out = false;
    }
  }
  model.separable = in_max < out_min;
  return model;
}

FilterDecision apply_filter(const FilterModel& model, double rank1_distance) {
  return rank1_distance > model.threshold ? FilterDecision::reject : FilterDecision::accept;
}

FilterDecision apply_filter(const FilterModel& model, const RetrievalSet& retrieval) {
  if (retrieval.hits.empty()) {
    throw Error(ErrorKind::validation, "cannot filter an empty retrieval set");
  }
  return apply_filter(model, retrieval.hits.front().distance);
}

DensityReport density_report(std::span<const DistanceSample> samples, std::size_t grid_points) {
  check_samples(samples);
  if (grid_points < 2) {
    throw Error(ErrorKind::validation, "density grid needs at least 2 points");
  }

  std::vector<double> in_values, out_values;
  for (const auto& s : samples) {
    (s.label == ScopeLabel::in_scope ? in_values : out_values).push_back(s.rank1_distance);
  }

  DensityReport report;
  report.in_bandwidth = silverman_bandwidth(in_values);
  report.out_bandwidth = silverman_bandwidth(out_values);

  double pad = 4.0 * std::max(report.in_bandwidth, report.out_bandwidth);
  double lo = *std::min_element(in_values.begin(), in_values.end());
  double hi = *std::max_element(in_values.begin(), in_values.end());
  for (double v : out_values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  lo -= pad;
  hi += pad;

  report.grid.resize(grid_points);
  report.in_density.resize(grid_points);
  report.out_density.resize(grid_points);
  double step = (hi - lo) / static_cast<double>(grid_points - 1);
  for (std::size_t i = 0; i < grid_points; ++i) {
    double x = lo + step * static_cast<double>(i);
    report.grid[i] = x;
    report.in_density[i] = gaussian_kde(in_values, report.in_bandwidth, x);
    report.out_density[i] = gaussian_kde(out_values, report.out_bandwidth, x);
  }
  return report;
}

double trapezoid(std::span<const double> grid, std::span<const double> values) {
  if (grid.size() != values.size() || grid.size() < 2) {
    throw Error(ErrorKind::validation, "trapezoid needs matching grids of length >= 2");
  }
  double sum = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    sum += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
  }
  return sum;
}

std::string DensityReport::to_tsv() const {
  std::ostringstream out;
  out << "distance\tin_scope_density\tout_of_scope_density\n";
  char buf[128];
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.9g\t%.9g\t%.9g\n", grid[i], in_density[i],
                  out_density[i]);
    out << buf;
  }
  return out.str();
}

void FilterModel::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["format"] = "signrec-filter-v1";
  j["threshold"] = threshold;
  j["separation"] = separation;
  j["separable"] = separable;
  j["in_scope"] = {{"mean", in_scope.mean}, {"sd", in_scope.sd}, {"count", in_scope.count}};
  j["out_of_scope"] = {{"mean", out_of_scope.mean},
                       {"sd", out_of_scope.sd},
                       {"count", out_of_scope.count}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::io, "cannot open filter file for writing: " + path.string());
  }
  out << j.dump(2) << "\n";
}

FilterModel FilterModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::io, "cannot open filter file: " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, "invalid filter file " + path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "signrec-filter-v1") {
    throw Error(ErrorKind::format, "unrecognized filter file format in " + path.string());
  }
  FilterModel model;
  model.threshold = j.at("threshold").get<double>();
  model.separation = j.at("separation").get<double>();
  model.separable = j.at("separable").get<bool>();
  model.in_scope = {j.at("in_scope").at("mean").get<double>(),
                    j.at("in_scope").at("sd").get<double>(),
                    j.at("in_scope").at("count").get<std::size_t>()};
  model.out_of_scope = {j.at("out_of_scope").at("mean").get<double>(),
                        j.at("out_of_scope").at("sd").get<double>(),
                        j.at("out_of_scope").at("count").get<std::size_t>()};
  return model;
}

void save_distance_samples(std::span<const DistanceSample> samples,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::io, "cannot open samples file for writing: " + path.string());
  }
  out << kSamplesHeader << "\n";
  char buf[64];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof(buf), "%.17g", s.rank1_distance);
    out << (s.label == ScopeLabel::in_scope ? "in" : "out") << "|" << buf << "\n";
  }
}

std::vector<DistanceSample> load_distance_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::io, "cannot open samples file: " + path.string());
  }
  std::vector<DistanceSample> samples;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string trimmed = util::trim(line);
    if (!header_seen) {
      if (trimmed != kSamplesHeader) {
        throw Error(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) +
                                          ": expected header \"" +
                                          std::string(kSamplesHeader) + "\"");
      }
      header_seen = true;
      continue;
    }
    if (trimmed.empty() || trimmed.front() == '#') continue;
    auto fields = util::split(trimmed, '|');
    if (fields.size() != 2 || (fields[0] != "in" && fields[0] != "out")) {
      throw Error(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) +
                                        ": expected in|<distance> or out|<distance>");
    }
    DistanceSample s;
    s.label = fields[0] == "in" ? ScopeLabel::in_scope : ScopeLabel::out_of_scope;
    try {
      s.rank1_distance = std::stod(fields[1]);
    } catch (const std::exception&) {
      throw Error(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) +
                                        ": bad distance value \"" + fields[1] + "\"");
    }
    samples.push_back(s);
  }
  if (!header_seen) {
    throw Error(ErrorKind::parse, path.string() + ": empty samples file (missing header)");
  }
  return samples;
}

}  // namespace signrec
