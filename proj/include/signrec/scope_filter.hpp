#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "signrec/retrieval.hpp"

namespace signrec {

enum class ScopeLabel { in_scope, out_of_scope };

struct DistanceSample {
  ScopeLabel label;
  double rank1_distance = 0.0;
};

struct LabelStats {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t count = 0;
};

// Threshold on the rank-1 retrieval distance separating in-catalog signs from
// out-of-scope objects. separation is Youden's J at the chosen threshold
// (0 = indistinguishable, 1 = perfect); separable reports strict disjointness
// of the calibration distributions.
struct FilterModel {
  double threshold = 0.0;
  LabelStats in_scope;
  LabelStats out_of_scope;
  double separation = 0.0;
  bool separable = false;

  void save(const std::filesystem::path& path) const;
  static FilterModel load(const std::filesystem::path& path);
};

// Chooses the threshold maximizing balanced accuracy on the calibration
// samples (accept means distance <= threshold). The objective is piecewise
// constant between sorted sample distances; the maximizing interval's
// midpoint becomes the threshold. Requires at least two samples per label.
FilterModel calibrate(std::span<const DistanceSample> samples);

// balanced accuracy of an arbitrary threshold on a sample set (grid-search
// oracle support and calibration internals)
double balanced_accuracy(std::span<const DistanceSample> samples, double threshold);

enum class FilterDecision { accept, reject };

// reject iff rank-1 distance exceeds the threshold (boundary accepts)
FilterDecision apply_filter(const FilterModel& model, double rank1_distance);
FilterDecision apply_filter(const FilterModel& model, const RetrievalSet& retrieval);

// Gaussian-kernel density estimate per label on a shared uniform grid,
// bandwidth via Silverman's rule. Plottable via to_tsv().
struct DensityReport {
  std::vector<double> grid;
  std::vector<double> in_density;
  std::vector<double> out_density;
  double in_bandwidth = 0.0;
  double out_bandwidth = 0.0;

  std::string to_tsv() const;
};

DensityReport density_report(std::span<const DistanceSample> samples,
                             std::size_t grid_points = 256);

double trapezoid(std::span<const double> grid, std::span<const double> values);

// Sample file: header "signdist v1", then one "in|<distance>" or
// "out|<distance>" record per line.
void save_distance_samples(std::span<const DistanceSample> samples,
                           const std::filesystem::path& path);
std::vector<DistanceSample> load_distance_samples(const std::filesystem::path& path);

}  // namespace signrec
