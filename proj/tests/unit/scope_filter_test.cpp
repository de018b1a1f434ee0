#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "signrec/errors.hpp"
#include "signrec/scope_filter.hpp"
#include "signrec/util.hpp"

using namespace signrec;
namespace ts = signrec::testsupport;
namespace fs = std::filesystem;

namespace {

std::vector<DistanceSample> two_cluster_samples(double in_at, double out_at, std::size_t n) {
  std::vector<DistanceSample> samples;
  for (std::size_t i = 0; i < n; ++i) {
    samples.push_back({ScopeLabel::in_scope, in_at});
    samples.push_back({ScopeLabel::out_of_scope, out_at});
  }
  return samples;
}

}  // namespace

TEST_CASE("calibrate places the threshold at the midpoint of clean separation") {
  auto samples = two_cluster_samples(0.2, 0.8, 5);
  auto model = calibrate(samples);
  CHECK(model.threshold == doctest::Approx(0.5));
  CHECK(model.separation == doctest::Approx(1.0));
  CHECK(model.separable);
  CHECK(model.in_scope.count == 5);
  CHECK(model.out_of_scope.count == 5);
  CHECK(model.in_scope.mean == doctest::Approx(0.2));
  CHECK(model.out_of_scope.mean == doctest::Approx(0.8));
}

TEST_CASE("fully overlapping identical samples flag zero separation") {
  auto samples = two_cluster_samples(0.5, 0.5, 3);
  auto model = calibrate(samples);
  CHECK(model.separation == doctest::Approx(0.0));
  CHECK_FALSE(model.separable);
  CHECK(std::isfinite(model.threshold));
}

TEST_CASE("calibrate matches or beats the grid-search oracle") {
  util::DetRng rng(808);
  for (int round = 0; round < 40; ++round) {
    std::vector<DistanceSample> samples;
    double in_mean = 0.2 + rng.next_double() * 0.3;
    double out_mean = in_mean + rng.next_double() * 0.6;
    double spread = 0.02 + rng.next_double() * 0.25;  // sometimes overlapping
    std::size_t n = 5 + rng.next_below(30);
    for (std::size_t i = 0; i < n; ++i) {
      samples.push_back(
          {ScopeLabel::in_scope, std::abs(in_mean + spread * rng.next_gaussian())});
      samples.push_back(
          {ScopeLabel::out_of_scope, std::abs(out_mean + spread * rng.next_gaussian())});
    }
    auto model = calibrate(samples);
    auto oracle = ts::grid_search_threshold(samples, 1000);
    double model_objective = balanced_accuracy(samples, model.threshold);
    CHECK(model_objective >= oracle.objective - 1e-12);
    // separation is Youden's J of the chosen threshold
    CHECK(model_objective == doctest::Approx((model.separation + 1.0) / 2.0));
  }
}

TEST_CASE("calibrate is invariant under sample order") {
  util::DetRng rng(909);
  std::vector<DistanceSample> samples;
  for (int i = 0; i < 30; ++i) {
    samples.push_back({ScopeLabel::in_scope, 0.1 + 0.2 * rng.next_double()});
    samples.push_back({ScopeLabel::out_of_scope, 0.5 + 0.4 * rng.next_double()});
  }
  auto before = calibrate(samples);

  // deterministic shuffle
  for (std::size_t i = samples.size(); i > 1; --i) {
    std::swap(samples[i - 1], samples[rng.next_below(i)]);
  }
  auto after = calibrate(samples);
  CHECK(before.threshold == after.threshold);
  CHECK(before.separation == after.separation);
}

TEST_CASE("calibrate input validation") {
  std::vector<DistanceSample> single_label = {{ScopeLabel::in_scope, 0.1},
                                              {ScopeLabel::in_scope, 0.2}};
  CHECK_THROWS_AS((void)calibrate(single_label), Error);

  std::vector<DistanceSample> too_few = {{ScopeLabel::in_scope, 0.1},
                                         {ScopeLabel::out_of_scope, 0.2}};
  CHECK_THROWS_AS((void)calibrate(too_few), Error);

  std::vector<DistanceSample> negative = two_cluster_samples(0.2, 0.8, 3);
  negative.push_back({ScopeLabel::in_scope, -0.5});
  CHECK_THROWS_AS((void)calibrate(negative), Error);
}

TEST_CASE("apply accepts at or below the threshold, rejects above") {
  FilterModel model;
  model.threshold = 0.5;

  CHECK(apply_filter(model, 0.0) == FilterDecision::accept);
  CHECK(apply_filter(model, 0.5) == FilterDecision::accept);  // boundary inclusive
  CHECK(apply_filter(model, 0.500001) == FilterDecision::reject);

  RetrievalSet retrieval;
  retrieval.hits.push_back({SignCode{"R1-1"}, 0.4, 1});
  retrieval.hits.push_back({SignCode{"R2-1"}, 0.9, 2});  // only rank-1 matters
  CHECK(apply_filter(model, retrieval) == FilterDecision::accept);

  RetrievalSet empty;
  CHECK_THROWS_AS((void)apply_filter(model, empty), Error);
}

TEST_CASE("apply is monotone in distance") {
  FilterModel model;
  model.threshold = 0.37;
  util::DetRng rng(313);
  double max_accepted = -1.0;
  double min_rejected = 1e300;
  for (int i = 0; i < 10000; ++i) {
    double d = rng.next_double() * 2.0;
    if (apply_filter(model, d) == FilterDecision::accept) {
      max_accepted = std::max(max_accepted, d);
    } else {
      min_rejected = std::min(min_rejected, d);
    }
  }
  CHECK(max_accepted <= min_rejected);
}

TEST_CASE("KDE density report") {
  SUBCASE("point mass peaks at the point") {
    std::vector<DistanceSample> samples = {{ScopeLabel::in_scope, 0.3},
                                           {ScopeLabel::in_scope, 0.3},
                                           {ScopeLabel::out_of_scope, 0.6},
                                           {ScopeLabel::out_of_scope, 0.7}};
    auto report = density_report(samples);
    REQUIRE(report.grid.size() == 256);
    std::size_t argmax = 0;
    for (std::size_t i = 1; i < report.grid.size(); ++i) {
      if (report.in_density[i] > report.in_density[argmax]) argmax = i;
    }
    CHECK(std::abs(report.grid[argmax] - 0.3) < 0.01);
  }

  SUBCASE("standard-normal samples land near the analytic peak density") {
    // distances must be non-negative, so shift the gaussians; a translation
    // leaves the density shape untouched
    const double shift = 10.0;
    auto values = ts::normal_samples(1000, 20240601);
    std::vector<DistanceSample> samples;
    double mean = 0.0;
    for (double v : values) {
      samples.push_back({ScopeLabel::in_scope, v + shift});
      mean += v + shift;
    }
    mean /= static_cast<double>(values.size());
    // a far-away out-of-scope pair so the report has both labels
    samples.push_back({ScopeLabel::out_of_scope, 100.0});
    samples.push_back({ScopeLabel::out_of_scope, 101.0});

    auto report = density_report(samples, 512);
    std::size_t nearest = 0;
    for (std::size_t i = 1; i < report.grid.size(); ++i) {
      if (std::abs(report.grid[i] - mean) < std::abs(report.grid[nearest] - mean)) {
        nearest = i;
      }
    }
    double analytic = ts::normal_pdf(0.0);  // 0.3989...
    CHECK(std::abs(report.in_density[nearest] - analytic) / analytic < 0.15);
  }

  SUBCASE("densities integrate to one") {
    util::DetRng rng(515);
    std::vector<DistanceSample> samples;
    for (int i = 0; i < 400; ++i) {
      samples.push_back({ScopeLabel::in_scope, 0.3 + 0.05 * rng.next_gaussian()});
      samples.push_back({ScopeLabel::out_of_scope, 0.9 + 0.08 * rng.next_gaussian()});
    }
    for (auto& s : samples) s.rank1_distance = std::abs(s.rank1_distance);
    auto report = density_report(samples);

    for (double d : report.in_density) CHECK(d >= 0.0);
    for (double d : report.out_density) CHECK(d >= 0.0);
    CHECK(trapezoid(report.grid, report.in_density) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(trapezoid(report.grid, report.out_density) == doctest::Approx(1.0).epsilon(1e-3));
  }

  SUBCASE("tsv table shape") {
    auto samples = two_cluster_samples(0.2, 0.8, 4);
    auto tsv = density_report(samples).to_tsv();
    CHECK(tsv.rfind("distance\tin_scope_density\tout_of_scope_density\n", 0) == 0);
    CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 257);  // header + 256 rows
  }
}

TEST_CASE("filter model and samples files round-trip") {
  auto dir = ts::make_temp_dir("filter_io");

  auto samples = two_cluster_samples(0.25, 0.75, 4);
  samples.push_back({ScopeLabel::in_scope, 0.3125});
  auto model = calibrate(samples);

  auto model_path = dir / "filter.json";
  model.save(model_path);
  auto loaded = FilterModel::load(model_path);
  CHECK(loaded.threshold == model.threshold);
  CHECK(loaded.separation == model.separation);
  CHECK(loaded.separable == model.separable);
  CHECK(loaded.in_scope.count == model.in_scope.count);
  CHECK(loaded.in_scope.mean == model.in_scope.mean);

  auto samples_path = dir / "samples.txt";
  save_distance_samples(samples, samples_path);
  auto loaded_samples = load_distance_samples(samples_path);
  REQUIRE(loaded_samples.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(loaded_samples[i].label == samples[i].label);
    CHECK(loaded_samples[i].rank1_distance == samples[i].rank1_distance);
  }

  CHECK_THROWS_AS((void)FilterModel::load(dir / "missing.json"), Error);
  CHECK_THROWS_AS((void)load_distance_samples(dir / "missing.txt"), Error);

  fs::remove_all(dir);
}
