#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "signrec/generation.hpp"
#include "signrec/retrieval.hpp"
#include "signrec/vector_store.hpp"

namespace signrec {

struct LabeledExample {
  std::string image_path;  // resolved absolute path
  SignCode true_code;
  std::string condition;  // "ideal" | "real-world"
};

// Dataset manifest: header "signeval v1", then image-path|true-code[|condition]
// per line. Image paths resolve relative to the manifest.
std::vector<LabeledExample> load_dataset(const std::filesystem::path& manifest);

struct RunMetrics {
  double top1_acc = 0.0;  // percentages, raw (display rounds half-up to 2 decimals)
  double top5_acc = 0.0;
  double gen_acc = 0.0;
  std::size_t n = 0;
  int run_index = 0;  // 1-based; 0 marks the mean row
};

RunMetrics mean_metrics(std::span<const RunMetrics> runs);

struct EvalOptions {
  int runs = 5;
  std::size_t k = kDefaultTopK;
  const FilterModel* scope_filter = nullptr;
  std::string template_version = TemplateRegistry::default_version();
  std::filesystem::path audit_dir;  // when set, per-run outcome logs are written here
};

struct EvalResult {
  std::vector<RunMetrics> runs;
  RunMetrics mean;
};

// The repeated-runs protocol: for every example, run the full pipeline with
// the example's truth as the mock oracle hint; Top-1 scores the rank-1 hit,
// Top-5 scores membership anywhere in the hit list, Gen scores the final
// emitted code. Every true code is checked against the store before the
// first model call.
EvalResult evaluate(std::span<const LabeledExample> dataset, const VectorStore& store,
                    const Backends& backends, const EvalOptions& options = {});

enum class ReportFormat { plain_table, delimited };

// Deterministic rendering with a labeled mean row; plain_table mirrors the
// Run / Top-1 / Top-5 / Gen layout used in the experiment write-ups.
std::string report(std::span<const RunMetrics> runs, ReportFormat format);

std::string metrics_to_json(const EvalResult& result);

struct LatencyStats {
  double mean_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
  double sd_ms = 0.0;
};

struct LatencyReport {
  LatencyStats total;
  LatencyStats descriptor;
  LatencyStats embed;
  LatencyStats store_query;
  LatencyStats generation;
  std::size_t trials = 0;         // successful trials included in the stats
  std::size_t failed_trials = 0;  // recorded and excluded, never silently dropped

  std::string render() const;
  std::string to_json() const;
};

struct BenchOptions {
  std::size_t trials = 100;
  std::size_t k = kDefaultTopK;
  std::string template_version = TemplateRegistry::default_version();
  // injected stage delays for profiler verification
  std::chrono::microseconds descriptor_delay{0};
  std::chrono::microseconds embed_delay{0};
  std::chrono::microseconds store_delay{0};
  std::chrono::microseconds generation_delay{0};
};

// Repeated single-image pipeline timing; trials cycle through the dataset.
// Injected delays are configured on the mock backends by the caller except
// the store delay, which recognize() charges to the query stage.
LatencyReport bench_latency(std::span<const LabeledExample> dataset, const VectorStore& store,
                            const Backends& backends, const BenchOptions& options = {});

}  // namespace signrec
