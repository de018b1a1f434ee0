#include "signrec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "signrec/errors.hpp"
#include "signrec/util.hpp"

namespace signrec {

namespace {
constexpr std::string_view kDatasetHeader = "signeval v1";
}

std::vector<LabeledExample> load_dataset(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) {
    throw Error(ErrorKind::io, "cannot open dataset manifest: " + manifest.string());
  }
  const auto base_dir = manifest.has_parent_path() ? manifest.parent_path()
                                                   : std::filesystem::path(".");
  std::vector<LabeledExample> examples;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string trimmed = util::trim(line);
    if (!header_seen) {
      if (trimmed != kDatasetHeader) {
        throw Error(ErrorKind::parse,
                    manifest.string() + ":" + std::to_string(line_no) +
                        ": expected header \"" + std::string(kDatasetHeader) + "\"");
      }
      header_seen = true;
      continue;
    }
    if (trimmed.empty() || trimmed.front() == '#') continue;

    auto fields = util::split(trimmed, '|');
    if (fields.size() < 2 || fields.size() > 3) {
      throw Error(ErrorKind::parse, manifest.string() + ":" + std::to_string(line_no) +
                                        ": expected image|code[|condition]");
    }
    LabeledExample example;
    std::filesystem::path image = base_dir / util::trim(fields[0]);
    if (!std::filesystem::exists(image)) {
      throw Error(ErrorKind::io, "missing image file: " + image.string());
    }
    example.image_path = image.string();
    std::string code = util::trim(fields[1]);
    if (!SignCode::valid(code)) {
      throw Error(ErrorKind::parse, manifest.string() + ":" + std::to_string(line_no) +
                                        ": malformed sign code \"" + code + "\"");
    }
    example.true_code = SignCode{code};
    example.condition = fields.size() == 3 ? util::trim(fields[2]) : "ideal";
    if (example.condition != "ideal" && example.condition != "real-world") {
      throw Error(ErrorKind::parse, manifest.string() + ":" + std::to_string(line_no) +
                                        ": condition must be ideal or real-world");
    }
    examples.push_back(std::move(example));
  }
  if (!header_seen) {
    throw Error(ErrorKind::parse, manifest.string() + ": empty manifest (missing header)");
  }
  return examples;
}

RunMetrics mean_metrics(std::span<const RunMetrics> runs) {
  if (runs.empty()) {
    throw Error(ErrorKind::validation, "cannot average zero runs");
  }
  RunMetrics mean;
  for (const auto& run : runs) {
    mean.top1_acc += run.top1_acc;
    mean.top5_acc += run.top5_acc;
    mean.gen_acc += run.gen_acc;
  }
  double n = static_cast<double>(runs.size());
  mean.top1_acc /= n;
  mean.top5_acc /= n;
  mean.gen_acc /= n;
  mean.n = runs.front().n;
  mean.run_index = 0;
  return mean;
}

EvalResult evaluate(std::span<const LabeledExample> dataset, const VectorStore& store,
                    const Backends& backends, const EvalOptions& options) {
  if (dataset.empty()) {
    throw Error(ErrorKind::validation, "dataset is empty");
  }
  if (options.runs < 1) {
    throw Error(ErrorKind::validation, "runs must be at least 1");
  }
  // fail before any model call
  for (const auto& example : dataset) {
    if (!store.contains(example.true_code)) {
      throw Error(ErrorKind::validation,
                  "true code not present in store: " + example.true_code.value);
    }
  }
  std::vector<ImageRef> images;
  images.reserve(dataset.size());
  for (const auto& example : dataset) {
    images.push_back(ImageRef::from_file(example.image_path));
  }
  if (!options.audit_dir.empty()) {
    std::filesystem::create_directories(options.audit_dir);
  }

  EvalResult result;
  for (int run = 1; run <= options.runs; ++run) {
    backends.generator->begin_run(run);

    std::size_t top1_hits = 0, top5_hits = 0, gen_hits = 0;
    std::ofstream audit;
    if (!options.audit_dir.empty()) {
      audit.open(options.audit_dir / ("run_" + std::to_string(run) + ".jsonl"),
                 std::ios::trunc);
    }

    for (std::size_t i = 0; i < dataset.size(); ++i) {
      RecognizeOptions rec;
      rec.k = options.k;
      rec.scope_filter = options.scope_filter;
      rec.template_version = options.template_version;
      rec.truth_hint = dataset[i].true_code;
      auto outcomes = recognize(images[i], store, backends, rec);

      bool top1 = false, top5 = false, gen = false;
      if (!outcomes.empty()) {
        const RecognitionOutcome& outcome = outcomes.front();
        if (!outcome.error && !outcome.retrieval.hits.empty()) {
          top1 = outcome.retrieval.hits.front().code == dataset[i].true_code;
          for (const auto& hit : outcome.retrieval.hits) {
            top5 = top5 || hit.code == dataset[i].true_code;
          }
        }
        gen = outcome.final_code && *outcome.final_code == dataset[i].true_code;
        if (audit.is_open()) {
          nlohmann::ordered_json record;
          record["truth"] = dataset[i].true_code.value;
          record["top1"] = top1;
          record["top5"] = top5;
          record["gen"] = gen;
          record["outcome"] = nlohmann::ordered_json::parse(outcome_to_json(outcome));
          audit << record.dump() << "\n";
        }
      }
      top1_hits += top1 ? 1 : 0;
      top5_hits += top5 ? 1 : 0;
      gen_hits += gen ? 1 : 0;
    }

    RunMetrics metrics;
    double n = static_cast<double>(dataset.size());
    metrics.top1_acc = 100.0 * static_cast<double>(top1_hits) / n;
    metrics.top5_acc = 100.0 * static_cast<double>(top5_hits) / n;
    metrics.gen_acc = 100.0 * static_cast<double>(gen_hits) / n;
    metrics.n = dataset.size();
    metrics.run_index = run;
    result.runs.push_back(metrics);
  }
  result.mean = mean_metrics(result.runs);
  return result;
}

std::string report(std::span<const RunMetrics> runs, ReportFormat format) {
  if (runs.empty()) {
    throw Error(ErrorKind::validation, "no metrics to report");
  }
  RunMetrics mean = mean_metrics(runs);
  std::ostringstream out;
  if (format == ReportFormat::delimited) {
    out << "run,top1_acc,top5_acc,gen_acc,n\n";
    for (const auto& run : runs) {
      out << run.run_index << "," << util::format2(run.top1_acc) << ","
          << util::format2(run.top5_acc) << "," << util::format2(run.gen_acc) << "," << run.n
          << "\n";
    }
    out << "mean," << util::format2(mean.top1_acc) << "," << util::format2(mean.top5_acc)
        << "," << util::format2(mean.gen_acc) << "," << mean.n << "\n";
    return out.str();
  }

  char buf[128];
  out << "Run   Top-1 Acc [%]  Top-5 Acc [%]  Gen Acc [%]\n";
  for (const auto& run : runs) {
    std::snprintf(buf, sizeof(buf), "%-5d %-14s %-14s %s\n", run.run_index,
                  util::format2(run.top1_acc).c_str(), util::format2(run.top5_acc).c_str(),
                  util::format2(run.gen_acc).c_str());
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "Mean  %-14s %-14s %s\n",
                util::format2(mean.top1_acc).c_str(), util::format2(mean.top5_acc).c_str(),
                util::format2(mean.gen_acc).c_str());
  out << buf;
  return out.str();
}

std::string metrics_to_json(const EvalResult& result) {
  nlohmann::ordered_json j;
  j["format"] = "signrec-metrics-v1";
  auto encode = [](const RunMetrics& m) {
    return nlohmann::ordered_json{{"run", m.run_index},
                                  {"top1_acc", m.top1_acc},
                                  {"top5_acc", m.top5_acc},
                                  {"gen_acc", m.gen_acc},
                                  {"n", m.n}};
  };
  auto runs = nlohmann::ordered_json::array();
  for (const auto& run : result.runs) runs.push_back(encode(run));
  j["runs"] = std::move(runs);
  j["mean"] = encode(result.mean);
  return j.dump(2);
}

namespace {

LatencyStats stats_of(const std::vector<double>& values) {
  LatencyStats stats;
  if (values.empty()) return stats;
  double sum = 0.0;
  stats.min_ms = values.front();
  stats.max_ms = values.front();
  for (double v : values) {
    sum += v;
    stats.min_ms = std::min(stats.min_ms, v);
    stats.max_ms = std::max(stats.max_ms, v);
  }
  stats.mean_ms = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - stats.mean_ms) * (v - stats.mean_ms);
    stats.sd_ms = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return stats;
}

nlohmann::ordered_json stats_json(const LatencyStats& stats) {
  return {{"mean_ms", stats.mean_ms},
          {"min_ms", stats.min_ms},
          {"max_ms", stats.max_ms},
          {"sd_ms", stats.sd_ms}};
}

}  // namespace

LatencyReport bench_latency(std::span<const LabeledExample> dataset, const VectorStore& store,
                            const Backends& backends, const BenchOptions& options) {
  if (dataset.empty()) {
    throw Error(ErrorKind::validation, "dataset is empty");
  }
  if (options.trials < 1) {
    throw Error(ErrorKind::validation, "trials must be at least 1");
  }
  std::vector<ImageRef> images;
  images.reserve(dataset.size());
  for (const auto& example : dataset) {
    images.push_back(ImageRef::from_file(example.image_path));
  }

  std::vector<double> total, descriptor, embed, store_query, generation;
  std::size_t failed = 0;
  for (std::size_t trial = 0; trial < options.trials; ++trial) {
    std::size_t i = trial % dataset.size();
    RecognizeOptions rec;
    rec.k = options.k;
    rec.template_version = options.template_version;
    rec.truth_hint = dataset[i].true_code;
    rec.injected_store_delay = options.store_delay;
    try {
      auto outcomes = recognize(images[i], store, backends, rec);
      if (outcomes.empty() || outcomes.front().error) {
        ++failed;
        continue;
      }
      const StageTimings& t = outcomes.front().timings;
      total.push_back(t.total_ms);
      descriptor.push_back(t.descriptor_ms);
      embed.push_back(t.embed_ms);
      store_query.push_back(t.store_query_ms);
      generation.push_back(t.generation_ms);
    } catch (const Error&) {
      ++failed;
    }
  }

  LatencyReport report;
  report.total = stats_of(total);
  report.descriptor = stats_of(descriptor);
  report.embed = stats_of(embed);
  report.store_query = stats_of(store_query);
  report.generation = stats_of(generation);
  report.trials = total.size();
  report.failed_trials = failed;
  return report;
}

std::string LatencyReport::render() const {
  char buf[256];
  std::ostringstream out;
  std::snprintf(buf, sizeof(buf),
                "total latency over %zu trials: mean %.2f ms, range %.2f - %.2f ms, sd %.2f ms\n",
                trials, total.mean_ms, total.min_ms, total.max_ms, total.sd_ms);
  out << buf;
  std::snprintf(buf, sizeof(buf),
                "stage means: descriptor %.2f ms, embed %.2f ms, store query %.2f ms, "
                "generation %.2f ms\n",
                descriptor.mean_ms, embed.mean_ms, store_query.mean_ms, generation.mean_ms);
  out << buf;
  std::snprintf(buf, sizeof(buf), "failed trials: %zu\n", failed_trials);
  out << buf;
  return out.str();
}

std::string LatencyReport::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "signrec-latency-v1";
  j["trials"] = trials;
  j["failed_trials"] = failed_trials;
  j["total"] = stats_json(total);
  j["stages"] = {{"descriptor", stats_json(descriptor)},
                 {"embed", stats_json(embed)},
                 {"store_query", stats_json(store_query)},
                 {"generation", stats_json(generation)}};
  return j.dump(2);
}

}  // namespace signrec
