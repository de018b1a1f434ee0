// signrec: zero-shot road-sign recognition over a reference-design catalog.
// Subcommands cover the full lifecycle: index, recognize, eval,
// calibrate-filter, bench, inspect.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "signrec/catalog.hpp"
#include "signrec/config.hpp"
#include "signrec/descriptor.hpp"
#include "signrec/errors.hpp"
#include "signrec/eval.hpp"
#include "signrec/generation.hpp"
#include "signrec/indexing.hpp"
#include "signrec/retrieval.hpp"
#include "signrec/scope_filter.hpp"
#include "signrec/util.hpp"
#include "signrec/vector_store.hpp"

namespace fs = std::filesystem;
using namespace signrec;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInput = 3;
constexpr int kExitBackend = 4;
constexpr int kExitInternal = 5;

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::config:
      return kExitConfig;
    case ErrorKind::parse:
    case ErrorKind::validation:
    case ErrorKind::not_found:
    case ErrorKind::io:
    case ErrorKind::format:
    case ErrorKind::corruption:
      return kExitInput;
    case ErrorKind::transport:
    case ErrorKind::degraded_output:
      return kExitBackend;
    case ErrorKind::consistency:
    case ErrorKind::internal:
      return kExitInternal;
  }
  return kExitInternal;
}

// partial output files removed when an interrupt lands mid-write
std::mutex g_cleanup_mutex;
std::vector<std::string> g_cleanup_paths;

void register_cleanup(const fs::path& path) {
  std::scoped_lock lock(g_cleanup_mutex);
  g_cleanup_paths.push_back(path.string());
}

void unregister_cleanup(const fs::path& path) {
  std::scoped_lock lock(g_cleanup_mutex);
  std::erase(g_cleanup_paths, path.string());
}

extern "C" void handle_interrupt(int) {
  for (const auto& path : g_cleanup_paths) {
    ::unlink(path.c_str());
  }
  std::_Exit(130);
}

// write-to-temp plus atomic rename
template <typename WriteFn>
void write_file_atomically(const fs::path& target, WriteFn&& write) {
  fs::path temp = target;
  temp += ".tmp";
  register_cleanup(temp);
  write(temp);
  fs::rename(temp, target);
  unregister_cleanup(temp);
}

struct ScopeExample {
  ScopeLabel label;
  std::string image_path;
};

// header "signscope v1", then in|<image-path> or out|<image-path> per line
std::vector<ScopeExample> load_scope_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) {
    throw Error(ErrorKind::io, "cannot open scope manifest: " + manifest.string());
  }
  const auto base_dir =
      manifest.has_parent_path() ? manifest.parent_path() : fs::path(".");
  std::vector<ScopeExample> examples;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string trimmed = util::trim(line);
    if (!header_seen) {
      if (trimmed != "signscope v1") {
        throw Error(ErrorKind::parse, manifest.string() + ":" + std::to_string(line_no) +
                                          ": expected header \"signscope v1\"");
      }
      header_seen = true;
      continue;
    }
    if (trimmed.empty() || trimmed.front() == '#') continue;
    auto fields = util::split(trimmed, '|');
    if (fields.size() != 2 || (fields[0] != "in" && fields[0] != "out")) {
      throw Error(ErrorKind::parse, manifest.string() + ":" + std::to_string(line_no) +
                                        ": expected in|<image> or out|<image>");
    }
    fs::path image = base_dir / util::trim(fields[1]);
    if (!fs::exists(image)) {
      throw Error(ErrorKind::io, "missing image file: " + image.string());
    }
    examples.push_back({fields[0] == "in" ? ScopeLabel::in_scope : ScopeLabel::out_of_scope,
                        image.string()});
  }
  if (!header_seen) {
    throw Error(ErrorKind::parse, manifest.string() + ": empty manifest (missing header)");
  }
  return examples;
}

struct CommandArgs {
  Config config;
  std::string manifest;
  std::string store_path;
  std::string out_path;
  std::string dataset;
  std::string filter_path;
  std::string density_path;
  std::string samples_in;
  std::string samples_out;
  std::string audit_dir;
  std::string image_dir;
  std::vector<std::string> images;
  int runs = 5;
  std::size_t trials = 100;
  // bench-only injected stage delays (microseconds)
  std::uint64_t inject_descriptor_us = 0;
  std::uint64_t inject_embed_us = 0;
  std::uint64_t inject_store_us = 0;
  std::uint64_t inject_generation_us = 0;
};

BackendSet build_backends(const CommandArgs& args, const Catalog* catalog,
                          std::chrono::microseconds descriptor_delay = {},
                          std::chrono::microseconds embed_delay = {},
                          std::chrono::microseconds generation_delay = {}) {
  args.config.validate();
  if (args.config.backend == "mock") {
    BackendSet set;
    auto descriptor = std::make_unique<MockDescriptor>(args.config.seed, descriptor_delay);
    if (catalog != nullptr) descriptor->with_catalog(*catalog);
    set.descriptor = std::move(descriptor);
    auto embedder =
        std::make_unique<MockEmbedder>(args.config.dimension, args.config.seed, embed_delay);
    embedder->set_max_batch_size(args.config.embed_batch_size);
    set.embedder = std::move(embedder);
    if (args.config.noisy_p > 0.0) {
      set.generator = std::make_unique<NoisyGenerator>(args.config.noisy_p, args.config.seed,
                                                       generation_delay);
    } else {
      set.generator = std::make_unique<OracleGenerator>(generation_delay);
    }
    return set;
  }
  return make_backends(args.config);
}

int cmd_index(const CommandArgs& args) {
  Catalog catalog = Catalog::load(args.manifest);
  BackendSet backends = build_backends(args, &catalog);

  IndexReport report = index_catalog(catalog, *backends.descriptor, *backends.embedder);
  VectorStore store = VectorStore::build(report.entries);

  write_file_atomically(args.out_path, [&](const fs::path& temp) { store.save(temp); });

  std::size_t violation_count = 0;
  for (const auto& v : report.abstraction_violations) violation_count += v.violations.size();
  std::cout << "indexed " << store.size() << " classes, dimension " << store.dimension()
            << ", abstraction violations " << violation_count << "\n";
  for (const auto& v : report.abstraction_violations) {
    for (const auto& violation : v.violations) {
      std::cerr << "abstraction violation in " << v.code.value << ": rule " << violation.rule
                << " matched \"" << violation.matched_text << "\"\n";
    }
  }
  if (args.config.strict && violation_count > 0) {
    std::cerr << "strict mode: failing on abstraction violations\n";
    return kExitInput;
  }
  return kExitOk;
}

std::optional<FilterModel> load_filter_if_set(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return FilterModel::load(path);
}

int cmd_recognize(const CommandArgs& args) {
  VectorStore store = VectorStore::load(args.store_path);
  BackendSet backends = build_backends(args, nullptr);
  auto filter = load_filter_if_set(args.filter_path);

  std::vector<std::string> images = args.images;
  if (!args.image_dir.empty()) {
    std::vector<std::string> found;
    for (const auto& entry : fs::directory_iterator(args.image_dir)) {
      if (entry.is_regular_file()) found.push_back(entry.path().string());
    }
    std::sort(found.begin(), found.end());
    images.insert(images.end(), found.begin(), found.end());
  }
  if (images.empty()) {
    throw Error(ErrorKind::config, "no input images given");
  }

  RecognizeOptions options;
  options.k = args.config.k;
  options.template_version = args.config.template_version;
  if (filter) options.scope_filter = &*filter;

  Backends b = backends.as_backends();
  std::size_t recognized = 0, rejected = 0;
  for (const auto& path : images) {
    ImageRef image = ImageRef::from_file(path);
    auto outcomes = recognize(image, store, b, options);
    std::cerr << path << ": " << outcomes.size() << " sign(s)\n";
    for (const auto& outcome : outcomes) {
      std::cout << outcome_to_json(outcome) << "\n";
      if (outcome.rejected()) {
        ++rejected;
        std::cerr << "  REJECTED (" << to_string(outcome.source) << ")";
      } else {
        ++recognized;
        std::cerr << "  " << outcome.final_code->value << " (" << to_string(outcome.source)
                  << ")";
      }
      if (!outcome.retrieval.hits.empty()) {
        std::cerr << " rank-1 distance "
                  << util::format2(outcome.retrieval.hits.front().distance);
      }
      if (outcome.retrieval.query_description.location) {
        std::cerr << " at " << *outcome.retrieval.query_description.location;
      }
      std::cerr << "\n";
    }
  }
  std::cerr << "recognized " << recognized << ", rejected " << rejected << "\n";
  return kExitOk;
}

int cmd_eval(const CommandArgs& args) {
  VectorStore store = VectorStore::load(args.store_path);
  auto dataset = load_dataset(args.dataset);
  BackendSet backends = build_backends(args, nullptr);
  auto filter = load_filter_if_set(args.filter_path);

  EvalOptions options;
  options.runs = args.runs;
  options.k = args.config.k;
  options.template_version = args.config.template_version;
  if (filter) options.scope_filter = &*filter;
  if (!args.audit_dir.empty()) options.audit_dir = args.audit_dir;

  Backends b = backends.as_backends();
  EvalResult result = evaluate(dataset, store, b, options);
  std::cout << report(result.runs, ReportFormat::plain_table);
  if (!args.out_path.empty()) {
    write_file_atomically(args.out_path, [&](const fs::path& temp) {
      std::ofstream out(temp, std::ios::trunc);
      out << metrics_to_json(result) << "\n";
      if (!out) throw Error(ErrorKind::io, "write failed: " + temp.string());
    });
  }
  return kExitOk;
}

int cmd_calibrate_filter(const CommandArgs& args) {
  std::vector<DistanceSample> samples;
  if (!args.samples_in.empty()) {
    samples = load_distance_samples(args.samples_in);
  } else {
    if (args.manifest.empty()) {
      throw Error(ErrorKind::config, "calibrate-filter needs --manifest or --from-samples");
    }
    if (args.store_path.empty()) {
      throw Error(ErrorKind::config, "calibrate-filter from images needs --store");
    }
    VectorStore store = VectorStore::load(args.store_path);
    BackendSet backends = build_backends(args, nullptr);
    auto scope_examples = load_scope_manifest(args.manifest);
    for (const auto& example : scope_examples) {
      ImageRef image = ImageRef::from_file(example.image_path);
      auto sets = retrieve(image, store, *backends.descriptor, *backends.embedder,
                           args.config.k);
      for (const auto& set : sets) {
        if (set.hits.empty()) continue;
        samples.push_back({example.label, set.hits.front().distance});
      }
    }
  }

  FilterModel model = calibrate(samples);
  write_file_atomically(args.out_path, [&](const fs::path& temp) { model.save(temp); });

  if (!args.samples_out.empty()) {
    write_file_atomically(args.samples_out, [&](const fs::path& temp) {
      save_distance_samples(samples, temp);
    });
  }
  if (!args.density_path.empty()) {
    DensityReport density = density_report(samples);
    write_file_atomically(args.density_path, [&](const fs::path& temp) {
      std::ofstream out(temp, std::ios::trunc);
      out << density.to_tsv();
      if (!out) throw Error(ErrorKind::io, "write failed: " + temp.string());
    });
  }

  std::cout << "threshold " << model.threshold << ", separation " << model.separation
            << (model.separable ? "" : " (distributions overlap)") << "\n"
            << "in-scope: mean " << model.in_scope.mean << ", sd " << model.in_scope.sd
            << ", n " << model.in_scope.count << "\n"
            << "out-of-scope: mean " << model.out_of_scope.mean << ", sd "
            << model.out_of_scope.sd << ", n " << model.out_of_scope.count << "\n";
  return kExitOk;
}

int cmd_bench(const CommandArgs& args) {
  VectorStore store = VectorStore::load(args.store_path);
  auto dataset = load_dataset(args.dataset);
  BackendSet backends = build_backends(
      args, nullptr, std::chrono::microseconds(args.inject_descriptor_us),
      std::chrono::microseconds(args.inject_embed_us),
      std::chrono::microseconds(args.inject_generation_us));

  BenchOptions options;
  options.trials = args.trials;
  options.k = args.config.k;
  options.template_version = args.config.template_version;
  options.store_delay = std::chrono::microseconds(args.inject_store_us);

  Backends b = backends.as_backends();
  LatencyReport report = bench_latency(dataset, store, b, options);
  std::cout << report.render();
  if (!args.out_path.empty()) {
    write_file_atomically(args.out_path, [&](const fs::path& temp) {
      std::ofstream out(temp, std::ios::trunc);
      out << report.to_json() << "\n";
      if (!out) throw Error(ErrorKind::io, "write failed: " + temp.string());
    });
  }
  return kExitOk;
}

int cmd_inspect(const CommandArgs& args) {
  VectorStore store = VectorStore::load(args.store_path);
  std::cout << "store: " << args.store_path << "\n"
            << "format version: " << VectorStore::kFormatVersion << "\n"
            << "entries: " << store.size() << "\n"
            << "dimension: " << store.dimension() << "\n";
  for (const auto& code : store.codes()) {
    auto entry = store.entry(code);
    std::cout << code.value << " | " << entry->description.appearance << "\n";
  }
  return kExitOk;
}

std::optional<fs::path> find_config_flag(int argc, char** argv) {
  for (int i = 1; i < argc - 1; ++i) {
    std::string_view arg = argv[i];
    if (arg == "--config") return fs::path(argv[i + 1]);
  }
  for (int i = 1; i < argc; ++i) {
    std::string_view arg = argv[i];
    if (arg.rfind("--config=", 0) == 0) return fs::path(arg.substr(9));
  }
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, handle_interrupt);
  std::signal(SIGTERM, handle_interrupt);

  CommandArgs args;
  try {
    args.config = Config::layered(find_config_flag(argc, argv),
                                  [](const char* name) { return std::getenv(name); });
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e);
  }

  CLI::App app{"zero-shot road-sign recognition over a reference-design catalog"};
  app.require_subcommand(1);
  std::string config_file;  // consumed by the pre-scan; declared for help text
  app.add_option("--config", config_file, "JSON config file (flags take precedence)");
  app.add_option("--backend", args.config.backend, "backend kind: mock | remote");
  app.add_option("--k", args.config.k, "retrieval candidates per query");
  app.add_option("--dim", args.config.dimension, "embedding dimension");
  app.add_option("--seed", args.config.seed, "seed for mock backends");
  app.add_option("--noisy-p", args.config.noisy_p,
                 "mock generator flip probability (0 = oracle)");
  app.add_option("--template-version", args.config.template_version,
                 "augmentation template version");
  app.add_option("--max-in-flight", args.config.max_in_flight,
                 "max concurrent backend requests");
  app.add_option("--timeout", args.config.timeout_s, "backend timeout in seconds");
  app.add_option("--embed-batch", args.config.embed_batch_size,
                 "texts per embeddings request");
  app.add_flag("--verbose", args.config.verbose, "log backend traffic (keys redacted)");

  CLI::App* index = app.add_subcommand("index", "build a vector store from a catalog manifest");
  index->add_option("--manifest", args.manifest, "catalog manifest (signcat v1)")->required();
  index->add_option("--out", args.store_path, "output store file")->required();
  index->add_flag("--strict", args.config.strict, "fail on abstraction violations");

  CLI::App* recognize_cmd = app.add_subcommand("recognize", "recognize signs in images");
  recognize_cmd->add_option("--store", args.store_path, "vector store file")->required();
  recognize_cmd->add_option("--filter", args.filter_path, "scope filter model file");
  recognize_cmd->add_option("--dir", args.image_dir, "directory of images");
  recognize_cmd->add_option("images", args.images, "image files");

  CLI::App* eval_cmd = app.add_subcommand("eval", "run the repeated-runs evaluation protocol");
  eval_cmd->add_option("--store", args.store_path, "vector store file")->required();
  eval_cmd->add_option("--dataset", args.dataset, "dataset manifest (signeval v1)")->required();
  eval_cmd->add_option("--runs", args.runs, "number of repetitions");
  eval_cmd->add_option("--out", args.out_path, "machine-readable metrics file");
  eval_cmd->add_option("--audit-dir", args.audit_dir, "directory for per-run outcome logs");
  eval_cmd->add_option("--filter", args.filter_path, "scope filter model file");

  CLI::App* calibrate = app.add_subcommand("calibrate-filter",
                                           "calibrate the in-scope distance threshold");
  calibrate->add_option("--store", args.store_path, "vector store file");
  calibrate->add_option("--manifest", args.manifest, "scope manifest (signscope v1)");
  calibrate->add_option("--from-samples", args.samples_in,
                        "calibrate from a distance samples file instead of images");
  calibrate->add_option("--out", args.out_path, "output filter model file")->required();
  calibrate->add_option("--density", args.density_path, "density report table (TSV)");
  calibrate->add_option("--samples-out", args.samples_out, "write collected distance samples");

  CLI::App* bench = app.add_subcommand("bench", "profile per-stage pipeline latency");
  bench->add_option("--store", args.store_path, "vector store file")->required();
  bench->add_option("--dataset", args.dataset, "dataset manifest (signeval v1)")->required();
  bench->add_option("--trials", args.trials, "number of trials");
  bench->add_option("--out", args.out_path, "machine-readable report file");
  bench->add_option("--inject-descriptor-us", args.inject_descriptor_us,
                    "injected descriptor delay (mock only)");
  bench->add_option("--inject-embed-us", args.inject_embed_us,
                    "injected embedder delay (mock only)");
  bench->add_option("--inject-store-us", args.inject_store_us, "injected store-query delay");
  bench->add_option("--inject-generation-us", args.inject_generation_us,
                    "injected generator delay (mock only)");

  CLI::App* inspect = app.add_subcommand("inspect", "print a store file's header and entries");
  inspect->add_option("--store", args.store_path, "vector store file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (index->parsed()) return cmd_index(args);
    if (recognize_cmd->parsed()) return cmd_recognize(args);
    if (eval_cmd->parsed()) return cmd_eval(args);
    if (calibrate->parsed()) return cmd_calibrate_filter(args);
    if (bench->parsed()) return cmd_bench(args);
    if (inspect->parsed()) return cmd_inspect(args);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
