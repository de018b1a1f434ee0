#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "signrec/retrieval.hpp"

namespace signrec {

// Operator configuration. Precedence: flags > environment > config file >
// defaults. The API key is environment-only by design.
struct Config {
  std::string backend = "mock";  // mock | remote
  std::string api_base;
  std::string api_key;  // SIGNREC_API_KEY, never a flag
  std::string vlm_model;
  std::string embed_model;
  std::string llm_model;
  std::size_t k = 5;
  std::size_t dimension = 3072;
  std::uint64_t seed = 12345;
  double noisy_p = 0.0;  // mock generator flip probability
  std::string template_version = "v1";
  int max_in_flight = 4;
  int timeout_s = 60;
  int retries = 2;
  std::size_t embed_batch_size = 64;
  bool verbose = false;
  bool strict = false;

  void validate() const;  // throws Error(config)

  using EnvGetter = std::function<const char*(const char*)>;

  // layered sources below flag level; flags are bound on top by the CLI
  static Config layered(const std::optional<std::filesystem::path>& config_file,
                        const EnvGetter& getenv_fn);
  void apply_file(const std::filesystem::path& path);
  void apply_env(const EnvGetter& getenv_fn);
};

// Backend instances wired per the config; mock mode performs no network I/O.
struct BackendSet {
  std::unique_ptr<DescriptorBackend> descriptor;
  std::unique_ptr<EmbedderBackend> embedder;
  std::unique_ptr<GeneratorBackend> generator;

  Backends as_backends() const {
    return Backends{descriptor.get(), embedder.get(), generator.get()};
  }
};

BackendSet make_backends(const Config& config);

}  // namespace signrec
