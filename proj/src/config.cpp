#include "signrec/config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "signrec/descriptor.hpp"
#include "signrec/embedder.hpp"
#include "signrec/errors.hpp"
#include "signrec/generation.hpp"
#include "signrec/remote_api.hpp"

namespace signrec {

void Config::validate() const {
  if (backend != "mock" && backend != "remote") {
    throw Error(ErrorKind::config, "backend must be mock or remote, got \"" + backend + "\"");
  }
  if (k < 1) throw Error(ErrorKind::config, "k must be at least 1");
  if (dimension < 1) throw Error(ErrorKind::config, "dimension must be at least 1");
  if (timeout_s <= 0) throw Error(ErrorKind::config, "timeout must be positive");
  if (max_in_flight < 1) throw Error(ErrorKind::config, "max-in-flight must be at least 1");
  if (retries < 0) throw Error(ErrorKind::config, "retries must be non-negative");
  if (embed_batch_size < 1) throw Error(ErrorKind::config, "embed batch size must be at least 1");
  if (noisy_p < 0.0 || noisy_p > 1.0) {
    throw Error(ErrorKind::config, "noisy-p must be in [0, 1]");
  }
  if (backend == "remote") {
    if (api_base.empty()) throw Error(ErrorKind::config, "remote backend requires api-base");
    if (vlm_model.empty() || embed_model.empty() || llm_model.empty()) {
      throw Error(ErrorKind::config,
                  "remote backend requires vlm-model, embed-model and llm-model");
    }
  }
}

void Config::apply_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::config, "cannot open config file: " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, "invalid config file " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) {
    throw Error(ErrorKind::config, "config file must hold a JSON object");
  }
  if (j.contains("api_key")) {
    throw Error(ErrorKind::config, "credentials are environment-only; remove api_key from " +
                                       path.string());
  }
  backend = j.value("backend", backend);
  api_base = j.value("api_base", api_base);
  vlm_model = j.value("vlm_model", vlm_model);
  embed_model = j.value("embed_model", embed_model);
  llm_model = j.value("llm_model", llm_model);
  k = j.value("k", k);
  dimension = j.value("dimension", dimension);
  seed = j.value("seed", seed);
  noisy_p = j.value("noisy_p", noisy_p);
  template_version = j.value("template_version", template_version);
  max_in_flight = j.value("max_in_flight", max_in_flight);
  timeout_s = j.value("timeout_s", timeout_s);
  retries = j.value("retries", retries);
  embed_batch_size = j.value("embed_batch_size", embed_batch_size);
  verbose = j.value("verbose", verbose);
  strict = j.value("strict", strict);
}

void Config::apply_env(const EnvGetter& getenv_fn) {
  auto get = [&](const char* name) -> std::optional<std::string> {
    const char* v = getenv_fn(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  };
  auto parse_u64 = [](const std::string& name, const std::string& text) -> std::uint64_t {
    try {
      return std::stoull(text);
    } catch (const std::exception&) {
      throw Error(ErrorKind::config, "bad numeric value for " + name + ": \"" + text + "\"");
    }
  };

  if (auto v = get("SIGNREC_BACKEND")) backend = *v;
  if (auto v = get("SIGNREC_API_BASE")) api_base = *v;
  if (auto v = get("SIGNREC_API_KEY")) api_key = *v;
  if (auto v = get("SIGNREC_VLM_MODEL")) vlm_model = *v;
  if (auto v = get("SIGNREC_EMBED_MODEL")) embed_model = *v;
  if (auto v = get("SIGNREC_LLM_MODEL")) llm_model = *v;
  if (auto v = get("SIGNREC_K")) k = parse_u64("SIGNREC_K", *v);
  if (auto v = get("SIGNREC_DIMENSION")) dimension = parse_u64("SIGNREC_DIMENSION", *v);
  if (auto v = get("SIGNREC_SEED")) seed = parse_u64("SIGNREC_SEED", *v);
  if (auto v = get("SIGNREC_TEMPLATE_VERSION")) template_version = *v;
  if (auto v = get("SIGNREC_MAX_IN_FLIGHT")) {
    max_in_flight = static_cast<int>(parse_u64("SIGNREC_MAX_IN_FLIGHT", *v));
  }
  if (auto v = get("SIGNREC_TIMEOUT_S")) {
    timeout_s = static_cast<int>(parse_u64("SIGNREC_TIMEOUT_S", *v));
  }
  if (auto v = get("SIGNREC_VERBOSE")) verbose = (*v == "1" || *v == "true");
}

Config Config::layered(const std::optional<std::filesystem::path>& config_file,
                       const EnvGetter& getenv_fn) {
  Config config;
  if (config_file) config.apply_file(*config_file);
  config.apply_env(getenv_fn);
  return config;
}

BackendSet make_backends(const Config& config) {
  config.validate();
  BackendSet set;
  if (config.backend == "mock") {
    set.descriptor = std::make_unique<MockDescriptor>(config.seed);
    auto embedder = std::make_unique<MockEmbedder>(config.dimension, config.seed);
    embedder->set_max_batch_size(config.embed_batch_size);
    set.embedder = std::move(embedder);
    if (config.noisy_p > 0.0) {
      set.generator = std::make_unique<NoisyGenerator>(config.noisy_p, config.seed);
    } else {
      set.generator = std::make_unique<OracleGenerator>();
    }
    return set;
  }

  RemoteConfig remote;
  remote.base_url = config.api_base;
  remote.api_key = config.api_key;
  remote.timeout_s = config.timeout_s;
  remote.max_in_flight = config.max_in_flight;
  remote.retries = config.retries;
  remote.verbose = config.verbose;

  RemoteConfig vlm = remote;
  vlm.model = config.vlm_model;
  set.descriptor = std::make_unique<RemoteDescriptor>(std::move(vlm));

  RemoteConfig emb = remote;
  emb.model = config.embed_model;
  auto embedder = std::make_unique<RemoteEmbedder>(std::move(emb), config.dimension);
  embedder->set_max_batch_size(config.embed_batch_size);
  set.embedder = std::move(embedder);

  RemoteConfig llm = remote;
  llm.model = config.llm_model;
  set.generator = std::make_unique<RemoteGenerator>(std::move(llm));
  return set;
}

}  // namespace signrec
