#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "signrec/descriptor.hpp"
#include "signrec/embedder.hpp"
#include "signrec/generation.hpp"

namespace signrec {

// Connection settings for a chat-completions / embeddings style HTTP API.
// The key comes from the environment, never from flags, and is redacted from
// all logging.
struct RemoteConfig {
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string api_key;
  std::string model;
  int timeout_s = 60;
  int max_in_flight = 4;
  int retries = 2;
  bool verbose = false;
};

// request/response shaping, split out for testing without a network
nlohmann::json chat_request_body(const std::string& model, const std::string& prompt,
                                 const ImageRef* image = nullptr);
nlohmann::json embeddings_request_body(const std::string& model,
                                       std::span<const std::string> inputs);
std::string parse_chat_content(const nlohmann::json& response);
std::vector<EmbeddingVector> parse_embeddings_response(const nlohmann::json& response,
                                                       std::size_t expected_count);
// tolerate models wrapping JSON answers in markdown fences
std::string strip_code_fences(std::string_view text);
std::vector<SignDescription> parse_scene_response(const std::string& content);

class HttpJsonClient;

// Prompt text sent to the remote vision model; versioned like the
// augmentation template and pinned by golden tests.
struct DescriptorPrompts {
  static const std::string& reference_v1();
  static const std::string& scene_v1();
  static const std::string& direct_v1();
};

class RemoteDescriptor : public DescriptorBackend {
 public:
  explicit RemoteDescriptor(RemoteConfig config);
  ~RemoteDescriptor() override;

  SignDescription describe_reference(const ImageRef& image) override;
  std::vector<SignDescription> describe_scene(const ImageRef& image) override;
  std::string id() const override;

 private:
  std::unique_ptr<HttpJsonClient> client_;
  std::string model_;
};

class RemoteEmbedder : public EmbedderBackend {
 public:
  RemoteEmbedder(RemoteConfig config, std::size_t dimension);
  ~RemoteEmbedder() override;

  std::size_t dimension() const override { return dimension_; }
  std::string id() const override;

 protected:
  std::vector<EmbeddingVector> embed_chunk(std::span<const std::string> texts) override;

 private:
  std::unique_ptr<HttpJsonClient> client_;
  std::string model_;
  std::size_t dimension_;
};

class RemoteGenerator : public GeneratorBackend {
 public:
  explicit RemoteGenerator(RemoteConfig config);
  ~RemoteGenerator() override;

  std::string generate(const AugmentedPrompt& prompt,
                       const std::optional<SignCode>& truth_hint) override;
  std::string generate_direct(const ImageRef& image, const std::string& scope,
                              const std::vector<SignCode>& codes,
                              const std::optional<SignCode>& truth_hint) override;
  std::string id() const override;

 private:
  std::unique_ptr<HttpJsonClient> client_;
  std::string model_;
};

}  // namespace signrec
