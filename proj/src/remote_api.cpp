#include "signrec/remote_api.hpp"

#include <condition_variable>
#include <iostream>
#include <mutex>
#include <thread>

#ifdef SIGNREC_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include "signrec/errors.hpp"
#include "signrec/util.hpp"

namespace signrec {

namespace {

// bounded in-flight requests per backend
class Semaphore {
 public:
  explicit Semaphore(int count) : count_(count) {}

  void acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return count_ > 0; });
    --count_;
  }

  void release() {
    {
      std::scoped_lock lock(mutex_);
      ++count_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int count_;
};

struct SemaphoreGuard {
  explicit SemaphoreGuard(Semaphore& s) : sem(s) { sem.acquire(); }
  ~SemaphoreGuard() { sem.release(); }
  Semaphore& sem;
};

}  // namespace

class HttpJsonClient {
 public:
  explicit HttpJsonClient(RemoteConfig config)
      : config_(std::move(config)), in_flight_(config_.max_in_flight) {
    if (config_.base_url.empty()) {
      throw Error(ErrorKind::config, "remote backend requires a base URL");
    }
    if (config_.api_key.empty()) {
      throw Error(ErrorKind::config,
                  "remote backend requires an API key (set SIGNREC_API_KEY)");
    }
    if (config_.model.empty()) {
      throw Error(ErrorKind::config, "remote backend requires a model name");
    }
    if (config_.timeout_s <= 0) {
      throw Error(ErrorKind::config, "timeout must be positive");
    }
    auto scheme_end = config_.base_url.find("://");
    if (scheme_end == std::string::npos) {
      throw Error(ErrorKind::config, "base URL must include a scheme: " + config_.base_url);
    }
    auto path_start = config_.base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
      origin_ = config_.base_url;
      path_prefix_.clear();
    } else {
      origin_ = config_.base_url.substr(0, path_start);
      path_prefix_ = config_.base_url.substr(path_start);
      while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    }
  }

  const RemoteConfig& config() const { return config_; }

  nlohmann::json post_json(const std::string& path, const nlohmann::json& body) {
    SemaphoreGuard guard(in_flight_);
    std::string full_path = path_prefix_ + path;
    std::string payload = body.dump();
    if (config_.verbose) {
      std::cerr << "[signrec] POST " << origin_ << full_path << " (" << payload.size()
                << " bytes, key redacted)\n";
    }

    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(250 * (1 << (attempt - 1))));
      }
      httplib::Client client(origin_);
      client.set_connection_timeout(config_.timeout_s, 0);
      client.set_read_timeout(config_.timeout_s, 0);
      client.set_write_timeout(config_.timeout_s, 0);
      client.set_bearer_token_auth(config_.api_key);
#ifdef SIGNREC_HAVE_OPENSSL
      client.enable_server_certificate_verification(true);
#endif

      auto res = client.Post(full_path, payload, "application/json");
      if (!res) {
        last_error = "connection failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 401 || res->status == 403) {
        throw Error(ErrorKind::config,
                    "authentication rejected (HTTP " + std::to_string(res->status) + ")");
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status < 200 || res->status >= 300) {
        throw Error(ErrorKind::transport,
                    "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 512));
      }
      if (config_.verbose) {
        std::cerr << "[signrec] response " << res->status << " (" << res->body.size()
                  << " bytes)\n";
      }
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::degraded_output,
                    std::string("response is not valid JSON: ") + e.what());
      }
    }
    throw Error(ErrorKind::transport, "request failed after " +
                                          std::to_string(config_.retries + 1) +
                                          " attempts: " + last_error);
  }

 private:
  RemoteConfig config_;
  std::string origin_;
  std::string path_prefix_;
  Semaphore in_flight_;
};

nlohmann::json chat_request_body(const std::string& model, const std::string& prompt,
                                 const ImageRef* image) {
  nlohmann::json body;
  body["model"] = model;
  body["temperature"] = 0.0;
  if (image == nullptr) {
    body["messages"] = {{{"role", "user"}, {"content", prompt}}};
    return body;
  }
  std::string data_url = "data:" + image->media_type() + ";base64," +
                         util::base64_encode(image->bytes.data(), image->bytes.size());
  body["messages"] = {
      {{"role", "user"},
       {"content",
        {{{"type", "text"}, {"text", prompt}},
         {{"type", "image_url"}, {"image_url", {{"url", data_url}}}}}}}};
  return body;
}

nlohmann::json embeddings_request_body(const std::string& model,
                                       std::span<const std::string> inputs) {
  nlohmann::json body;
  body["model"] = model;
  body["input"] = nlohmann::json::array();
  for (const auto& text : inputs) body["input"].push_back(text);
  return body;
}

std::string parse_chat_content(const nlohmann::json& response) {
  try {
    const auto& choices = response.at("choices");
    if (choices.empty()) {
      throw Error(ErrorKind::degraded_output, "chat response has no choices");
    }
    return choices.at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::degraded_output,
                std::string("unexpected chat response shape: ") + e.what());
  }
}

std::vector<EmbeddingVector> parse_embeddings_response(const nlohmann::json& response,
                                                       std::size_t expected_count) {
  std::vector<EmbeddingVector> out(expected_count);
  try {
    const auto& data = response.at("data");
    if (data.size() != expected_count) {
      throw Error(ErrorKind::degraded_output,
                  "embeddings response count mismatch: expected " +
                      std::to_string(expected_count) + ", got " +
                      std::to_string(data.size()));
    }
    for (const auto& item : data) {
      std::size_t index = item.at("index").get<std::size_t>();
      if (index >= expected_count) {
        throw Error(ErrorKind::degraded_output, "embedding index out of range");
      }
      auto& vec = out[index].values;
      for (const auto& v : item.at("embedding")) {
        vec.push_back(v.get<float>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::degraded_output,
                std::string("unexpected embeddings response shape: ") + e.what());
  }
  return out;
}

std::string strip_code_fences(std::string_view text) {
  std::string trimmed = util::trim(text);
  if (trimmed.rfind("```", 0) != 0) return trimmed;
  std::size_t first_newline = trimmed.find('\n');
  if (first_newline == std::string::npos) return trimmed;
  std::size_t closing = trimmed.rfind("```");
  if (closing <= first_newline) return trimmed;
  return util::trim(trimmed.substr(first_newline + 1, closing - first_newline - 1));
}

std::vector<SignDescription> parse_scene_response(const std::string& content) {
  std::string body = strip_code_fences(content);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::degraded_output,
                std::string("scene description is not valid JSON: ") + e.what());
  }
  if (!j.is_array()) {
    throw Error(ErrorKind::degraded_output, "scene description must be a JSON array");
  }
  std::vector<SignDescription> out;
  for (const auto& item : j) {
    SignDescription d;
    d.appearance = util::trim(item.value("appearance", ""));
    std::string location = util::trim(item.value("location", ""));
    if (d.appearance.empty()) {
      throw Error(ErrorKind::degraded_output, "scene entry is missing appearance text");
    }
    if (location.empty()) {
      throw Error(ErrorKind::degraded_output, "scene entry is missing location text");
    }
    d.location = location;
    finalize_description(d);
    out.push_back(std::move(d));
  }
  return out;
}

namespace {

std::string placeholder_list() {
  std::string out;
  for (int d = 1; d <= 3; ++d) {
    out += "\"" + PlaceholderRegistry::numeric_placeholder(d) + "\", ";
  }
  out += "\"<street name>\", \"<time range>\", \"<arrow direction>\"";
  return out;
}

}  // namespace

const std::string& DescriptorPrompts::reference_v1() {
  static const std::string text =
      "Describe the road sign in this image for similarity search against a catalog of\n"
      "reference sign designs. State the shape, colors, symbols and legend text.\n"
      "Replace any instance-specific content (numbers, street names, times, distances)\n"
      "with one of these generic placeholders: " + placeholder_list() + ".\n"
      "For example, a speed limit sign posted at 50 must be described with\n"
      "\"<two-digit number>\", never the literal value. Reply with the description text\n"
      "only, on a single line.";
  return text;
}

const std::string& DescriptorPrompts::scene_v1() {
  static const std::string text =
      "List every road sign visible in this driving scene. Reply with a JSON array;\n"
      "one object per sign with exactly two string fields: \"appearance\" and\n"
      "\"location\". appearance follows the same rules as reference descriptions:\n"
      "shape, colors, symbols, legend, with instance-specific content replaced by one\n"
      "of these placeholders: " + placeholder_list() + ".\n"
      "location is a short natural-language position such as \"in the upper right\n"
      "quadrant\" or \"to the left of the traffic light\". Reply with an empty array\n"
      "when no road sign is visible. No prose outside the JSON.";
  return text;
}

const std::string& DescriptorPrompts::direct_v1() {
  static const std::string text =
      "Identify the road sign in this image. {{SCOPE}}\n"
      "Answer with exactly one official sign code from that catalog, and nothing\n"
      "else. If the sign is not part of the catalog, answer NONE.";
  return text;
}

RemoteDescriptor::RemoteDescriptor(RemoteConfig config)
    : client_(std::make_unique<HttpJsonClient>(std::move(config))),
      model_(client_->config().model) {}

RemoteDescriptor::~RemoteDescriptor() = default;

SignDescription RemoteDescriptor::describe_reference(const ImageRef& image) {
  if (image.bytes.empty()) {
    throw Error(ErrorKind::validation, "empty image content: " + image.path);
  }
  auto response =
      client_->post_json("/chat/completions",
                         chat_request_body(model_, DescriptorPrompts::reference_v1(), &image));
  std::string content = util::trim(parse_chat_content(response));
  if (content.empty()) {
    throw Error(ErrorKind::degraded_output, "backend returned empty description");
  }
  SignDescription d;
  d.appearance = content;
  finalize_description(d);
  return d;
}

std::vector<SignDescription> RemoteDescriptor::describe_scene(const ImageRef& image) {
  if (image.bytes.empty()) {
    throw Error(ErrorKind::validation, "empty image content: " + image.path);
  }
  auto response = client_->post_json(
      "/chat/completions", chat_request_body(model_, DescriptorPrompts::scene_v1(), &image));
  return parse_scene_response(parse_chat_content(response));
}

std::string RemoteDescriptor::id() const { return "remote-descriptor(" + model_ + ")"; }

RemoteEmbedder::RemoteEmbedder(RemoteConfig config, std::size_t dimension)
    : client_(std::make_unique<HttpJsonClient>(std::move(config))),
      model_(client_->config().model),
      dimension_(dimension) {
  if (dimension_ == 0) {
    throw Error(ErrorKind::config, "embedding dimension must be positive");
  }
}

RemoteEmbedder::~RemoteEmbedder() = default;

std::vector<EmbeddingVector> RemoteEmbedder::embed_chunk(std::span<const std::string> texts) {
  auto response =
      client_->post_json("/embeddings", embeddings_request_body(model_, texts));
  auto vectors = parse_embeddings_response(response, texts.size());
  for (const auto& v : vectors) {
    if (v.dim() != dimension_) {
      throw Error(ErrorKind::degraded_output,
                  "embedding dimension mismatch: expected " + std::to_string(dimension_) +
                      ", got " + std::to_string(v.dim()));
    }
  }
  return vectors;
}

std::string RemoteEmbedder::id() const { return "remote-embedder(" + model_ + ")"; }

RemoteGenerator::RemoteGenerator(RemoteConfig config)
    : client_(std::make_unique<HttpJsonClient>(std::move(config))),
      model_(client_->config().model) {}

RemoteGenerator::~RemoteGenerator() = default;

std::string RemoteGenerator::generate(const AugmentedPrompt& prompt,
                                      const std::optional<SignCode>&) {
  auto response =
      client_->post_json("/chat/completions", chat_request_body(model_, prompt.text));
  return parse_chat_content(response);
}

std::string RemoteGenerator::generate_direct(const ImageRef& image, const std::string& scope,
                                             const std::vector<SignCode>& codes,
                                             const std::optional<SignCode>&) {
  std::string scope_text = scope;
  if (!codes.empty()) {
    scope_text += " The catalog codes are:";
    for (const auto& code : codes) scope_text += " " + code.value;
    scope_text += ".";
  }
  std::string prompt =
      util::replace_all(DescriptorPrompts::direct_v1(), "{{SCOPE}}", scope_text);
  auto response =
      client_->post_json("/chat/completions", chat_request_body(model_, prompt, &image));
  return parse_chat_content(response);
}

std::string RemoteGenerator::id() const { return "remote-generator(" + model_ + ")"; }

}  // namespace signrec
