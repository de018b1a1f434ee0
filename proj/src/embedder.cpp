#include "signrec/embedder.hpp"

#include <cmath>
#include <map>
#include <thread>

#include "signrec/errors.hpp"
#include "signrec/util.hpp"

namespace signrec {

double l2_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorKind::validation,
                "dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                    std::to_string(b.dim()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    double d = static_cast<double>(a.values[i]) - static_cast<double>(b.values[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

EmbeddingVector EmbedderBackend::embed(std::string_view text) {
  if (util::trim(text).empty()) {
    throw Error(ErrorKind::validation, "cannot embed empty text");
  }
  std::string owned(text);
  auto out = embed_chunk(std::span<const std::string>(&owned, 1));
  return std::move(out.front());
}

std::vector<EmbeddingVector> EmbedderBackend::embed_batch(std::span<const std::string> texts) {
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (util::trim(texts[i]).empty()) {
      throw Error(ErrorKind::validation,
                  "cannot embed empty text (batch element " + std::to_string(i) + ")");
    }
  }
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += max_batch_size()) {
    std::size_t len = std::min(max_batch_size(), texts.size() - start);
    auto chunk = embed_chunk(texts.subspan(start, len));
    for (auto& v : chunk) out.push_back(std::move(v));
  }
  return out;
}

MockEmbedder::MockEmbedder(std::size_t dimension, std::uint64_t seed,
                           std::chrono::microseconds delay)
    : dimension_(dimension), seed_(seed), delay_(delay) {
  if (dimension_ == 0) {
    throw Error(ErrorKind::config, "embedding dimension must be positive");
  }
}

std::string MockEmbedder::id() const {
  return "mock-embedder(dim=" + std::to_string(dimension_) +
         ",seed=" + std::to_string(seed_) + ")";
}

EmbeddingVector MockEmbedder::embed_one(std::string_view text) const {
  // ordered map keeps accumulation order independent of input token order
  std::map<std::string, int> bag;
  for (auto& token : util::tokenize(text)) ++bag[token];

  std::vector<double> acc(dimension_, 0.0);
  for (const auto& [token, count] : bag) {
    util::DetRng rng(util::mix64(seed_, util::fnv1a64(token)));
    std::vector<double> direction(dimension_);
    double norm = 0.0;
    for (auto& x : direction) {
      x = rng.next_gaussian();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) norm = 1.0;
    for (std::size_t i = 0; i < dimension_; ++i) {
      acc[i] += static_cast<double>(count) * direction[i] / norm;
    }
  }

  EmbeddingVector v;
  v.values.resize(dimension_);
  for (std::size_t i = 0; i < dimension_; ++i) {
    v.values[i] = static_cast<float>(acc[i]);
  }
  return v;
}

std::vector<EmbeddingVector> MockEmbedder::embed_chunk(std::span<const std::string> texts) {
  calls_.fetch_add(1);
  std::size_t seen = largest_chunk_.load();
  while (texts.size() > seen && !largest_chunk_.compare_exchange_weak(seen, texts.size())) {
  }
  if (delay_.count() > 0) util::precise_sleep(delay_);

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) out.push_back(embed_one(text));
  return out;
}

}  // namespace signrec
