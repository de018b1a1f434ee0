#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace signrec {

// Fixed-dimension real vector for similarity search. Values are single
// precision; all distance math happens in double.
struct EmbeddingVector {
  std::vector<float> values;

  std::size_t dim() const { return values.size(); }
  bool empty() const { return values.empty(); }
};

double l2_distance(const EmbeddingVector& a, const EmbeddingVector& b);

class EmbedderBackend {
 public:
  virtual ~EmbedderBackend() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::string id() const = 0;

  // throws Error(validation) on empty text; result has dimension() finite entries
  EmbeddingVector embed(std::string_view text);
  // order-preserving, element-wise equal to embed(); validates every text
  // before issuing any backend call
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts);

  std::size_t max_batch_size() const { return max_batch_; }
  void set_max_batch_size(std::size_t n) { max_batch_ = n == 0 ? 1 : n; }

 protected:
  // one backend call handling up to max_batch_size() texts
  virtual std::vector<EmbeddingVector> embed_chunk(std::span<const std::string> texts) = 0;

 private:
  std::size_t max_batch_ = 64;
};

// Token-count bag mapped through a seeded random projection: deterministic,
// cheap, and locality-sensitive (shared tokens pull vectors together), which
// is what makes desk-scale retrieval tests meaningful.
class MockEmbedder : public EmbedderBackend {
 public:
  MockEmbedder(std::size_t dimension, std::uint64_t seed,
               std::chrono::microseconds delay = std::chrono::microseconds::zero());

  std::size_t dimension() const override { return dimension_; }
  std::string id() const override;

  // instrumentation for batch-size accounting in tests
  std::size_t calls() const { return calls_.load(); }
  std::size_t largest_chunk() const { return largest_chunk_.load(); }

 protected:
  std::vector<EmbeddingVector> embed_chunk(std::span<const std::string> texts) override;

 private:
  EmbeddingVector embed_one(std::string_view text) const;

  std::size_t dimension_;
  std::uint64_t seed_;
  std::chrono::microseconds delay_;
  mutable std::atomic<std::size_t> calls_{0};
  mutable std::atomic<std::size_t> largest_chunk_{0};
};

}  // namespace signrec
