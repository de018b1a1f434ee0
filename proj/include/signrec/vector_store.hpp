#pragma once

#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "signrec/catalog.hpp"
#include "signrec/description.hpp"
#include "signrec/embedder.hpp"

namespace signrec {

struct StoreEntry {
  SignCode code;
  EmbeddingVector vector;
  SignDescription description;  // abstracted text served back to augmentation
};

struct QueryHit {
  SignCode code;
  double distance = 0.0;  // L2
  int rank = 0;           // 1-based
};

// Exact flat L2 nearest-neighbor store. A catalog of a few hundred classes is
// a few megabytes of floats, so a contiguous linear scan with top-k selection
// beats an approximate index and keeps evaluation free of retrieval
// approximation error. Ties break by ascending sign code.
//
// Concurrency: any number of concurrent readers; upsert/remove take the write
// lock, so no query observes a half-applied mutation.
class VectorStore {
 public:
  VectorStore() = default;
  VectorStore(VectorStore&& other) noexcept;
  VectorStore& operator=(VectorStore&& other) noexcept;

  static VectorStore build(std::vector<StoreEntry> entries);

  std::vector<QueryHit> query(const EmbeddingVector& vector, std::size_t k) const;

  void upsert(StoreEntry entry);
  void remove(const SignCode& code);

  std::size_t size() const;
  std::size_t dimension() const;
  bool contains(const SignCode& code) const;
  std::optional<StoreEntry> entry(const SignCode& code) const;
  SignDescription description_of(const SignCode& code) const;  // throws not_found
  std::vector<SignCode> codes() const;

  // Binary store file, little-endian, magic "SRAG", format version 1.
  // Vectors persist in single precision; round-trips are bit-exact.
  void save(const std::filesystem::path& path) const;
  static VectorStore load(const std::filesystem::path& path);

  static constexpr std::uint32_t kFormatVersion = 1;

 private:
  std::size_t row_of(const SignCode& code) const;  // npos when absent
  void insert_row(StoreEntry entry);

  mutable std::shared_mutex mutex_;
  std::size_t dim_ = 0;
  // rows kept sorted by code; row order doubles as the deterministic tie-break
  std::vector<SignCode> codes_;
  std::vector<SignDescription> descriptions_;
  std::vector<float> data_;  // size() * dim_ contiguous floats
};

}  // namespace signrec
