#pragma once

#include <cstddef>
#include <vector>

#include "signrec/descriptor.hpp"
#include "signrec/embedder.hpp"
#include "signrec/vector_store.hpp"

namespace signrec {

class GeneratorBackend;

struct Backends {
  DescriptorBackend* descriptor = nullptr;
  EmbedderBackend* embedder = nullptr;
  GeneratorBackend* generator = nullptr;
};

struct RetrievalSet {
  SignDescription query_description;
  std::vector<QueryHit> hits;  // ascending distance, length <= k
  std::size_t k = 5;
};

inline constexpr std::size_t kDefaultTopK = 5;

// Online query path: describe every sign in the image, embed each appearance
// text (never the location text, which describes the scene rather than the
// class), and fetch the top-k nearest stored classes. Backend failures
// surface as StageError tagged with the failing stage.
std::vector<RetrievalSet> retrieve(const ImageRef& image, const VectorStore& store,
                                   DescriptorBackend& descriptor, EmbedderBackend& embedder,
                                   std::size_t k = kDefaultTopK);

// single-description variant used once the scene has been described
RetrievalSet retrieve_described(const SignDescription& description, const VectorStore& store,
                                EmbedderBackend& embedder, std::size_t k = kDefaultTopK);

}  // namespace signrec
