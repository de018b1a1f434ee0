#pragma once

#include <vector>

#include "signrec/catalog.hpp"
#include "signrec/descriptor.hpp"
#include "signrec/embedder.hpp"
#include "signrec/vector_store.hpp"

namespace signrec {

struct IndexViolation {
  SignCode code;
  std::vector<AbstractionViolation> violations;
};

struct IndexReport {
  Catalog catalog;                  // every class carries description + embedding
  std::vector<StoreEntry> entries;  // ready for VectorStore::build
  std::vector<IndexViolation> abstraction_violations;
};

// Offline construction of the knowledge base: describe every reference image,
// check the abstraction rules, embed the appearance texts in batches.
IndexReport index_catalog(const Catalog& catalog, DescriptorBackend& descriptor,
                          EmbedderBackend& embedder);

}  // namespace signrec
