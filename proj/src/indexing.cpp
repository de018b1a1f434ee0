#include "signrec/indexing.hpp"

#include "signrec/errors.hpp"

namespace signrec {

IndexReport index_catalog(const Catalog& catalog, DescriptorBackend& descriptor,
                          EmbedderBackend& embedder) {
  if (catalog.size() == 0) {
    throw Error(ErrorKind::validation, "cannot index an empty catalog");
  }

  IndexReport report;
  std::vector<SignDescription> descriptions;
  std::vector<std::string> texts;
  descriptions.reserve(catalog.size());
  texts.reserve(catalog.size());

  for (const auto& entry : catalog.classes()) {
    auto image = ImageRef::from_file(entry.image_path);
    SignDescription d;
    try {
      d = descriptor.describe_reference(image);
    } catch (const StageError&) {
      throw;
    } catch (const Error& e) {
      throw StageError(Stage::descriptor, e.kind(),
                       entry.code.value + ": " + e.what());
    }
    auto violations = validate_abstraction(d);
    if (!violations.empty()) {
      report.abstraction_violations.push_back({entry.code, std::move(violations)});
    }
    texts.push_back(d.appearance);
    descriptions.push_back(std::move(d));
  }

  std::vector<EmbeddingVector> embeddings;
  try {
    embeddings = embedder.embed_batch(texts);
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(Stage::embedder, e.kind(), e.what());
  }

  std::vector<Catalog::IndexedEntry> indexed;
  indexed.reserve(catalog.size());
  report.entries.reserve(catalog.size());
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    const SignClass& entry = catalog.classes()[i];
    report.entries.push_back({entry.code, embeddings[i], descriptions[i]});
    indexed.push_back({entry.code, std::move(descriptions[i]), std::move(embeddings[i])});
  }
  report.catalog = catalog.with_indexed_many(std::move(indexed));
  return report;
}

}  // namespace signrec
