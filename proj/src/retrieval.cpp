#include "signrec/retrieval.hpp"

#include "signrec/errors.hpp"

namespace signrec {

namespace {

template <typename Fn>
auto run_stage(Stage stage, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.kind(), e.what());
  } catch (const std::exception& e) {
    throw StageError(stage, ErrorKind::internal, e.what());
  }
}

}  // namespace

RetrievalSet retrieve_described(const SignDescription& description, const VectorStore& store,
                                EmbedderBackend& embedder, std::size_t k) {
  if (k == 0) {
    throw Error(ErrorKind::validation, "k must be at least 1");
  }
  EmbeddingVector query = run_stage(
      Stage::embedder, [&] { return embedder.embed(description.appearance); });
  RetrievalSet set;
  set.query_description = description;
  set.k = k;
  set.hits = run_stage(Stage::store, [&] { return store.query(query, k); });
  return set;
}

std::vector<RetrievalSet> retrieve(const ImageRef& image, const VectorStore& store,
                                   DescriptorBackend& descriptor, EmbedderBackend& embedder,
                                   std::size_t k) {
  if (k == 0) {
    throw Error(ErrorKind::validation, "k must be at least 1");
  }
  if (store.size() == 0) {
    throw Error(ErrorKind::validation, "retrieve against empty store");
  }
  auto descriptions = run_stage(
      Stage::descriptor, [&] { return descriptor.describe_scene(image); });

  std::vector<RetrievalSet> sets;
  sets.reserve(descriptions.size());
  for (const auto& description : descriptions) {
    sets.push_back(retrieve_described(description, store, embedder, k));
  }
  return sets;
}

}  // namespace signrec
