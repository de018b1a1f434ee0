#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "signrec/description.hpp"
#include "signrec/embedder.hpp"

namespace signrec {

// Official sign code, e.g. "R2-1". Shape: uppercase letters, optional digits,
// optional hyphenated numeric suffixes ("R1-5a" style variants allowed).
struct SignCode {
  std::string value;

  static bool valid(std::string_view text);
  static SignCode parse(std::string_view text);  // throws Error(validation)

  friend auto operator<=>(const SignCode&, const SignCode&) = default;
};

struct SignClass {
  SignCode code;
  std::string name;
  std::string image_path;  // resolved absolute path
  std::string category;    // regulatory | warning | guide | ... (labels filter calibration sets)
  SignDescription description;  // filled during indexing
  EmbeddingVector embedding;    // filled during indexing

  bool indexed() const { return !description.empty() && !embedding.empty(); }
};

// Knowledge base of reference sign classes. Immutable by value: mutations
// return a new catalog with the version bumped, which keeps index staleness
// explicit (a class with an empty embedding has not been indexed yet).
class Catalog {
 public:
  Catalog() = default;

  // Manifest: header line "signcat v1", then one pipe-delimited record per
  // line: code|name|image-path[|category]. '#' lines and blank lines are
  // ignored. Image paths resolve relative to the manifest and must exist.
  static Catalog load(const std::filesystem::path& manifest);

  Catalog with_added(SignClass entry) const;          // throws on duplicate code
  Catalog with_removed(const SignCode& code) const;   // throws on unknown code
  Catalog with_indexed(const SignCode& code, SignDescription description,
                       EmbeddingVector embedding) const;

  struct IndexedEntry {
    SignCode code;
    SignDescription description;
    EmbeddingVector embedding;
  };
  // bulk variant for whole-catalog indexing: one copy, one version bump
  Catalog with_indexed_many(std::vector<IndexedEntry> entries) const;

  const SignClass* find(const SignCode& code) const;
  const std::vector<SignClass>& classes() const { return classes_; }
  std::size_t size() const { return classes_.size(); }
  std::uint64_t version() const { return version_; }
  std::size_t dimension() const { return dimension_; }
  std::vector<SignCode> unindexed_codes() const;

 private:
  std::vector<SignClass> classes_;
  std::uint64_t version_ = 1;
  std::size_t dimension_ = 0;  // 0 until the first embedding is attached
};

}  // namespace signrec
