#pragma once

// Desk-scale fixture corpus: a 20-class regulatory catalog with synthetic
// reference images, perturbed scene queries, and a separable scope-filter
// calibration set. Everything is derived from one seed, so every test run
// sees identical files.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "signrec/catalog.hpp"
#include "signrec/descriptor.hpp"
#include "signrec/eval.hpp"

namespace signrec::testsupport {

inline constexpr std::uint64_t kFixtureSeed = 2024;
inline constexpr std::size_t kFixtureDim = 64;

struct FixtureClassSpec {
  const char* code;
  const char* name;
  const char* category;
};

// the 20 fixture classes (codes and names follow the regulatory-sign idiom)
std::span<const FixtureClassSpec> fixture_class_specs();

struct Fixture {
  std::filesystem::path root;
  std::filesystem::path catalog_manifest;
  std::filesystem::path dataset_manifest;  // perturbed single-sign queries
  std::filesystem::path scope_manifest;    // labeled in/out images
  Catalog catalog;
};

// Writes manifests plus reference/query/scope images under root. Reference
// images are opaque unique blobs (described via the catalog-keyed mock
// script); queries and scope images are self-describing mock payloads.
Fixture make_fixture(const std::filesystem::path& root, std::uint64_t seed = kFixtureSeed,
                     std::size_t query_count = 100);

// the perturbation applied to a canonical appearance to build query i
std::string perturb_appearance(const std::string& canonical_appearance,
                               std::span<const FixtureClassSpec> all_classes,
                               std::uint64_t seed, std::size_t query_index,
                               bool light = false);

// out-of-scope object descriptions (billboards, mailboxes, ...)
std::string out_of_scope_appearance(std::uint64_t seed, std::size_t index);

// a unique temp directory under the system temp root, removed by the caller
std::filesystem::path make_temp_dir(const std::string& tag);

}  // namespace signrec::testsupport
