#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "signrec/catalog.hpp"
#include "signrec/description.hpp"

namespace signrec {

// Opaque image handle: a path plus its bytes. Pixels are never decoded here;
// only the remote vision backend interprets the image.
struct ImageRef {
  std::string path;
  std::vector<std::uint8_t> bytes;

  static ImageRef from_file(const std::filesystem::path& path);
  static ImageRef from_bytes(std::vector<std::uint8_t> bytes, std::string label = "<bytes>");

  std::uint64_t content_hash() const;
  // magic-byte sniffing for the data-url media type
  std::string media_type() const;
};

class DescriptorBackend {
 public:
  virtual ~DescriptorBackend() = default;

  // Abstracted appearance text for a single centered reference sign.
  // No location is attached.
  virtual SignDescription describe_reference(const ImageRef& image) = 0;

  // One description per sign found in a driving scene, each with a
  // natural-language location. May be empty when the scene has no signs.
  virtual std::vector<SignDescription> describe_scene(const ImageRef& image) = 0;

  virtual std::string id() const = 0;
};

// Deterministic offline stand-in for the vision model: byte-identical output
// for identical (image bytes, seed). Description sources, in precedence order:
//   1. a script entry for the image's content hash (built from catalog
//      metadata via fixed templates, see with_catalog),
//   2. a self-describing fixture payload inside the image bytes
//      ("MOCKDESC v1" header; see tests/support),
//   3. a hash-derived generic description.
class MockDescriptor : public DescriptorBackend {
 public:
  explicit MockDescriptor(std::uint64_t seed,
                          std::chrono::microseconds delay = std::chrono::microseconds::zero());

  // registers canonical descriptions for every catalog reference image,
  // keyed by image content hash
  MockDescriptor& with_catalog(const Catalog& catalog);
  MockDescriptor& with_scripted_reference(std::uint64_t content_hash, SignDescription d);
  MockDescriptor& with_scripted_scene(std::uint64_t content_hash,
                                      std::vector<SignDescription> descriptions);

  SignDescription describe_reference(const ImageRef& image) override;
  std::vector<SignDescription> describe_scene(const ImageRef& image) override;
  std::string id() const override;

  // the fixed template applied to catalog metadata; digit runs in the name
  // become numeric placeholders, limit-style names gain a numeric field
  static SignDescription canonical_description(const SignClass& entry);

  static const std::vector<std::string>& location_vocabulary();

 private:
  std::vector<SignDescription> interpret(const ImageRef& image) const;
  SignDescription fallback_description(std::uint64_t hash) const;

  std::uint64_t seed_;
  std::chrono::microseconds delay_;
  std::map<std::uint64_t, SignDescription> reference_script_;
  std::map<std::uint64_t, std::vector<SignDescription>> scene_script_;
};

// Parses the self-describing fixture payload when bytes begin with
// "MOCKDESC v1\n". Blocks of "appearance: ..." / optional "location: ..."
// separated by "---" lines; zero blocks means an empty scene.
bool is_mock_payload(const std::vector<std::uint8_t>& bytes);
std::vector<SignDescription> parse_mock_payload(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> render_mock_payload(const std::vector<SignDescription>& descriptions);

}  // namespace signrec
