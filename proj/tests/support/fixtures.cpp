#include "fixtures.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "signrec/errors.hpp"
#include "signrec/util.hpp"

namespace signrec::testsupport {

namespace {

constexpr std::array<FixtureClassSpec, 20> kClasses = {{
    {"R1-1", "Stop", "regulatory"},
    {"R1-2", "Yield", "regulatory"},
    {"R2-1", "Speed Limit", "regulatory"},
    {"R3-1", "No Right Turn", "regulatory"},
    {"R3-2", "No Left Turn", "regulatory"},
    {"R3-4", "No U Turn", "regulatory"},
    {"R3-5", "Left Turn Only", "regulatory"},
    {"R4-7", "Keep Right", "regulatory"},
    {"R5-1", "Do Not Enter", "regulatory"},
    {"R5-3", "No Motor Vehicles", "regulatory"},
    {"R6-1", "One Way", "regulatory"},
    {"R7-1", "No Parking", "regulatory"},
    {"R7-8", "Reserved Parking", "regulatory"},
    {"R8-3", "No Parking On Pavement", "regulatory"},
    {"R9-3", "No Pedestrian Crossing", "regulatory"},
    {"R10-5", "Left On Green Arrow Only", "regulatory"},
    {"R11-2", "Road Closed", "regulatory"},
    {"R12-1", "Weight Limit", "regulatory"},
    {"R14-1", "Truck Route", "regulatory"},
    {"R15-1", "Railroad Crossing", "regulatory"},
}};

// scene clutter appended to perturbed queries
constexpr std::array<const char*, 10> kNoiseWords = {
    "pole",  "roadside", "faded",  "angled", "shaded",
    "sunlit", "partially", "obscured", "weathered", "mounted"};

constexpr std::array<const char*, 12> kOutOfScopeWords = {
    "billboard", "advertising", "storefront", "banner",   "mailbox",  "awning",
    "poster",    "mural",       "flag",       "scaffold", "balloon",  "marquee"};

// perturbation rates chosen so retrieval lands roughly where the fixture
// needs it: a clear top-1 / top-5 gap with top-5 near saturation
constexpr double kDropProb = 0.22;
constexpr double kSwapProb = 0.16;
constexpr std::size_t kMaxNoiseWords = 3;

constexpr double kLightDropProb = 0.08;
constexpr std::size_t kLightMaxNoiseWords = 1;

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::io, "cannot write fixture file: " + path.string());
  }
  out << content;
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::io, "cannot write fixture file: " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

SignClass spec_to_class(const FixtureClassSpec& spec) {
  SignClass entry;
  entry.code = SignCode{spec.code};
  entry.name = spec.name;
  entry.category = spec.category;
  return entry;
}

}  // namespace

std::span<const FixtureClassSpec> fixture_class_specs() { return kClasses; }

std::string perturb_appearance(const std::string& canonical_appearance,
                               std::span<const FixtureClassSpec> all_classes,
                               std::uint64_t seed, std::size_t query_index, bool light) {
  util::DetRng rng(util::mix64(seed, 0x9e3779b9ull + query_index));
  auto tokens = util::tokenize(canonical_appearance);

  double drop = light ? kLightDropProb : kDropProb;
  double swap = light ? 0.0 : kSwapProb;
  std::size_t max_noise = light ? kLightMaxNoiseWords : kMaxNoiseWords;

  std::vector<std::string> out;
  for (auto& token : tokens) {
    double roll = rng.next_double();
    if (roll < drop) continue;
    if (roll < drop + swap) {
      // borrow a token from some other class's canonical description
      const auto& other = all_classes[rng.next_below(all_classes.size())];
      SignClass other_class = spec_to_class(other);
      auto other_tokens =
          util::tokenize(MockDescriptor::canonical_description(other_class).appearance);
      out.push_back(other_tokens[rng.next_below(other_tokens.size())]);
      continue;
    }
    out.push_back(token);
  }
  std::size_t noise = rng.next_below(max_noise + 1);
  for (std::size_t i = 0; i < noise; ++i) {
    out.push_back(kNoiseWords[rng.next_below(kNoiseWords.size())]);
  }
  if (out.empty()) out.push_back(tokens.empty() ? "sign" : tokens.front());

  std::ostringstream text;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i > 0) text << " ";
    text << out[i];
  }
  return text.str();
}

std::string out_of_scope_appearance(std::uint64_t seed, std::size_t index) {
  util::DetRng rng(util::mix64(seed, 0x51ab5e11ull + index));
  std::ostringstream text;
  text << "a large " << kOutOfScopeWords[rng.next_below(kOutOfScopeWords.size())];
  std::size_t extra = 3 + rng.next_below(3);
  for (std::size_t i = 0; i < extra; ++i) {
    text << " " << kOutOfScopeWords[rng.next_below(kOutOfScopeWords.size())];
  }
  return text.str();
}

std::filesystem::path make_temp_dir(const std::string& tag) {
  auto base = std::filesystem::temp_directory_path() /
              ("signrec_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(base);
  return base;
}

Fixture make_fixture(const std::filesystem::path& root, std::uint64_t seed,
                     std::size_t query_count) {
  std::filesystem::create_directories(root / "images");

  Fixture fixture;
  fixture.root = root;
  fixture.catalog_manifest = root / "catalog.manifest";
  fixture.dataset_manifest = root / "dataset.manifest";
  fixture.scope_manifest = root / "scope.manifest";

  // reference images: unique opaque blobs, described via the catalog script
  std::ostringstream catalog_manifest;
  catalog_manifest << "signcat v1\n";
  for (const auto& spec : kClasses) {
    std::string rel = std::string("images/ref_") + spec.code + ".img";
    std::string blob = std::string("SIGNREF ") + spec.code + "\n";
    write_file(root / rel, blob);
    catalog_manifest << spec.code << "|" << spec.name << "|" << rel << "|" << spec.category
                     << "\n";
  }
  write_file(fixture.catalog_manifest, catalog_manifest.str());
  fixture.catalog = Catalog::load(fixture.catalog_manifest);

  // queries: self-describing payloads with perturbed canonical appearances
  std::ostringstream dataset_manifest;
  dataset_manifest << "signeval v1\n";
  const auto& locations = MockDescriptor::location_vocabulary();
  for (std::size_t i = 0; i < query_count; ++i) {
    const auto& spec = kClasses[i % kClasses.size()];
    const SignClass* entry = fixture.catalog.find(SignCode{spec.code});
    std::string canonical = MockDescriptor::canonical_description(*entry).appearance;

    SignDescription d;
    d.appearance = perturb_appearance(canonical, kClasses, seed, i);
    d.location = locations[i % locations.size()];
    std::string rel = "images/query_" + std::to_string(i) + ".img";
    write_bytes(root / rel, render_mock_payload({d}));
    dataset_manifest << rel << "|" << spec.code << "|"
                     << (i % 2 == 0 ? "ideal" : "real-world") << "\n";
  }
  write_file(fixture.dataset_manifest, dataset_manifest.str());

  // scope calibration: lightly perturbed in-scope queries vs unrelated objects
  std::ostringstream scope_manifest;
  scope_manifest << "signscope v1\n";
  for (std::size_t i = 0; i < 20; ++i) {
    const auto& spec = kClasses[i % kClasses.size()];
    const SignClass* entry = fixture.catalog.find(SignCode{spec.code});
    std::string canonical = MockDescriptor::canonical_description(*entry).appearance;

    SignDescription d;
    d.appearance = perturb_appearance(canonical, kClasses, seed ^ 0xabcdull, 1000 + i,
                                      /*light=*/true);
    d.location = locations[i % locations.size()];
    std::string rel = "images/scope_in_" + std::to_string(i) + ".img";
    write_bytes(root / rel, render_mock_payload({d}));
    scope_manifest << "in|" << rel << "\n";
  }
  for (std::size_t i = 0; i < 20; ++i) {
    SignDescription d;
    d.appearance = out_of_scope_appearance(seed, i);
    d.location = locations[(i + 3) % locations.size()];
    std::string rel = "images/scope_out_" + std::to_string(i) + ".img";
    write_bytes(root / rel, render_mock_payload({d}));
    scope_manifest << "out|" << rel << "\n";
  }
  write_file(fixture.scope_manifest, scope_manifest.str());

  return fixture;
}

}  // namespace signrec::testsupport
