#include "signrec/descriptor.hpp"

#include <array>
#include <fstream>
#include <sstream>
#include <thread>

#include "signrec/errors.hpp"
#include "signrec/util.hpp"

namespace signrec {

namespace {
constexpr std::string_view kMockMagic = "MOCKDESC v1\n";

const std::array<const char*, 5> kShapes = {"rectangular", "square", "octagonal",
                                            "circular", "pentagonal"};
const std::array<const char*, 5> kBackgrounds = {"white", "red", "yellow", "green", "blue"};
const std::array<const char*, 4> kLegendColors = {"black", "white", "red", "green"};
const std::array<const char*, 8> kFillerWords = {"border",  "legend", "symbol", "panel",
                                                 "plaque",  "arrow",  "bar",    "outline"};
}  // namespace

ImageRef ImageRef::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::io, "cannot open image file: " + path.string());
  }
  ImageRef ref;
  ref.path = path.string();
  ref.bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  return ref;
}

ImageRef ImageRef::from_bytes(std::vector<std::uint8_t> bytes, std::string label) {
  ImageRef ref;
  ref.path = std::move(label);
  ref.bytes = std::move(bytes);
  return ref;
}

std::uint64_t ImageRef::content_hash() const {
  return util::fnv1a64(bytes.data(), bytes.size());
}

std::string ImageRef::media_type() const {
  static const std::array<std::uint8_t, 8> png_magic = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  if (bytes.size() >= 8 && std::equal(png_magic.begin(), png_magic.end(), bytes.begin())) {
    return "image/png";
  }
  if (bytes.size() >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff) {
    return "image/jpeg";
  }
  return "application/octet-stream";
}

bool is_mock_payload(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= kMockMagic.size() &&
         std::equal(kMockMagic.begin(), kMockMagic.end(), bytes.begin());
}

std::vector<SignDescription> parse_mock_payload(const std::vector<std::uint8_t>& bytes) {
  std::string text(bytes.begin() + kMockMagic.size(), bytes.end());
  std::istringstream in(text);
  std::vector<SignDescription> out;
  SignDescription current;
  bool block_open = false;
  std::string line;

  auto flush = [&] {
    if (block_open && !current.appearance.empty()) {
      out.push_back(current);
    }
    current = SignDescription{};
    block_open = false;
  };

  while (std::getline(in, line)) {
    std::string trimmed = util::trim(line);
    if (trimmed == "---") {
      flush();
    } else if (trimmed.rfind("appearance:", 0) == 0) {
      current.appearance = util::trim(trimmed.substr(11));
      block_open = true;
    } else if (trimmed.rfind("location:", 0) == 0) {
      current.location = util::trim(trimmed.substr(9));
      block_open = true;
    }
  }
  flush();
  return out;
}

std::vector<std::uint8_t> render_mock_payload(const std::vector<SignDescription>& descriptions) {
  std::string text(kMockMagic);
  for (std::size_t i = 0; i < descriptions.size(); ++i) {
    if (i > 0) text += "---\n";
    text += "appearance: " + descriptions[i].appearance + "\n";
    if (descriptions[i].location) {
      text += "location: " + *descriptions[i].location + "\n";
    }
  }
  return std::vector<std::uint8_t>(text.begin(), text.end());
}

MockDescriptor::MockDescriptor(std::uint64_t seed, std::chrono::microseconds delay)
    : seed_(seed), delay_(delay) {}

MockDescriptor& MockDescriptor::with_catalog(const Catalog& catalog) {
  for (const auto& entry : catalog.classes()) {
    auto image = ImageRef::from_file(entry.image_path);
    // self-describing fixture payloads always speak for themselves
    if (is_mock_payload(image.bytes)) continue;
    reference_script_[image.content_hash()] = canonical_description(entry);
  }
  return *this;
}

MockDescriptor& MockDescriptor::with_scripted_reference(std::uint64_t content_hash,
                                                        SignDescription d) {
  reference_script_[content_hash] = std::move(d);
  return *this;
}

MockDescriptor& MockDescriptor::with_scripted_scene(std::uint64_t content_hash,
                                                    std::vector<SignDescription> descriptions) {
  scene_script_[content_hash] = std::move(descriptions);
  return *this;
}

const std::vector<std::string>& MockDescriptor::location_vocabulary() {
  static const std::vector<std::string> locations = {
      "in the upper left quadrant",    "in the upper right quadrant",
      "in the lower left quadrant",    "in the lower right quadrant",
      "near the center of the image",  "to the left of the roadway",
      "to the right of the roadway",
  };
  return locations;
}

SignDescription MockDescriptor::canonical_description(const SignClass& entry) {
  std::uint64_t h = util::fnv1a64(entry.code.value);
  util::DetRng rng(h);
  std::string shape = kShapes[rng.next_below(kShapes.size())];
  std::string background = kBackgrounds[rng.next_below(kBackgrounds.size())];
  std::string legend = kLegendColors[rng.next_below(kLegendColors.size())];

  std::string category = entry.category.empty() ? "road" : util::to_lower(entry.category);
  std::ostringstream text;
  text << "a " << shape << " " << category << " sign with a " << background
       << " background and " << legend << " legend reading";

  bool wrote_word = false;
  bool saw_number = false;
  for (auto& token : util::tokenize(entry.name)) {
    bool numeric = !token.empty() && std::isdigit(static_cast<unsigned char>(token[0]));
    if (numeric) {
      text << " " << PlaceholderRegistry::numeric_placeholder(static_cast<int>(token.size()));
      saw_number = true;
    } else {
      text << " " << token;
    }
    wrote_word = true;
  }
  if (!wrote_word) text << " blank";

  // limit-style legends display a value that varies per installation
  std::string lname = util::to_lower(entry.name);
  if (lname.find("limit") != std::string::npos && !saw_number) {
    text << " " << PlaceholderRegistry::numeric_placeholder(2);
  }
  if (lname.find("parking") != std::string::npos) {
    text << " effective " << "<time range>";
  }

  SignDescription d;
  d.appearance = text.str();
  finalize_description(d);
  return d;
}

SignDescription MockDescriptor::fallback_description(std::uint64_t hash) const {
  util::DetRng rng(util::mix64(seed_, hash));
  std::ostringstream text;
  text << "a " << kShapes[rng.next_below(kShapes.size())] << " sign with a "
       << kBackgrounds[rng.next_below(kBackgrounds.size())] << " background and "
       << kLegendColors[rng.next_below(kLegendColors.size())] << " markings showing a "
       << kFillerWords[rng.next_below(kFillerWords.size())] << " and a "
       << kFillerWords[rng.next_below(kFillerWords.size())];
  SignDescription d;
  d.appearance = text.str();
  finalize_description(d);
  return d;
}

std::vector<SignDescription> MockDescriptor::interpret(const ImageRef& image) const {
  if (image.bytes.empty()) {
    throw Error(ErrorKind::degraded_output, "empty image content: " + image.path);
  }
  std::uint64_t hash = image.content_hash();

  if (auto it = scene_script_.find(hash); it != scene_script_.end()) {
    return it->second;
  }
  if (auto it = reference_script_.find(hash); it != reference_script_.end()) {
    return {it->second};
  }
  if (is_mock_payload(image.bytes)) {
    return parse_mock_payload(image.bytes);
  }
  return {fallback_description(hash)};
}

SignDescription MockDescriptor::describe_reference(const ImageRef& image) {
  if (delay_.count() > 0) util::precise_sleep(delay_);
  auto descriptions = interpret(image);
  if (descriptions.empty()) {
    throw Error(ErrorKind::degraded_output, "no sign content in reference image: " + image.path);
  }
  SignDescription d = descriptions.front();
  d.location.reset();  // reference images are single centered signs
  finalize_description(d);
  return d;
}

std::vector<SignDescription> MockDescriptor::describe_scene(const ImageRef& image) {
  if (delay_.count() > 0) util::precise_sleep(delay_);
  auto descriptions = interpret(image);
  const auto& locations = location_vocabulary();
  for (std::size_t i = 0; i < descriptions.size(); ++i) {
    if (!descriptions[i].location || descriptions[i].location->empty()) {
      std::uint64_t pick = util::mix64(image.content_hash(), i) % locations.size();
      descriptions[i].location = locations[pick];
    }
    finalize_description(descriptions[i]);
  }
  return descriptions;
}

std::string MockDescriptor::id() const {
  return "mock-descriptor(seed=" + std::to_string(seed_) + ")";
}

}  // namespace signrec
