#include <doctest.h>

#include <filesystem>

#include "fixtures.hpp"
#include "signrec/descriptor.hpp"
#include "signrec/errors.hpp"
#include "signrec/util.hpp"

using namespace signrec;
namespace ts = signrec::testsupport;
namespace fs = std::filesystem;

namespace {

ImageRef bytes_image(std::string content, std::string label = "<test>") {
  return ImageRef::from_bytes(std::vector<std::uint8_t>(content.begin(), content.end()),
                              std::move(label));
}

}  // namespace

TEST_CASE("mock descriptor is a pure function of bytes and seed") {
  MockDescriptor mock(7);
  auto image = bytes_image("arbitrary image payload");
  auto a = mock.describe_reference(image);
  auto b = mock.describe_reference(image);
  CHECK(a.appearance == b.appearance);
  CHECK_FALSE(a.location.has_value());

  MockDescriptor other_seed(8);
  auto c = other_seed.describe_reference(image);
  CHECK(c.appearance != a.appearance);  // seed participates

  auto different = mock.describe_reference(bytes_image("different payload"));
  CHECK(different.appearance != a.appearance);
}

TEST_CASE("canonical descriptions abstract variable content") {
  SignClass speed;
  speed.code = SignCode{"R2-1"};
  speed.name = "Speed Limit";
  speed.category = "regulatory";

  auto d = MockDescriptor::canonical_description(speed);
  CHECK(d.appearance.find("<two-digit number>") != std::string::npos);
  CHECK(d.appearance.find("50") == std::string::npos);
  for (char c : d.appearance) {
    CHECK_FALSE(std::isdigit(static_cast<unsigned char>(c)));
  }
  CHECK(validate_abstraction(d).empty());
  REQUIRE(!d.placeholders_used.empty());

  SignClass numbered;
  numbered.code = SignCode{"R12-1"};
  numbered.name = "Clearance 12 Feet";
  numbered.category = "regulatory";
  auto nd = MockDescriptor::canonical_description(numbered);
  CHECK(nd.appearance.find("12") == std::string::npos);
  CHECK(nd.appearance.find("<two-digit number>") != std::string::npos);
}

TEST_CASE("degenerate images never crash") {
  MockDescriptor mock(7);

  SUBCASE("a one-byte blank still yields a minimal description") {
    auto d = mock.describe_reference(bytes_image(std::string(1, '\0')));
    CHECK_FALSE(d.appearance.empty());
    CHECK(validate_abstraction(d).empty());
  }

  SUBCASE("empty bytes are a degraded-output error") {
    try {
      mock.describe_reference(bytes_image(""));
      FAIL("expected degraded-output");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::degraded_output);
    }
  }

  SUBCASE("fuzz: random byte blobs always produce valid abstracted text") {
    util::DetRng rng(41);
    for (int i = 0; i < 60; ++i) {
      std::string blob;
      std::size_t len = 1 + rng.next_below(32);
      for (std::size_t b = 0; b < len; ++b) {
        blob.push_back(static_cast<char>(rng.next_u64() & 0xff));
      }
      auto d = mock.describe_reference(bytes_image(blob));
      CHECK_FALSE(d.appearance.empty());
      CHECK(validate_abstraction(d).empty());
    }
  }
}

TEST_CASE("scene descriptions carry locations, reference descriptions do not") {
  MockDescriptor mock(7);

  SUBCASE("scripted scene payload round-trips exactly") {
    SignDescription first;
    first.appearance = "a red octagonal regulatory sign reading stop";
    first.location = "in the upper right quadrant";
    SignDescription second;
    second.appearance = "a white rectangular sign reading one way";
    second.location = "to the left of the traffic light";
    auto payload = render_mock_payload({first, second});
    auto image = ImageRef::from_bytes(payload, "scene");

    auto scene = mock.describe_scene(image);
    REQUIRE(scene.size() == 2);
    CHECK(scene[0].appearance == first.appearance);
    CHECK(scene[0].location == first.location);
    CHECK(scene[1].appearance == second.appearance);
    CHECK(scene[1].location == second.location);

    // same payload through the reference path drops the location
    auto ref = mock.describe_reference(image);
    CHECK(ref.appearance == first.appearance);
    CHECK_FALSE(ref.location.has_value());
  }

  SUBCASE("empty scene payload yields an empty list") {
    auto payload = render_mock_payload({});
    auto scene = mock.describe_scene(ImageRef::from_bytes(payload, "empty-scene"));
    CHECK(scene.empty());
  }

  SUBCASE("unscripted scene gets a deterministic location") {
    auto a = mock.describe_scene(bytes_image("road scene bytes"));
    auto b = mock.describe_scene(bytes_image("road scene bytes"));
    REQUIRE(a.size() == 1);
    REQUIRE(a[0].location.has_value());
    CHECK_FALSE(a[0].location->empty());
    CHECK(a[0].location == b[0].location);
  }

  SUBCASE("payload without location line gains one in scene mode") {
    SignDescription d;
    d.appearance = "a blue circular sign showing keep right";
    auto scene = mock.describe_scene(ImageRef::from_bytes(render_mock_payload({d}), "s"));
    REQUIRE(scene.size() == 1);
    REQUIRE(scene[0].location.has_value());
  }
}

TEST_CASE("catalog-keyed script serves canonical descriptions") {
  auto root = ts::make_temp_dir("descriptor_catalog");
  auto fixture = ts::make_fixture(root, ts::kFixtureSeed, 4);

  MockDescriptor mock(ts::kFixtureSeed);
  mock.with_catalog(fixture.catalog);

  for (const auto& entry : fixture.catalog.classes()) {
    auto image = ImageRef::from_file(entry.image_path);
    auto described = mock.describe_reference(image);
    auto canonical = MockDescriptor::canonical_description(entry);
    CHECK(described.appearance == canonical.appearance);
    CHECK(validate_abstraction(described).empty());
  }
  fs::remove_all(root);
}

TEST_CASE("image handles sniff media types") {
  std::vector<std::uint8_t> png = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a, 1, 2};
  CHECK(ImageRef::from_bytes(png).media_type() == "image/png");
  std::vector<std::uint8_t> jpeg = {0xff, 0xd8, 0xff, 0xe0, 0};
  CHECK(ImageRef::from_bytes(jpeg).media_type() == "image/jpeg");
  std::vector<std::uint8_t> other = {'h', 'i'};
  CHECK(ImageRef::from_bytes(other).media_type() == "application/octet-stream");

  CHECK_THROWS_AS((void)ImageRef::from_file("/nonexistent/image.png"), Error);
}
