#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "signrec/catalog.hpp"
#include "signrec/errors.hpp"
#include "signrec/util.hpp"

using namespace signrec;
namespace ts = signrec::testsupport;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) : path(ts::make_temp_dir(tag)) {}
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_manifest(const fs::path& dir, const std::string& content,
                        const std::vector<std::string>& images = {}) {
  for (const auto& image : images) {
    std::ofstream out(dir / image, std::ios::binary);
    out << "blob " << image;
  }
  fs::path manifest = dir / "catalog.manifest";
  std::ofstream out(manifest);
  out << content;
  out.close();
  return manifest;
}

}  // namespace

TEST_CASE("sign code shape") {
  CHECK(SignCode::valid("R2-1"));
  CHECK(SignCode::valid("R1-5a"));
  CHECK(SignCode::valid("RS10-11b"));
  CHECK(SignCode::valid("W20"));
  CHECK(SignCode::valid("M1-4aB"));
  CHECK_FALSE(SignCode::valid(""));
  CHECK_FALSE(SignCode::valid("r2-1"));
  CHECK_FALSE(SignCode::valid("R2-"));
  CHECK_FALSE(SignCode::valid("R2--1"));
  CHECK_FALSE(SignCode::valid("2-1"));
  CHECK_FALSE(SignCode::valid("R 2-1"));
  CHECK_FALSE(SignCode::valid("R2-a"));
  CHECK_THROWS_AS((void)SignCode::parse("bogus!"), Error);
}

TEST_CASE("load catalog from manifest") {
  TempDir dir("catalog");

  SUBCASE("three entries") {
    auto manifest = write_manifest(dir.path,
                                   "signcat v1\n"
                                   "R1-1|Stop|r1.img|regulatory\n"
                                   "R2-1|Speed Limit|r2.img|regulatory\n"
                                   "# comment line\n"
                                   "R5-1|Do Not Enter|r5.img\n",
                                   {"r1.img", "r2.img", "r5.img"});
    Catalog catalog = Catalog::load(manifest);
    CHECK(catalog.size() == 3);
    CHECK(catalog.version() == 1);
    CHECK(catalog.find(SignCode{"R2-1"}) != nullptr);
    CHECK(catalog.find(SignCode{"R2-1"})->name == "Speed Limit");
    CHECK(catalog.find(SignCode{"R5-1"})->category.empty());
    // pre-index state
    CHECK(catalog.unindexed_codes().size() == 3);
    CHECK(catalog.dimension() == 0);
  }

  SUBCASE("duplicate code names the offender") {
    auto manifest = write_manifest(dir.path,
                                   "signcat v1\n"
                                   "R2-1|Speed Limit|r2.img\n"
                                   "R2-1|Speed Limit Again|r2.img\n",
                                   {"r2.img"});
    try {
      Catalog::load(manifest);
      FAIL("expected validation error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::validation);
      CHECK(std::string(e.what()).find("R2-1") != std::string::npos);
    }
  }

  SUBCASE("malformed line reports line number") {
    auto manifest = write_manifest(dir.path,
                                   "signcat v1\n"
                                   "R1-1|Stop|r1.img\n"
                                   "not a record\n",
                                   {"r1.img"});
    try {
      Catalog::load(manifest);
      FAIL("expected parse error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::parse);
      CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
  }

  SUBCASE("missing image names the path") {
    auto manifest = write_manifest(dir.path, "signcat v1\nR1-1|Stop|gone.img\n");
    try {
      Catalog::load(manifest);
      FAIL("expected io error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::io);
      CHECK(std::string(e.what()).find("gone.img") != std::string::npos);
    }
  }

  SUBCASE("missing header") {
    auto manifest = write_manifest(dir.path, "R1-1|Stop|r1.img\n", {"r1.img"});
    CHECK_THROWS_AS((void)Catalog::load(manifest), Error);
  }

  SUBCASE("missing manifest file") {
    CHECK_THROWS_AS((void)Catalog::load(dir.path / "absent.manifest"), Error);
  }
}

TEST_CASE("add and remove classes") {
  TempDir dir("catalog_ops");
  auto manifest = write_manifest(dir.path,
                                 "signcat v1\n"
                                 "R1-1|Stop|r1.img\n"
                                 "R2-1|Speed Limit|r2.img\n"
                                 "R5-1|Do Not Enter|r5.img\n",
                                 {"r1.img", "r2.img", "r5.img", "r3.img"});
  Catalog catalog = Catalog::load(manifest);

  SignClass extra;
  extra.code = SignCode{"R3-1"};
  extra.name = "No Right Turn";
  extra.image_path = (dir.path / "r3.img").string();

  SUBCASE("add bumps version and marks the entry stale") {
    Catalog next = catalog.with_added(extra);
    CHECK(next.size() == 4);
    CHECK(next.version() == 2);
    CHECK(catalog.size() == 3);  // original untouched
    auto stale = next.unindexed_codes();
    CHECK(std::find(stale.begin(), stale.end(), SignCode{"R3-1"}) != stale.end());
  }

  SUBCASE("duplicate add fails") {
    SignClass dup = extra;
    dup.code = SignCode{"R2-1"};
    CHECK_THROWS_AS((void)catalog.with_added(dup), Error);
  }

  SUBCASE("remove") {
    Catalog next = catalog.with_removed(SignCode{"R2-1"});
    CHECK(next.size() == 2);
    CHECK(next.version() == 2);
    CHECK(next.find(SignCode{"R2-1"}) == nullptr);
  }

  SUBCASE("remove unknown code") {
    try {
      catalog.with_removed(SignCode{"X9-9"});
      FAIL("expected not-found");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::not_found);
    }
  }

  SUBCASE("add then remove restores everything but the version") {
    Catalog round = catalog.with_added(extra).with_removed(extra.code);
    CHECK(round.size() == catalog.size());
    CHECK(round.version() == 3);
    for (std::size_t i = 0; i < catalog.size(); ++i) {
      const auto& a = catalog.classes()[i];
      const auto& b = round.classes()[i];
      CHECK(a.code == b.code);
      CHECK(a.name == b.name);
      CHECK(a.image_path == b.image_path);
      CHECK(a.category == b.category);
    }
  }

  SUBCASE("remove all leaves a valid empty catalog") {
    Catalog next = catalog;
    for (const auto& entry : catalog.classes()) {
      next = next.with_removed(entry.code);
    }
    CHECK(next.size() == 0);
    CHECK(next.version() == 4);
  }
}

TEST_CASE("catalog mutations replay like a plain set") {
  TempDir dir("catalog_prop");
  auto manifest = write_manifest(dir.path, "signcat v1\nR1-1|Stop|r1.img\n", {"r1.img"});
  Catalog catalog = Catalog::load(manifest);
  std::set<std::string> oracle = {"R1-1"};

  util::DetRng rng(99);
  std::uint64_t last_version = catalog.version();
  for (int step = 0; step < 300; ++step) {
    auto code = ts::code_for_index(rng.next_below(40));
    bool should_add = rng.next_double() < 0.6;
    if (should_add) {
      SignClass entry;
      entry.code = code;
      entry.name = "class " + code.value;
      entry.image_path = (dir.path / "r1.img").string();
      if (oracle.insert(code.value).second) {
        catalog = catalog.with_added(entry);
      } else {
        CHECK_THROWS_AS((void)catalog.with_added(entry), Error);
        continue;
      }
    } else {
      if (oracle.erase(code.value) > 0) {
        catalog = catalog.with_removed(code);
      } else {
        CHECK_THROWS_AS((void)catalog.with_removed(code), Error);
        continue;
      }
    }
    CHECK(catalog.version() > last_version);
    last_version = catalog.version();

    std::set<std::string> observed;
    for (const auto& entry : catalog.classes()) observed.insert(entry.code.value);
    REQUIRE(observed == oracle);
  }
}
