#include "signrec/catalog.hpp"

#include <cctype>
#include <fstream>
#include <set>

#include "signrec/errors.hpp"
#include "signrec/util.hpp"

namespace signrec {

namespace {
constexpr std::string_view kManifestHeader = "signcat v1";

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
}  // namespace

bool SignCode::valid(std::string_view text) {
  std::size_t i = 0;
  std::size_t n = text.size();
  if (n == 0) return false;
  if (!is_upper(text[i])) return false;
  while (i < n && is_upper(text[i])) ++i;
  while (i < n && is_digit(text[i])) ++i;
  while (i < n) {
    if (text[i] != '-') return false;
    ++i;
    if (i >= n || !is_digit(text[i])) return false;
    while (i < n && is_digit(text[i])) ++i;
    while (i < n && is_alpha(text[i])) ++i;
  }
  return true;
}

SignCode SignCode::parse(std::string_view text) {
  if (!valid(text)) {
    throw Error(ErrorKind::validation, "malformed sign code: \"" + std::string(text) + "\"");
  }
  return SignCode{std::string(text)};
}

Catalog Catalog::load(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) {
    throw Error(ErrorKind::io, "cannot open manifest: " + manifest.string());
  }
  const auto base_dir = manifest.has_parent_path() ? manifest.parent_path()
                                                   : std::filesystem::path(".");

  Catalog catalog;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string trimmed = util::trim(line);
    if (!header_seen) {
      if (trimmed != kManifestHeader) {
        throw Error(ErrorKind::parse,
                    manifest.string() + ":" + std::to_string(line_no) +
                        ": expected header \"" + std::string(kManifestHeader) + "\"");
      }
      header_seen = true;
      continue;
    }
    if (trimmed.empty() || trimmed.front() == '#') continue;

    auto fields = util::split(trimmed, '|');
    if (fields.size() < 3 || fields.size() > 4) {
      throw Error(ErrorKind::parse,
                  manifest.string() + ":" + std::to_string(line_no) +
                      ": expected code|name|image[|category], got " +
                      std::to_string(fields.size()) + " fields");
    }

    SignClass entry;
    std::string code_text = util::trim(fields[0]);
    if (!SignCode::valid(code_text)) {
      throw Error(ErrorKind::parse, manifest.string() + ":" + std::to_string(line_no) +
                                        ": malformed sign code \"" + code_text + "\"");
    }
    entry.code = SignCode{code_text};
    entry.name = util::trim(fields[1]);
    if (entry.name.empty()) {
      throw Error(ErrorKind::parse,
                  manifest.string() + ":" + std::to_string(line_no) + ": empty name");
    }
    if (!seen.insert(code_text).second) {
      throw Error(ErrorKind::validation, "duplicate sign code in manifest: " + code_text);
    }

    std::filesystem::path image = base_dir / util::trim(fields[2]);
    if (!std::filesystem::exists(image)) {
      throw Error(ErrorKind::io, "missing image file: " + image.string());
    }
    entry.image_path = image.string();
    entry.category = fields.size() == 4 ? util::trim(fields[3]) : "";

    catalog.classes_.push_back(std::move(entry));
  }

  if (!header_seen) {
    throw Error(ErrorKind::parse, manifest.string() + ": empty manifest (missing header)");
  }
  return catalog;
}

Catalog Catalog::with_added(SignClass entry) const {
  if (find(entry.code) != nullptr) {
    throw Error(ErrorKind::validation, "duplicate sign code: " + entry.code.value);
  }
  Catalog next = *this;
  if (!entry.embedding.empty()) {
    if (next.dimension_ == 0) {
      next.dimension_ = entry.embedding.dim();
    } else if (entry.embedding.dim() != next.dimension_) {
      throw Error(ErrorKind::validation,
                  "embedding dimension mismatch for " + entry.code.value);
    }
  }
  next.classes_.push_back(std::move(entry));
  next.version_ = version_ + 1;
  return next;
}

Catalog Catalog::with_removed(const SignCode& code) const {
  Catalog next = *this;
  auto it = std::find_if(next.classes_.begin(), next.classes_.end(),
                         [&](const SignClass& c) { return c.code == code; });
  if (it == next.classes_.end()) {
    throw Error(ErrorKind::not_found, "unknown sign code: " + code.value);
  }
  next.classes_.erase(it);
  next.version_ = version_ + 1;
  return next;
}

Catalog Catalog::with_indexed(const SignCode& code, SignDescription description,
                              EmbeddingVector embedding) const {
  if (description.empty()) {
    throw Error(ErrorKind::validation, "indexed description is empty for " + code.value);
  }
  if (embedding.empty()) {
    throw Error(ErrorKind::validation, "indexed embedding is empty for " + code.value);
  }
  Catalog next = *this;
  auto it = std::find_if(next.classes_.begin(), next.classes_.end(),
                         [&](const SignClass& c) { return c.code == code; });
  if (it == next.classes_.end()) {
    throw Error(ErrorKind::not_found, "unknown sign code: " + code.value);
  }
  if (next.dimension_ == 0) {
    next.dimension_ = embedding.dim();
  } else if (embedding.dim() != next.dimension_) {
    throw Error(ErrorKind::validation,
                "embedding dimension mismatch for " + code.value + ": got " +
                    std::to_string(embedding.dim()) + ", catalog uses " +
                    std::to_string(next.dimension_));
  }
  it->description = std::move(description);
  it->embedding = std::move(embedding);
  next.version_ = version_ + 1;
  return next;
}

Catalog Catalog::with_indexed_many(std::vector<IndexedEntry> entries) const {
  Catalog next = *this;
  for (auto& entry : entries) {
    auto it = std::find_if(next.classes_.begin(), next.classes_.end(),
                           [&](const SignClass& c) { return c.code == entry.code; });
    if (it == next.classes_.end()) {
      throw Error(ErrorKind::not_found, "unknown sign code: " + entry.code.value);
    }
    if (entry.description.empty() || entry.embedding.empty()) {
      throw Error(ErrorKind::validation,
                  "indexed entry incomplete for " + entry.code.value);
    }
    if (next.dimension_ == 0) {
      next.dimension_ = entry.embedding.dim();
    } else if (entry.embedding.dim() != next.dimension_) {
      throw Error(ErrorKind::validation,
                  "embedding dimension mismatch for " + entry.code.value);
    }
    it->description = std::move(entry.description);
    it->embedding = std::move(entry.embedding);
  }
  next.version_ = version_ + 1;
  return next;
}

const SignClass* Catalog::find(const SignCode& code) const {
  for (const auto& c : classes_) {
    if (c.code == code) return &c;
  }
  return nullptr;
}

std::vector<SignCode> Catalog::unindexed_codes() const {
  std::vector<SignCode> out;
  for (const auto& c : classes_) {
    if (!c.indexed()) out.push_back(c.code);
  }
  return out;
}

}  // namespace signrec
