#include "signrec/augmentation.hpp"

#include <fstream>
#include <sstream>

#include "signrec/errors.hpp"
#include "signrec/util.hpp"

namespace signrec {

namespace {

constexpr std::string_view kQuerySlot = "{{QUERY}}";
constexpr std::string_view kCandidatesSlot = "{{CANDIDATES}}";
constexpr std::string_view kCandidateMarker = "Candidate classes, in retrieval rank order:";

const char* kTemplateV1 =
    "You are identifying a road sign from a driving scene.\n"
    "\n"
    "Query sign description:\n"
    "{{QUERY}}\n"
    "\n"
    "Candidate classes, in retrieval rank order:\n"
    "{{CANDIDATES}}\n"
    "\n"
    "Compare the query against each candidate description. Answer with exactly\n"
    "one code from the candidate list, and nothing else. If none of the\n"
    "candidates matches the query sign, answer NONE.\n"
    "Answer:";

}  // namespace

const std::string& TemplateRegistry::default_version() {
  static const std::string v = "v1";
  return v;
}

const TemplateRegistry& TemplateRegistry::builtin() {
  static const TemplateRegistry registry = [] {
    TemplateRegistry r;
    r.register_version("v1", kTemplateV1);
    return r;
  }();
  return registry;
}

bool TemplateRegistry::has(const std::string& version) const {
  return templates_.count(version) != 0;
}

const std::string& TemplateRegistry::text(const std::string& version) const {
  auto it = templates_.find(version);
  if (it == templates_.end()) {
    throw Error(ErrorKind::not_found, "unknown template version: " + version);
  }
  return it->second;
}

void TemplateRegistry::register_version(std::string version, std::string text) {
  if (version.empty()) {
    throw Error(ErrorKind::validation, "template version must be non-empty");
  }
  if (util::count_occurrences(text, kQuerySlot) != 1 ||
      util::count_occurrences(text, kCandidatesSlot) != 1) {
    throw Error(ErrorKind::validation,
                "template " + version + " must contain {{QUERY}} and {{CANDIDATES}} exactly once");
  }
  templates_[std::move(version)] = std::move(text);
}

void TemplateRegistry::register_from_file(const std::string& version,
                                          const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::io, "cannot open template file: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  register_version(version, buffer.str());
}

std::vector<std::string> TemplateRegistry::versions() const {
  std::vector<std::string> out;
  out.reserve(templates_.size());
  for (const auto& [version, _] : templates_) out.push_back(version);
  return out;
}

std::string escape_candidate_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

AugmentedPrompt build_prompt(const SignDescription& query, const RetrievalSet& hits,
                             const VectorStore& store, const std::string& template_version,
                             const TemplateRegistry& registry) {
  if (hits.hits.empty()) {
    throw Error(ErrorKind::validation, "cannot build prompt from empty retrieval set");
  }
  if (query.appearance.empty()) {
    throw Error(ErrorKind::validation, "query description is empty");
  }
  const std::string& body = registry.text(template_version);

  AugmentedPrompt prompt;
  prompt.template_version = template_version;

  std::ostringstream candidates;
  for (std::size_t i = 0; i < hits.hits.size(); ++i) {
    const QueryHit& hit = hits.hits[i];
    SignDescription stored;
    try {
      stored = store.description_of(hit.code);
    } catch (const Error& e) {
      throw Error(ErrorKind::consistency,
                  "retrieval hit " + hit.code.value + " is not resolvable in the store: " +
                      e.what());
    }
    if (i > 0) candidates << "\n";
    candidates << "[" << hit.rank << "] code=" << hit.code.value << " description=\""
               << escape_candidate_text(stored.appearance) << "\"";
    prompt.candidate_codes.push_back(hit.code);
  }

  std::string text = util::replace_all(body, kQuerySlot, query.appearance);
  text = util::replace_all(text, kCandidatesSlot, candidates.str());
  prompt.text = std::move(text);
  return prompt;
}

std::vector<SignCode> parse_candidate_codes(const std::string& prompt_text) {
  // the template's own marker is the last marker line: escaped candidate
  // text cannot introduce new lines
  std::vector<std::string> lines = util::split(prompt_text, '\n');
  std::size_t marker = lines.size();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i] == kCandidateMarker) marker = i;
  }
  std::vector<SignCode> codes;
  if (marker == lines.size()) return codes;

  for (std::size_t i = marker + 1; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty() || line.front() != '[') break;
    std::size_t close = line.find("] code=");
    if (close == std::string::npos) break;
    std::size_t start = close + 7;
    std::size_t end = line.find(" description=\"", start);
    if (end == std::string::npos) break;
    std::string code = line.substr(start, end - start);
    if (!SignCode::valid(code)) break;
    codes.push_back(SignCode{std::move(code)});
  }
  return codes;
}

}  // namespace signrec
