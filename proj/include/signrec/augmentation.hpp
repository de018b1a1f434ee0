#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "signrec/retrieval.hpp"
#include "signrec/vector_store.hpp"

namespace signrec {

struct AugmentedPrompt {
  std::string text;
  std::vector<SignCode> candidate_codes;  // hit codes in rank order
  std::string template_version;
};

// Versioned prompt templates. Template text is an engineering artifact pinned
// by golden tests; every rendered prompt records its template version for
// provenance. A template body must contain the {{QUERY}} and {{CANDIDATES}}
// slots exactly once.
class TemplateRegistry {
 public:
  static const std::string& default_version();  // "v1"
  static const TemplateRegistry& builtin();

  TemplateRegistry() = default;

  bool has(const std::string& version) const;
  const std::string& text(const std::string& version) const;  // throws not_found
  void register_version(std::string version, std::string text);
  void register_from_file(const std::string& version, const std::filesystem::path& path);
  std::vector<std::string> versions() const;

 private:
  std::map<std::string, std::string> templates_;
};

// Candidate descriptions render on a single line inside quotes; backslash,
// quote, and line breaks are escaped so hostile description text cannot forge
// candidate entries.
std::string escape_candidate_text(std::string_view text);

// Renders the prompt: the query appearance verbatim, then every candidate's
// code and stored description in rank order, then the closed-vocabulary
// answer instruction (one candidate code or NONE).
AugmentedPrompt build_prompt(const SignDescription& query, const RetrievalSet& hits,
                             const VectorStore& store,
                             const std::string& template_version = TemplateRegistry::default_version(),
                             const TemplateRegistry& registry = TemplateRegistry::builtin());

// Recovers the candidate codes from rendered prompt text; used by the
// injection-safety checks.
std::vector<SignCode> parse_candidate_codes(const std::string& prompt_text);

}  // namespace signrec
