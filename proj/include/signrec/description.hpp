#pragma once

#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

namespace signrec {

// Abstracted textual description of one sign. Reference descriptions carry no
// location; scene descriptions always do.
struct SignDescription {
  std::string appearance;
  std::optional<std::string> location;
  std::vector<std::string> placeholders_used;

  bool empty() const { return appearance.empty(); }
};

// Vocabulary of generic placeholder tokens allowed inside appearance text,
// e.g. "<two-digit number>" standing in for a concrete speed value.
class PlaceholderRegistry {
 public:
  // numeric placeholders (one..six-digit number) plus <street name>,
  // <time range> and <arrow direction>
  static const PlaceholderRegistry& standard();

  PlaceholderRegistry() = default;

  void add_literal(std::string token);
  bool is_registered(std::string_view token) const;

  // every "<...>" token occurring in the text, in order
  static std::vector<std::string> scan(std::string_view text);
  // scan() entries not present in this registry
  std::vector<std::string> unknown_placeholders(std::string_view text) const;

  static std::string numeric_placeholder(int digits);

 private:
  std::vector<std::string> literals_;
};

// Fills placeholders_used from appearance and rejects unregistered tokens.
void finalize_description(SignDescription& description,
                          const PlaceholderRegistry& registry = PlaceholderRegistry::standard());

struct AbstractionRule {
  std::string name;
  std::string pattern_text;
  std::regex pattern;
};

struct AbstractionViolation {
  std::string rule;
  std::string matched_text;
  std::size_t offset = 0;
};

// Default rules: standalone 2-3 digit numbers, street-name phrases, and
// clock-time phrases. What they match should have been a placeholder.
const std::vector<AbstractionRule>& default_abstraction_rules();

std::vector<AbstractionViolation> validate_abstraction(
    const SignDescription& description,
    const std::vector<AbstractionRule>& rules = default_abstraction_rules());

}  // namespace signrec
