#include "signrec/description.hpp"

#include <array>

#include "signrec/errors.hpp"

namespace signrec {

namespace {
constexpr std::array<const char*, 6> kDigitWords = {"one",  "two", "three",
                                                    "four", "five", "six"};
}

std::string PlaceholderRegistry::numeric_placeholder(int digits) {
  if (digits < 1 || digits > static_cast<int>(kDigitWords.size())) {
    throw Error(ErrorKind::validation,
                "unsupported placeholder digit count: " + std::to_string(digits));
  }
  return std::string("<") + kDigitWords[digits - 1] + "-digit number>";
}

const PlaceholderRegistry& PlaceholderRegistry::standard() {
  static const PlaceholderRegistry registry = [] {
    PlaceholderRegistry r;
    for (int d = 1; d <= static_cast<int>(kDigitWords.size()); ++d) {
      r.add_literal(numeric_placeholder(d));
    }
    r.add_literal("<street name>");
    r.add_literal("<time range>");
    r.add_literal("<arrow direction>");
    return r;
  }();
  return registry;
}

void PlaceholderRegistry::add_literal(std::string token) {
  literals_.push_back(std::move(token));
}

bool PlaceholderRegistry::is_registered(std::string_view token) const {
  for (const auto& literal : literals_) {
    if (literal == token) return true;
  }
  return false;
}

std::vector<std::string> PlaceholderRegistry::scan(std::string_view text) {
  std::vector<std::string> found;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t open = text.find('<', pos);
    if (open == std::string_view::npos) break;
    std::size_t close = text.find('>', open + 1);
    if (close == std::string_view::npos) break;
    found.emplace_back(text.substr(open, close - open + 1));
    pos = close + 1;
  }
  return found;
}

std::vector<std::string> PlaceholderRegistry::unknown_placeholders(std::string_view text) const {
  std::vector<std::string> unknown;
  for (auto& token : scan(text)) {
    if (!is_registered(token)) unknown.push_back(token);
  }
  return unknown;
}

void finalize_description(SignDescription& description, const PlaceholderRegistry& registry) {
  if (description.appearance.empty()) {
    throw Error(ErrorKind::validation, "description appearance is empty");
  }
  auto unknown = registry.unknown_placeholders(description.appearance);
  if (!unknown.empty()) {
    throw Error(ErrorKind::validation,
                "unregistered placeholder token: " + unknown.front());
  }
  description.placeholders_used = PlaceholderRegistry::scan(description.appearance);
}

const std::vector<AbstractionRule>& default_abstraction_rules() {
  static const std::vector<AbstractionRule> rules = [] {
    std::vector<AbstractionRule> r;
    auto add = [&r](std::string name, std::string pattern) {
      AbstractionRule rule;
      rule.name = std::move(name);
      rule.pattern_text = pattern;
      rule.pattern = std::regex(pattern);
      r.push_back(std::move(rule));
    };
    // colon-adjacent digits belong to clock times, which have their own rule
    add("concrete-number", R"((^|[^0-9A-Za-z:])([0-9]{2,3})($|[^0-9A-Za-z:]))");
    add("street-name",
        R"(\b[A-Z][a-z]+ (Street|St|Avenue|Ave|Road|Rd|Boulevard|Blvd|Drive|Dr|Lane|Ln)\b)");
    add("clock-time", R"(\b[0-9]{1,2}(:[0-9]{2})?\s?(AM|PM|am|pm)\b)");
    return r;
  }();
  return rules;
}

std::vector<AbstractionViolation> validate_abstraction(
    const SignDescription& description, const std::vector<AbstractionRule>& rules) {
  std::vector<AbstractionViolation> violations;
  const std::string& text = description.appearance;
  for (const auto& rule : rules) {
    auto begin = std::sregex_iterator(text.begin(), text.end(), rule.pattern);
    auto end = std::sregex_iterator();
    for (auto it = begin; it != end; ++it) {
      const std::smatch& m = *it;
      // rules may use context groups; report the innermost capture when present
      std::size_t group = m.size() > 2 ? 2 : 0;
      if (!m[group].matched) group = 0;
      AbstractionViolation v;
      v.rule = rule.name;
      v.matched_text = m[group].str();
      v.offset = static_cast<std::size_t>(m.position(group));
      violations.push_back(std::move(v));
    }
  }
  return violations;
}

}  // namespace signrec
