#include "dpp/textstats/utterance.hpp"

#include <cctype>
#include <stdexcept>

namespace dpp {

std::string_view to_string(UtteranceKind kind) {
  return kind == UtteranceKind::Natural ? "natural" : "canonical";
}

UtteranceKind parse_kind(std::string_view name) {
  if (name == "natural") return UtteranceKind::Natural;
  if (name == "canonical") return UtteranceKind::Canonical;
  throw std::invalid_argument("unknown utterance kind: " + std::string(name));
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

Utterance::Utterance(std::vector<std::string> tokens, UtteranceKind kind)
    : tokens_(std::move(tokens)), kind_(kind) {
  if (tokens_.empty()) throw std::invalid_argument("utterance must contain at least one token");
  for (const auto& t : tokens_)
    if (t.empty()) throw std::invalid_argument("utterance contains an empty token");
}

Utterance Utterance::from_text(std::string_view text, UtteranceKind kind) {
  return Utterance(tokenize(text), kind);
}

}  // namespace dpp
