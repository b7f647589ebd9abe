#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dpp {

enum class UtteranceKind { Natural, Canonical };

std::string_view to_string(UtteranceKind kind);
UtteranceKind parse_kind(std::string_view name);

// Whitespace tokenization of pre-normalized lowercase text.
std::vector<std::string> tokenize(std::string_view text);
std::string join(const std::vector<std::string>& tokens);

/// A non-empty token sequence tagged with its side (natural or canonical).
class Utterance {
 public:
  Utterance(std::vector<std::string> tokens, UtteranceKind kind);
  static Utterance from_text(std::string_view text, UtteranceKind kind);

  const std::vector<std::string>& tokens() const { return tokens_; }
  UtteranceKind kind() const { return kind_; }
  std::size_t size() const { return tokens_.size(); }
  std::string text() const { return join(tokens_); }

  friend bool operator==(const Utterance&, const Utterance&) = default;

 private:
  std::vector<std::string> tokens_;
  UtteranceKind kind_;
};

}  // namespace dpp
