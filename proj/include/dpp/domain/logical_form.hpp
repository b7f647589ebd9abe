#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dpp {

enum class LfKind { Type, Filter, Superlative, Count, And };
enum class Comparator { Eq, Ge, Le };

std::string_view to_string(Comparator cmp);

/// Typed query tree over the domain database.
///
/// Surface syntax is parenthesized prefix notation:
///   (type T)
///   (filter SET (CMP ATTR VALUE))
///   (superlative ATTR max|min SET)
///   (count SET)
///   (and SET SET)
struct LogicalForm {
  LfKind kind = LfKind::Type;
  std::string head;   // type name, or attribute for Filter/Superlative
  Comparator cmp = Comparator::Eq;
  std::string value;  // Filter literal
  bool maximize = true;
  std::vector<LogicalForm> args;

  static LogicalForm type(std::string name);
  static LogicalForm filter(LogicalForm set, std::string attr, Comparator cmp, std::string value);
  static LogicalForm superlative(std::string attr, bool maximize, LogicalForm set);
  static LogicalForm count(LogicalForm set);
  static LogicalForm conj(LogicalForm a, LogicalForm b);

  std::string serialize() const;
  // Token sequence for sequence models; parentheses are separate tokens.
  std::vector<std::string> tokens() const;

  // Throws std::invalid_argument on malformed input.
  static LogicalForm parse(std::string_view text);
  static LogicalForm parse(const std::vector<std::string>& tokens);
  static std::optional<LogicalForm> try_parse(const std::vector<std::string>& tokens);

  friend bool operator==(const LogicalForm&, const LogicalForm&) = default;
};

// Splits serialized text into tokens, separating parentheses.
std::vector<std::string> lf_tokenize(std::string_view text);

}  // namespace dpp
