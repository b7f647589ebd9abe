#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dpp/textstats/utterance.hpp"

namespace dpp {

/// Token/id mapping with corpus frequencies.
///
/// Ids 0-3 are reserved for <pad>, <s>, </s> and <unk>. Lookups of unknown
/// tokens resolve to <unk>, whose count is the aggregate frequency of every
/// corpus token that was excluded by the frequency threshold.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumReserved = 4;

  Vocab();

  // Throws ConfigError on an empty corpus.
  static Vocab build(std::span<const Utterance> corpus, int min_freq = 1);
  static Vocab build(std::span<const std::vector<std::string>> corpus, int min_freq = 1);

  // Restores a vocabulary from its ordered token list (reserved tokens excluded)
  // and matching counts.
  static Vocab from_entries(const std::vector<std::string>& tokens,
                            const std::vector<std::int64_t>& counts, std::int64_t unk_count);

  int size() const { return static_cast<int>(id_to_token_.size()); }
  bool contains(std::string_view token) const;
  int id(std::string_view token) const;
  const std::string& token(int id) const;
  std::int64_t count(std::string_view token) const;
  std::int64_t count(int id) const;

  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  std::vector<int> encode(const Utterance& u) const { return encode(u.tokens()); }
  // Stops at </s>; drops <s> and <pad>.
  std::vector<std::string> decode(std::span<const int> ids) const;

  // Content tokens (no reserved entries), in id order.
  std::vector<std::string> content_tokens() const;
  const std::vector<std::int64_t>& counts() const { return counts_; }

  // Stable 64-bit FNV-1a fingerprint over the ordered token list, hex encoded.
  std::string fingerprint() const;

 private:
  void add(const std::string& token, std::int64_t count);

  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
  std::vector<std::int64_t> counts_;
};

}  // namespace dpp
