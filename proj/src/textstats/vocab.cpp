#include "dpp/textstats/vocab.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "dpp/error.hpp"

namespace dpp {

namespace {

const char* const kReserved[Vocab::kNumReserved] = {"<pad>", "<s>", "</s>", "<unk>"};

}  // namespace

Vocab::Vocab() {
  for (const char* t : kReserved) add(t, 0);
}

void Vocab::add(const std::string& token, std::int64_t count) {
  token_to_id_.emplace(token, static_cast<int>(id_to_token_.size()));
  id_to_token_.push_back(token);
  counts_.push_back(count);
}

Vocab Vocab::build(std::span<const Utterance> corpus, int min_freq) {
  std::vector<std::vector<std::string>> seqs;
  seqs.reserve(corpus.size());
  for (const auto& u : corpus) seqs.push_back(u.tokens());
  return build(std::span<const std::vector<std::string>>(seqs), min_freq);
}

Vocab Vocab::build(std::span<const std::vector<std::string>> corpus, int min_freq) {
  if (corpus.empty()) throw ConfigError("cannot build a vocabulary from an empty corpus");
  // std::map gives lexicographic id order, independent of corpus order.
  std::map<std::string, std::int64_t> freq;
  for (const auto& seq : corpus)
    for (const auto& t : seq) ++freq[t];
  Vocab v;
  std::int64_t unk = 0;
  for (const auto& [tok, c] : freq) {
    if (c >= min_freq && tok != "<pad>" && tok != "<s>" && tok != "</s>" && tok != "<unk>")
      v.add(tok, c);
    else
      unk += c;
  }
  v.counts_[kUnk] = unk;
  return v;
}

Vocab Vocab::from_entries(const std::vector<std::string>& tokens,
                          const std::vector<std::int64_t>& counts, std::int64_t unk_count) {
  if (tokens.size() != counts.size()) throw LoadError("vocabulary token/count length mismatch");
  Vocab v;
  for (std::size_t i = 0; i < tokens.size(); ++i) v.add(tokens[i], counts[i]);
  v.counts_[kUnk] = unk_count;
  return v;
}

bool Vocab::contains(std::string_view token) const {
  return token_to_id_.find(std::string(token)) != token_to_id_.end();
}

int Vocab::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("token id out of range");
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::int64_t Vocab::count(std::string_view token) const { return count(id(token)); }

std::int64_t Vocab::count(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("token id out of range");
  return counts_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocab::decode(std::span<const int> ids) const {
  std::vector<std::string> out;
  for (int i : ids) {
    if (i == kEos) break;
    if (i == kBos || i == kPad) continue;
    out.push_back(token(i));
  }
  return out;
}

std::vector<std::string> Vocab::content_tokens() const {
  return {id_to_token_.begin() + kNumReserved, id_to_token_.end()};
}

std::string Vocab::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& t : id_to_token_) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;  // separator
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dpp
