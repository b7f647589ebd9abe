#include "dpp/textstats/embedding.hpp"

#include <fstream>
#include <sstream>

#include "dpp/error.hpp"

namespace dpp {

EmbeddingTable EmbeddingTable::random(const std::vector<std::string>& tokens, int dim,
                                      std::mt19937_64& rng) {
  EmbeddingTable t(dim);
  std::uniform_real_distribution<float> u(static_cast<float>(-kInitRange), static_cast<float>(kInitRange));
  for (const auto& tok : tokens) {
    if (t.contains(tok)) continue;
    std::vector<float> v(static_cast<std::size_t>(dim));
    for (auto& x : v) x = u(rng);
    t.set(tok, std::move(v));
  }
  return t;
}

EmbeddingTable EmbeddingTable::load(const std::string& path, const std::vector<std::string>& tokens,
                                    int dim, std::mt19937_64& rng) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open embedding file: " + path);
  EmbeddingTable t(dim);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tok;
    if (!(ss >> tok)) continue;
    std::vector<float> v;
    float x;
    while (ss >> x) v.push_back(x);
    if (static_cast<int>(v.size()) != dim)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(dim) +
                        " values, found " + std::to_string(v.size()));
    t.set(tok, std::move(v));
    t.file_tokens_[tok] = true;
  }
  std::uniform_real_distribution<float> u(static_cast<float>(-kInitRange), static_cast<float>(kInitRange));
  for (const auto& tok : tokens) {
    if (t.contains(tok)) continue;
    std::vector<float> v(static_cast<std::size_t>(dim));
    for (auto& val : v) val = u(rng);
    t.set(tok, std::move(v));
  }
  return t;
}

void EmbeddingTable::set(const std::string& token, std::vector<float> vec) {
  if (static_cast<int>(vec.size()) != dim_) throw ConfigError("embedding dimension mismatch for " + token);
  auto it = index_.find(token);
  if (it != index_.end()) {
    std::copy(vec.begin(), vec.end(), data_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_));
    return;
  }
  index_.emplace(token, tokens_.size());
  tokens_.push_back(token);
  data_.insert(data_.end(), vec.begin(), vec.end());
}

std::span<const float> EmbeddingTable::operator[](const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) it = index_.find("<unk>");
  if (it == index_.end()) return zeros_;
  return {data_.data() + it->second * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
}

}  // namespace dpp
