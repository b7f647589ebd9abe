#pragma once

#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace dpp {

/// Fixed-dimension word vectors. Immutable after construction.
class EmbeddingTable {
 public:
  static constexpr double kInitRange = 0.2;

  EmbeddingTable() = default;
  explicit EmbeddingTable(int dim) : dim_(dim), zeros_(static_cast<std::size_t>(dim), 0.0f) {}

  // Uniform [-0.2, 0.2] vectors for every token, drawn in the given order.
  static EmbeddingTable random(const std::vector<std::string>& tokens, int dim, std::mt19937_64& rng);

  // Reads "token v1 ... v<dim>" lines. Tokens in `tokens` missing from the file
  // get random vectors. Throws ConfigError when a line has the wrong dimension.
  static EmbeddingTable load(const std::string& path, const std::vector<std::string>& tokens, int dim,
                             std::mt19937_64& rng);

  int dim() const { return dim_; }
  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  // Unknown tokens resolve to the "<unk>" row when present, else a zero vector.
  std::span<const float> operator[](const std::string& token) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  // Tokens that came from a loaded file (as opposed to random fill).
  bool from_file(const std::string& token) const { return file_tokens_.count(token) != 0; }

  void set(const std::string& token, std::vector<float> vec);

 private:
  int dim_ = 0;
  std::vector<std::string> tokens_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<std::string, bool> file_tokens_;
  std::vector<float> zeros_;
};

}  // namespace dpp
