#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ier/vocab.hpp"

namespace ier {

/// Lower-cases ASCII, splits on whitespace and peels leading and trailing
/// punctuation (.,!?;:"'()) into single-character tokens.
std::vector<Token> tokenize(std::string_view text);

/// Word vectors read from the common "word v1 ... vD" text format.
/// Absent words map to the zero vector.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim), zeros_(dim, 0.0) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return index_.size(); }
  bool contains(std::string_view word) const;

  /// Returns false if the word is already present (first occurrence wins).
  bool insert(std::string word, std::vector<double> vec);

  std::span<const double> lookup(std::string_view word) const;

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> data_;
  std::vector<double> zeros_;
};

/// Throws Error(DimensionMismatch) or Error(Malformed) with a line number.
EmbeddingTable load_word_vectors(std::istream& in);
EmbeddingTable load_word_vectors_file(const std::string& path);

/// Mean of the token vectors; out-of-vocabulary tokens count as zero vectors.
std::vector<double> embed_mean(std::span<const Token> tokens, const EmbeddingTable& table);

/// Feature templates for position i of a token sequence:
/// bias, w, w-1, w+1, pre1-3, suf1-3, shape, pos, and act / act|w when an
/// action is given. Affixes are counted in UTF-8 code points and only emitted
/// up to the token length.
std::vector<std::string> crf_token_features(std::span<const Token> tokens, std::size_t i,
                                            std::optional<ActionType> action);

/// Interns feature strings to dense ids in insertion order.
class FeatureDictionary {
 public:
  std::uint32_t intern(const std::string& name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

  static FeatureDictionary from_names(std::vector<std::string> names);

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

/// Sparse feature vector sorted by id.
using FeatureVector = std::vector<std::pair<std::uint32_t, double>>;

/// Level-1 utterance features: the mean word vector (ids [0, D)) followed by
/// binary bag-of-words indicators over the training vocabulary (ids D + k).
class UtteranceFeaturizer {
 public:
  UtteranceFeaturizer() = default;
  UtteranceFeaturizer(std::size_t embedding_dim, FeatureDictionary vocabulary)
      : embedding_dim_(embedding_dim), vocabulary_(std::move(vocabulary)) {}

  /// Vocabulary from every token of the given utterances.
  static UtteranceFeaturizer fit(const std::vector<std::vector<Token>>& utterances,
                                 std::size_t embedding_dim);

  /// `table` may be null only when embedding_dim() == 0.
  FeatureVector transform(std::span<const Token> tokens, const EmbeddingTable* table) const;

  std::size_t embedding_dim() const { return embedding_dim_; }
  std::size_t num_features() const { return embedding_dim_ + vocabulary_.size(); }
  const FeatureDictionary& vocabulary() const { return vocabulary_; }

 private:
  std::size_t embedding_dim_ = 0;
  FeatureDictionary vocabulary_;
};

}  // namespace ier
