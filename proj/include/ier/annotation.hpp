#pragma once

// Bracketed annotation format:
//
//   node := '[' LABEL ':' item* ']'      item := word | node
//
// Tokens are whitespace-delimited. '[' may stand alone or be glued to the
// label ("[IER :"); otherwise brackets attached to letters are plain words.
// LABEL is IER, ACTION-<action> or an entity label or alias, matched
// case-insensitively.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ier/error.hpp"
#include "ier/vocab.hpp"

namespace ier {

enum class ParseCategory {
  UnbalancedBracket,
  UnknownLabel,
  MultipleActions,
  EmptyNode,
  MultipleRoots,
  // Structure the grammar allows but the annotation model does not
  // (misplaced IER/ACTION, missing ':'), plus bad JSON records and duplicate ids.
  Malformed,
};

const char* parse_category_name(ParseCategory c);

class ParseError : public Error {
 public:
  ParseError(ParseCategory category, std::size_t line, std::size_t token_offset,
             const std::string& message);

  ParseCategory category() const noexcept { return category_; }
  std::size_t line() const noexcept { return line_; }
  /// 0-based index of the offending whitespace-delimited token.
  std::size_t token_offset() const noexcept { return token_offset_; }
  const std::string& message() const noexcept { return message_; }

 private:
  ParseCategory category_;
  std::size_t line_;
  std::size_t token_offset_;
  std::string message_;
};

AnnotatedUtterance parse_line(std::string_view text, std::size_t line_number = 1);

/// Canonical one-line rendering; parse_line(serialize(u)) == u.
std::string serialize(const AnnotatedUtterance& utt);

enum class CorpusFormat { BracketLines, Jsonl };

CorpusFormat parse_corpus_format(std::string_view name);
std::string_view corpus_format_name(CorpusFormat f);

struct Provenance {
  std::string source;
  CorpusFormat format = CorpusFormat::BracketLines;
  std::size_t lines_read = 0;
  std::size_t utterances = 0;
  std::size_t errors = 0;
  std::string generator;  // set by the synthetic generator
  std::uint64_t seed = 0;
};

struct Corpus {
  std::vector<AnnotatedUtterance> utterances;
  Provenance provenance;

  std::size_t size() const { return utterances.size(); }
  bool empty() const { return utterances.empty(); }
};

struct LoadResult {
  Corpus corpus;
  std::vector<ParseError> errors;
};

/// Malformed lines are collected, not fatal. Throws Error(Decode) when the
/// stream is not valid UTF-8.
LoadResult load_corpus(std::istream& in, CorpusFormat format,
                       std::string source = "<stream>");
LoadResult load_corpus_file(const std::string& path, CorpusFormat format);

void write_corpus(std::ostream& out, const Corpus& corpus, CorpusFormat format);

struct FilterReport {
  std::size_t no_ier = 0;
  std::size_t other_action = 0;
  std::size_t no_action = 0;

  std::size_t removed() const { return no_ier + other_action + no_action; }
};

/// Keeps only utterances with an IER root carrying a non-OTHER action.
Corpus filter_executable(const Corpus& corpus, FilterReport* report = nullptr);

bool is_valid_utf8(std::string_view s);

}  // namespace ier
