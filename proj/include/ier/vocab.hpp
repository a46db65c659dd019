#pragma once

// Domain vocabulary shared by every stage: actions, entity labels, tokens,
// spans, annotation trees and BIO tags.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ier {

enum class ActionType {
  Adjust,
  Delete,
  Crop,
  Add,
  Replace,
  Apply,
  Zoom,
  Rotate,
  Transform,
  Move,
  Clone,
  Select,
  Swap,
  Undo,
  Merge,
  Redo,
  Other,
  Scroll,
};

inline constexpr std::size_t kNumActions = 18;

enum class EntityLabel {
  Attribute,
  Value,
  Object,
  Location,
  Intent,
};

inline constexpr std::size_t kNumEntityLabels = 5;

const std::array<ActionType, kNumActions>& all_actions();
const std::array<EntityLabel, kNumEntityLabels>& all_entity_labels();

/// Upper-case canonical name, e.g. "ADJUST".
std::string_view action_name(ActionType a);
std::string_view entity_name(EntityLabel e);

/// Case-insensitive. Throws Error(UnknownLabel).
ActionType parse_action(std::string_view raw);

/// Case-insensitive match of canonical names and aliases
/// (REGION, MODIFIER-VALUE, MODIFIER/VALUE, MODIFIER, INTENTION).
/// Throws Error(UnknownLabel).
EntityLabel canonicalize_label(std::string_view raw);

std::optional<ActionType> try_parse_action(std::string_view raw);
std::optional<EntityLabel> try_canonicalize_label(std::string_view raw);

struct Token {
  std::string text;
  std::size_t index = 0;

  bool operator==(const Token&) const = default;
};

/// Half-open token range [start, end) carrying an entity label.
struct Span {
  EntityLabel label = EntityLabel::Attribute;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const Span&) const = default;
  auto operator<=>(const Span&) const = default;
};

enum class NodeKind { Ier, Action, Entity, Word };

/// Annotation tree node. Words are leaves holding a token index; the other
/// kinds hold an ordered list of children.
struct AnnNode {
  NodeKind kind = NodeKind::Word;
  ActionType action = ActionType::Adjust;  // meaningful for Action nodes
  EntityLabel entity = EntityLabel::Attribute;  // meaningful for Entity nodes
  std::size_t token = 0;  // meaningful for Word nodes
  std::vector<AnnNode> children;

  static AnnNode word(std::size_t token_index);
  static AnnNode ier(std::vector<AnnNode> children);
  static AnnNode action_node(ActionType a, std::vector<AnnNode> children);
  static AnnNode entity_node(EntityLabel e, std::vector<AnnNode> children);

  /// First and one-past-last token index covered by this node.
  /// Precondition: the node covers at least one word.
  std::size_t first_token() const;
  std::size_t last_token_end() const;

  bool operator==(const AnnNode& other) const;
};

struct AnnotatedUtterance {
  std::string id;
  std::vector<Token> tokens;
  std::optional<AnnNode> root;

  /// Action of the direct ACTION child of the root, if any.
  std::optional<ActionType> action() const;

  /// All entity nodes as flat spans, in pre-order.
  std::vector<Span> entity_spans() const;

  /// True when some entity node contains another entity node.
  bool has_nested_entities() const;

  bool operator==(const AnnotatedUtterance&) const = default;
};

/// Builds a token list from words, assigning contiguous indices.
std::vector<Token> make_tokens(const std::vector<std::string>& words);

enum class BioKind { O, B, I };

struct BioTag {
  BioKind kind = BioKind::O;
  std::string label;  // empty for O; may be composite ("ATTRIBUTE|VALUE")

  static BioTag outside() { return {}; }
  static BioTag begin(std::string l) { return {BioKind::B, std::move(l)}; }
  static BioTag inside(std::string l) { return {BioKind::I, std::move(l)}; }

  /// "O", "B-LABEL" or "I-LABEL".
  std::string str() const;
  /// Inverse of str(); anything without a B-/I- prefix other than "O" throws.
  static BioTag parse(std::string_view text);

  bool operator==(const BioTag&) const = default;
};

using BioSequence = std::vector<BioTag>;

std::string to_string(const BioSequence& seq);

}  // namespace ier
