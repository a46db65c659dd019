#include "ier/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <utility>

#include "ier/error.hpp"

namespace ier {

namespace {

constexpr std::array<std::pair<ActionType, std::string_view>, kNumActions>
    kActionNames{{
        {ActionType::Adjust, "ADJUST"},
        {ActionType::Delete, "DELETE"},
        {ActionType::Crop, "CROP"},
        {ActionType::Add, "ADD"},
        {ActionType::Replace, "REPLACE"},
        {ActionType::Apply, "APPLY"},
        {ActionType::Zoom, "ZOOM"},
        {ActionType::Rotate, "ROTATE"},
        {ActionType::Transform, "TRANSFORM"},
        {ActionType::Move, "MOVE"},
        {ActionType::Clone, "CLONE"},
        {ActionType::Select, "SELECT"},
        {ActionType::Swap, "SWAP"},
        {ActionType::Undo, "UNDO"},
        {ActionType::Merge, "MERGE"},
        {ActionType::Redo, "REDO"},
        {ActionType::Other, "OTHER"},
        {ActionType::Scroll, "SCROLL"},
    }};

constexpr std::array<std::pair<EntityLabel, std::string_view>, kNumEntityLabels>
    kEntityNames{{
        {EntityLabel::Attribute, "ATTRIBUTE"},
        {EntityLabel::Value, "VALUE"},
        {EntityLabel::Object, "OBJECT"},
        {EntityLabel::Location, "LOCATION"},
        {EntityLabel::Intent, "INTENT"},
    }};

// MODIFIER-ACTION is treated as a misspelling of MODIFIER-VALUE.
constexpr std::array<std::pair<std::string_view, EntityLabel>, 7> kAliases{{
    {"REGION", EntityLabel::Location},
    {"MODIFIER-VALUE", EntityLabel::Value},
    {"MODIFIER/VALUE", EntityLabel::Value},
    {"MODIFIER", EntityLabel::Value},
    {"MODIFIER-ACTION", EntityLabel::Value},
    {"MODIFIER/ACTION", EntityLabel::Value},
    {"INTENTION", EntityLabel::Intent},
}};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::toupper(static_cast<unsigned char>(x)) ==
                  std::toupper(static_cast<unsigned char>(y));
         });
}

void collect_spans(const AnnNode& node, std::vector<Span>& out) {
  if (node.kind == NodeKind::Word) return;
  if (node.kind == NodeKind::Entity)
    out.push_back({node.entity, node.first_token(), node.last_token_end()});
  for (const auto& c : node.children) collect_spans(c, out);
}

bool nested_below(const AnnNode& node, bool inside_entity) {
  if (node.kind == NodeKind::Word) return false;
  if (node.kind == NodeKind::Entity) {
    if (inside_entity) return true;
    inside_entity = true;
  }
  return std::any_of(node.children.begin(), node.children.end(),
                     [&](const AnnNode& c) { return nested_below(c, inside_entity); });
}

}  // namespace

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::Malformed: return "Malformed";
    case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::UnknownTag: return "UnknownTag";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyAfterFilter: return "EmptyAfterFilter";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Undefined: return "Undefined";
    case ErrorCode::Decode: return "DecodeError";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IncompatibleModel: return "IncompatibleModel";
  }
  return "Unknown";
}

const std::array<ActionType, kNumActions>& all_actions() {
  static const auto values = [] {
    std::array<ActionType, kNumActions> out{};
    for (std::size_t i = 0; i < kNumActions; ++i) out[i] = kActionNames[i].first;
    return out;
  }();
  return values;
}

const std::array<EntityLabel, kNumEntityLabels>& all_entity_labels() {
  static const auto values = [] {
    std::array<EntityLabel, kNumEntityLabels> out{};
    for (std::size_t i = 0; i < kNumEntityLabels; ++i) out[i] = kEntityNames[i].first;
    return out;
  }();
  return values;
}

std::string_view action_name(ActionType a) {
  return kActionNames[static_cast<std::size_t>(a)].second;
}

std::string_view entity_name(EntityLabel e) {
  return kEntityNames[static_cast<std::size_t>(e)].second;
}

std::optional<ActionType> try_parse_action(std::string_view raw) {
  for (const auto& [value, name] : kActionNames)
    if (iequals(raw, name)) return value;
  return std::nullopt;
}

std::optional<EntityLabel> try_canonicalize_label(std::string_view raw) {
  for (const auto& [value, name] : kEntityNames)
    if (iequals(raw, name)) return value;
  for (const auto& [alias, value] : kAliases)
    if (iequals(raw, alias)) return value;
  return std::nullopt;
}

ActionType parse_action(std::string_view raw) {
  if (auto a = try_parse_action(raw)) return *a;
  throw Error(ErrorCode::UnknownLabel, "unknown action: '" + std::string(raw) + "'");
}

EntityLabel canonicalize_label(std::string_view raw) {
  if (auto e = try_canonicalize_label(raw)) return *e;
  throw Error(ErrorCode::UnknownLabel, "unknown entity label: '" + std::string(raw) + "'");
}

AnnNode AnnNode::word(std::size_t token_index) {
  AnnNode n;
  n.kind = NodeKind::Word;
  n.token = token_index;
  return n;
}

AnnNode AnnNode::ier(std::vector<AnnNode> children) {
  AnnNode n;
  n.kind = NodeKind::Ier;
  n.children = std::move(children);
  return n;
}

AnnNode AnnNode::action_node(ActionType a, std::vector<AnnNode> children) {
  AnnNode n;
  n.kind = NodeKind::Action;
  n.action = a;
  n.children = std::move(children);
  return n;
}

AnnNode AnnNode::entity_node(EntityLabel e, std::vector<AnnNode> children) {
  AnnNode n;
  n.kind = NodeKind::Entity;
  n.entity = e;
  n.children = std::move(children);
  return n;
}

std::size_t AnnNode::first_token() const {
  const AnnNode* n = this;
  while (n->kind != NodeKind::Word) n = &n->children.front();
  return n->token;
}

std::size_t AnnNode::last_token_end() const {
  const AnnNode* n = this;
  while (n->kind != NodeKind::Word) n = &n->children.back();
  return n->token + 1;
}

bool AnnNode::operator==(const AnnNode& other) const {
  if (kind != other.kind) return false;
  switch (kind) {
    case NodeKind::Word: return token == other.token;
    case NodeKind::Action:
      if (action != other.action) return false;
      break;
    case NodeKind::Entity:
      if (entity != other.entity) return false;
      break;
    case NodeKind::Ier: break;
  }
  return children == other.children;
}

std::optional<ActionType> AnnotatedUtterance::action() const {
  if (!root) return std::nullopt;
  for (const auto& c : root->children)
    if (c.kind == NodeKind::Action) return c.action;
  return std::nullopt;
}

std::vector<Span> AnnotatedUtterance::entity_spans() const {
  std::vector<Span> out;
  if (root) collect_spans(*root, out);
  return out;
}

bool AnnotatedUtterance::has_nested_entities() const {
  return root && nested_below(*root, false);
}

std::vector<Token> make_tokens(const std::vector<std::string>& words) {
  std::vector<Token> out;
  out.reserve(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) out.push_back({words[i], i});
  return out;
}

std::string BioTag::str() const {
  switch (kind) {
    case BioKind::O: return "O";
    case BioKind::B: return "B-" + label;
    case BioKind::I: return "I-" + label;
  }
  return "O";
}

BioTag BioTag::parse(std::string_view text) {
  if (text == "O") return outside();
  if (text.size() > 2 && text[1] == '-') {
    if (text[0] == 'B') return begin(std::string(text.substr(2)));
    if (text[0] == 'I') return inside(std::string(text.substr(2)));
  }
  throw Error(ErrorCode::UnknownTag, "not a BIO tag: '" + std::string(text) + "'");
}

std::string to_string(const BioSequence& seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ' ';
    out += seq[i].str();
  }
  return out;
}

}  // namespace ier
