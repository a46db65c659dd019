#include "ier/bio.hpp"

#include <string>

#include "ier/error.hpp"

namespace ier {

namespace {

// Entity labels enclosing each token, outermost first.
void collect_stacks(const AnnNode& node, std::vector<EntityLabel>& path,
                    std::vector<std::vector<EntityLabel>>& out) {
  if (node.kind == NodeKind::Word) {
    out[node.token] = path;
    return;
  }
  const bool entity = node.kind == NodeKind::Entity;
  if (entity) path.push_back(node.entity);
  for (const auto& c : node.children) collect_stacks(c, path, out);
  if (entity) path.pop_back();
}

BioSequence runs_to_bio(const std::vector<std::string>& labels) {
  BioSequence out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].empty())
      out.push_back(BioTag::outside());
    else if (i > 0 && labels[i - 1] == labels[i])
      out.push_back(BioTag::inside(labels[i]));
    else
      out.push_back(BioTag::begin(labels[i]));
  }
  return out;
}

std::vector<std::string> token_labels(const AnnotatedUtterance& utt, std::size_t max_depth) {
  std::vector<std::vector<EntityLabel>> stacks(utt.tokens.size());
  if (utt.root) {
    std::vector<EntityLabel> path;
    collect_stacks(*utt.root, path, stacks);
  }
  std::vector<std::string> labels(utt.tokens.size());
  for (std::size_t i = 0; i < stacks.size(); ++i) {
    const auto& s = stacks[i];
    const std::size_t from = s.size() > max_depth ? s.size() - max_depth : 0;
    for (std::size_t k = from; k < s.size(); ++k) {
      if (!labels[i].empty()) labels[i] += '|';
      labels[i] += entity_name(s[k]);
    }
  }
  return labels;
}

}  // namespace

BioSequence encode_innermost(const AnnotatedUtterance& utt) {
  return runs_to_bio(token_labels(utt, 1));
}

BioSequence encode_nested(const AnnotatedUtterance& utt, std::size_t max_depth) {
  if (max_depth < 1) throw Error(ErrorCode::InvalidArgument, "max_depth must be >= 1");
  return runs_to_bio(token_labels(utt, max_depth));
}

std::vector<Span> decode(const BioSequence& bio) {
  std::vector<Span> spans;
  const std::string* open_label = nullptr;  // label of the run being extended
  bool open_valid = false;                   // run maps to an entity span
  for (std::size_t i = 0; i < bio.size(); ++i) {
    const BioTag& tag = bio[i];
    if (tag.kind == BioKind::O) {
      open_label = nullptr;
      continue;
    }
    if (tag.kind == BioKind::I && open_label && *open_label == tag.label) {
      if (open_valid) spans.back().end = i + 1;
      continue;
    }
    open_label = &tag.label;
    const auto bar = tag.label.rfind('|');
    const auto innermost =
        bar == std::string::npos ? std::string_view(tag.label)
                                 : std::string_view(tag.label).substr(bar + 1);
    const auto label = try_canonicalize_label(innermost);
    open_valid = label.has_value();
    if (open_valid) spans.push_back({*label, i, i + 1});
  }
  return spans;
}

}  // namespace ier
