#pragma once

#include <cstddef>
#include <vector>

#include "ier/vocab.hpp"

namespace ier {

/// One tag per token from the deepest enclosing entity. ACTION and IER nodes
/// are transparent. A B tag opens at every change of label, so a nested
/// entity splits its parent's run ("a warmer hue" -> O O B-VALUE B-ATTRIBUTE).
BioSequence encode_innermost(const AnnotatedUtterance& utt);

/// Like encode_innermost but the label of a token joins all enclosing entity
/// labels outermost-first with '|', keeping only the innermost max_depth.
BioSequence encode_nested(const AnnotatedUtterance& utt, std::size_t max_depth = 2);

/// Collapses B/I runs into spans. An I that does not continue a run with the
/// same label opens a new span. Composite labels decode to their innermost
/// component; labels that are not entity labels are treated as O.
std::vector<Span> decode(const BioSequence& bio);

}  // namespace ier
