#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cseval::pyast {

// Labeled ordered tree. Identifier leaves carry the source name in `text`
// and all share the label "id", so trees compare equal up to renaming.
struct Node {
  std::string label;
  std::vector<Node> children;
  bool identifier = false;
  std::string text;

  bool leaf() const { return children.empty(); }
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parses the Python subset used by the evaluation corpora. Throws ParseError
// on anything outside the subset or on malformed input.
Node parse_python(const std::string& source);

size_t count_nodes(const Node& n);
size_t count_nonleaf_subtrees(const Node& n);

// Canonical serialization, e.g. "assign(id,binop:+(id,num:1))".
std::string serialize(const Node& n);

bool structurally_equal(const Node& a, const Node& b);

}  // namespace cseval::pyast
