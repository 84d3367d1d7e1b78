#pragma once

#include <compare>
#include <vector>

#include "cseval/pyast.hpp"

namespace cseval::dataflow {

// One def-use relation. Variables are abstracted to indices assigned by
// order of first appearance, so structurally identical programs produce
// identical edge sets regardless of naming. Positions are occurrence
// indices over all identifier leaves in source order.
struct DefUseEdge {
  int var = 0;
  int def_pos = 0;
  int use_pos = 0;
  auto operator<=>(const DefUseEdge&) const = default;
};

struct Extraction {
  std::vector<DefUseEdge> edges;  // sorted, deduplicated
  int occurrence_count = 0;
};

// Flat-scope reaching definitions: branches merge by union, loop bodies are
// walked twice so back edges appear, subscript/attribute targets read their
// components without redefining anything.
Extraction extract_def_use(const pyast::Node& module);

}  // namespace cseval::dataflow
