#include "cseval/dataflow.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <unordered_map>

namespace cseval::dataflow {

namespace {

using pyast::Node;

class Extractor {
 public:
  Extraction run(const Node& module) {
    number_occurrences(module);
    Env env;
    for (const auto& stmt : module.children) walk_stmt(stmt, env);
    Extraction out;
    out.edges.assign(edges_.begin(), edges_.end());
    out.occurrence_count = counter_;
    return out;
  }

 private:
  using Env = std::map<std::string, std::set<int>>;

  void number_occurrences(const Node& n) {
    if (n.identifier) {
      occ_[&n] = counter_++;
      if (!var_ids_.count(n.text)) {
        int id = static_cast<int>(var_ids_.size());
        var_ids_[n.text] = id;
      }
      return;
    }
    for (const auto& c : n.children) number_occurrences(c);
  }

  int occ(const Node& n) const { return occ_.at(&n); }
  int var_id(const std::string& name) const { return var_ids_.at(name); }

  void add_use(const Node& id_node, const Env& env) {
    auto it = env.find(id_node.text);
    if (it == env.end()) return;  // parameter-less / builtin use
    for (int def_pos : it->second)
      edges_.insert({var_id(id_node.text), def_pos, occ(id_node)});
  }

  void define(const Node& id_node, Env& env) {
    env[id_node.text] = {occ(id_node)};
  }

  // Collects plain-name defs from a target subtree; subscript/attribute
  // bases and indices are uses evaluated against the pre-assignment env.
  void collect_target(const Node& t, const Env& env, std::vector<const Node*>& defs) {
    if (t.identifier) {
      defs.push_back(&t);
      return;
    }
    if (t.label == "tuple" || t.label == "list" || t.label == "star") {
      for (const auto& c : t.children) collect_target(c, env, defs);
      return;
    }
    if (t.label == "subscript" || t.label.rfind("attr:", 0) == 0) {
      walk_uses(t, env);
      return;
    }
    walk_uses(t, env);
  }

  void commit_defs(const std::vector<const Node*>& defs, Env& env) {
    for (const Node* d : defs) define(*d, env);
  }

  // Expression walk: every identifier leaf is a use, except where a nested
  // construct introduces bindings (walrus, lambda, comprehensions).
  void walk_uses(const Node& n, const Env& env_in) {
    Env env = env_in;  // local bindings from walrus etc. stay scoped here
    walk_uses_mut(n, env);
  }

  void walk_uses_mut(const Node& n, Env& env) {
    if (n.identifier) {
      add_use(n, env);
      return;
    }
    if (n.label == "named") {  // target := value
      std::vector<const Node*> defs;
      collect_target(n.children[0], env, defs);
      walk_uses_mut(n.children[1], env);
      commit_defs(defs, env);
      return;
    }
    if (n.label == "lambda") {
      Env inner = env;
      walk_params(n.children[0], inner, env);
      walk_uses_mut(n.children[1], inner);
      return;
    }
    if (n.label == "listcomp" || n.label == "setcomp" || n.label == "dictcomp" ||
        n.label == "genexp") {
      Env inner = env;
      for (size_t i = 1; i < n.children.size(); ++i) {
        const Node& clause = n.children[i];  // compfor
        walk_uses_mut(clause.children[1], inner);  // iterable
        std::vector<const Node*> defs;
        collect_target(clause.children[0], inner, defs);
        commit_defs(defs, inner);
        for (size_t j = 2; j < clause.children.size(); ++j)
          walk_uses_mut(clause.children[j], inner);  // compif
      }
      walk_uses_mut(n.children[0], inner);  // element
      return;
    }
    for (const auto& c : n.children) walk_uses_mut(c, env);
  }

  void walk_params(const Node& params, Env& inner, const Env& outer) {
    for (const auto& p : params.children) {
      for (const auto& c : p.children) {
        if (c.identifier)
          define(c, inner);
        else if (c.label == "default")
          walk_uses(c.children[0], outer);
      }
    }
  }

  void walk_block(const Node& block, Env& env) {
    for (const auto& stmt : block.children) walk_stmt(stmt, env);
  }

  void merge(Env& into, const Env& from) {
    for (const auto& [name, defs] : from) into[name].insert(defs.begin(), defs.end());
  }

  void walk_stmt(const Node& n, Env& env) {
    const std::string& label = n.label;
    if (label == "assign") {
      size_t value_idx = n.children.size() - 1;
      std::vector<const Node*> defs;
      for (size_t i = 0; i < value_idx; ++i) collect_target(n.children[i], env, defs);
      walk_uses_mut(n.children[value_idx], env);
      commit_defs(defs, env);
      return;
    }
    if (label.rfind("augassign:", 0) == 0) {
      const Node& target = n.children[0];
      walk_uses_mut(n.children[1], env);
      if (target.identifier) {
        add_use(target, env);  // read-modify-write
        define(target, env);
      } else {
        walk_uses(target, env);
      }
      return;
    }
    if (label == "exprstmt" || label == "return" || label == "raise" || label == "assert") {
      for (const auto& c : n.children) walk_uses_mut(c, env);
      return;
    }
    if (label == "del") {
      for (const auto& c : n.children) walk_uses_mut(c, env);
      // bindings named directly go away
      remove_bindings(n.children[0], env);
      return;
    }
    if (label == "if") {
      walk_uses_mut(n.children[0], env);
      Env then_env = env;
      walk_block(n.children[1], then_env);
      Env else_env = env;
      if (n.children.size() > 2) walk_block(n.children[2], else_env);
      env = std::move(then_env);
      merge(env, else_env);
      return;
    }
    if (label == "while") {
      Env pre = env;
      for (int pass = 0; pass < 2; ++pass) {
        walk_uses_mut(n.children[0], env);
        walk_block(n.children[1], env);
      }
      merge(env, pre);  // body may not run
      if (n.children.size() > 2) walk_block(n.children[2], env);
      return;
    }
    if (label == "for") {
      Env pre = env;
      for (int pass = 0; pass < 2; ++pass) {
        walk_uses_mut(n.children[1], env);
        std::vector<const Node*> defs;
        collect_target(n.children[0], env, defs);
        commit_defs(defs, env);
        walk_block(n.children[2], env);
      }
      merge(env, pre);
      if (n.children.size() > 3) walk_block(n.children[3], env);
      return;
    }
    if (label == "def") {
      define(n.children[0], env);
      Env inner = env;
      walk_params(n.children[1], inner, env);
      walk_block(n.children[2], inner);
      merge(env, inner);  // flat scope
      return;
    }
    if (label == "class") {
      define(n.children[0], env);
      for (size_t i = 1; i + 1 < n.children.size(); ++i) walk_uses(n.children[i], env);
      walk_block(n.children.back(), env);
      return;
    }
    if (label == "try") {
      for (const auto& part : n.children) {
        if (part.label == "block") {
          walk_block(part, env);
        } else if (part.label == "handler") {
          size_t i = 0;
          if (i < part.children.size() && part.children[i].label != "block" &&
              !part.children[i].identifier)
            walk_uses(part.children[i++], env);
          if (i < part.children.size() && part.children[i].identifier)
            define(part.children[i++], env);
          if (i < part.children.size()) walk_block(part.children[i], env);
        } else {  // try_else / finally
          walk_block(part.children[0], env);
        }
      }
      return;
    }
    if (label == "with") {
      for (size_t i = 0; i + 1 < n.children.size(); ++i) {
        const Node& item = n.children[i];
        walk_uses_mut(item.children[0], env);
        if (item.children.size() > 1) {
          std::vector<const Node*> defs;
          collect_target(item.children[1], env, defs);
          commit_defs(defs, env);
        }
      }
      walk_block(n.children.back(), env);
      return;
    }
    if (label == "import") {
      for (const auto& c : n.children)
        if (c.identifier) define(c, env);
      return;
    }
    if (label == "global" || label == "nonlocal") return;  // declarations only
    if (label == "stmts" || label == "block") {
      walk_block(n, env);
      return;
    }
    if (label == "pass" || label == "break" || label == "continue") return;
    // anything else: treat as an expression context
    for (const auto& c : n.children) walk_uses_mut(c, env);
  }

  void remove_bindings(const Node& t, Env& env) {
    if (t.identifier) {
      env.erase(t.text);
      return;
    }
    if (t.label == "tuple")
      for (const auto& c : t.children) remove_bindings(c, env);
  }

  std::unordered_map<const Node*, int> occ_;
  std::map<std::string, int> var_ids_;
  std::set<DefUseEdge> edges_;
  int counter_ = 0;
};

}  // namespace

Extraction extract_def_use(const pyast::Node& module) {
  return Extractor().run(module);
}

}  // namespace cseval::dataflow
