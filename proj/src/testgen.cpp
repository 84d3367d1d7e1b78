#include "cseval/testgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace cseval::testgen {

namespace {

using Kind = TypeDescriptor::Kind;

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::integer: return "integer";
    case Kind::real: return "real";
    case Kind::string: return "string";
    case Kind::boolean: return "boolean";
    case Kind::sequence: return "sequence";
    case Kind::tuple: return "tuple";
    case Kind::map: return "map";
    case Kind::union_: return "union";
  }
  return "?";
}

}  // namespace

bool TypeDescriptor::matches(const json& value) const {
  switch (kind) {
    case Kind::integer:
      return value.is_number_integer() && !value.is_boolean();
    case Kind::real:
      return value.is_number_float();
    case Kind::string:
      return value.is_string();
    case Kind::boolean:
      return value.is_boolean();
    case Kind::sequence:
      if (!value.is_array()) return false;
      if (params.empty()) return value.empty();
      for (const auto& e : value)
        if (!params[0].matches(e)) return false;
      return true;
    case Kind::tuple:
      if (!value.is_array() || value.size() != params.size()) return false;
      for (size_t i = 0; i < params.size(); ++i)
        if (!params[i].matches(value[i])) return false;
      return true;
    case Kind::map:
      if (!value.is_object()) return false;
      if (params.empty()) return value.empty();
      for (const auto& [k, v] : value.items())
        if (!params[0].matches(v)) return false;
      return true;
    case Kind::union_:
      for (const auto& m : params)
        if (m.matches(value)) return true;
      return false;
  }
  return false;
}

std::string TypeDescriptor::describe() const {
  std::ostringstream ss;
  ss << kind_name(kind);
  if (!params.empty()) {
    ss << '(';
    for (size_t i = 0; i < params.size(); ++i) {
      if (i) ss << ',';
      ss << params[i].describe();
    }
    ss << ')';
  }
  if (observed_range)
    ss << "[" << observed_range->first << ".." << observed_range->second << "]";
  if (observed_lengths)
    ss << "{len " << observed_lengths->first << ".." << observed_lengths->second << "}";
  return ss.str();
}

namespace {

void merge_range(std::optional<std::pair<double, double>>& into,
                 const std::optional<std::pair<double, double>>& from) {
  if (!from) return;
  if (!into) {
    into = from;
    return;
  }
  into->first = std::min(into->first, from->first);
  into->second = std::max(into->second, from->second);
}

void merge_lengths(std::optional<std::pair<size_t, size_t>>& into,
                   const std::optional<std::pair<size_t, size_t>>& from) {
  if (!from) return;
  if (!into) {
    into = from;
    return;
  }
  into->first = std::min(into->first, from->first);
  into->second = std::max(into->second, from->second);
}

TypeDescriptor unify(const TypeDescriptor& a, const TypeDescriptor& b);

TypeDescriptor unify_into_union(const TypeDescriptor& a, const TypeDescriptor& b) {
  TypeDescriptor u;
  u.kind = Kind::union_;
  auto add_member = [&](const TypeDescriptor& m) {
    for (auto& existing : u.params) {
      if (existing.kind == m.kind &&
          (m.kind != Kind::tuple || existing.params.size() == m.params.size())) {
        existing = unify(existing, m);
        return;
      }
    }
    u.params.push_back(m);
  };
  if (a.kind == Kind::union_)
    for (const auto& m : a.params) add_member(m);
  else
    add_member(a);
  if (b.kind == Kind::union_)
    for (const auto& m : b.params) add_member(m);
  else
    add_member(b);
  if (u.params.size() == 1) return u.params[0];
  return u;
}

TypeDescriptor unify(const TypeDescriptor& a, const TypeDescriptor& b) {
  if (a.kind == Kind::union_ || b.kind == Kind::union_) return unify_into_union(a, b);
  if (a.kind != b.kind) return unify_into_union(a, b);
  TypeDescriptor out = a;
  switch (a.kind) {
    case Kind::integer:
    case Kind::real:
      merge_range(out.observed_range, b.observed_range);
      return out;
    case Kind::string:
      merge_lengths(out.observed_lengths, b.observed_lengths);
      return out;
    case Kind::boolean:
      return out;
    case Kind::sequence:
      merge_lengths(out.observed_lengths, b.observed_lengths);
      if (out.params.empty())
        out.params = b.params;
      else if (!b.params.empty())
        out.params[0] = unify(out.params[0], b.params[0]);
      return out;
    case Kind::tuple:
      if (a.params.size() != b.params.size()) return unify_into_union(a, b);
      for (size_t i = 0; i < out.params.size(); ++i)
        out.params[i] = unify(out.params[i], b.params[i]);
      return out;
    case Kind::map:
      if (out.params.empty())
        out.params = b.params;
      else if (!b.params.empty())
        out.params[0] = unify(out.params[0], b.params[0]);
      return out;
    case Kind::union_:
      break;
  }
  return unify_into_union(a, b);
}

TypeDescriptor infer_one(const json& value) {
  TypeDescriptor d;
  if (value.is_boolean()) {
    d.kind = Kind::boolean;
    return d;
  }
  if (value.is_number_integer()) {
    d.kind = Kind::integer;
    double v = value.get<double>();
    d.observed_range = {v, v};
    return d;
  }
  if (value.is_number_float()) {
    d.kind = Kind::real;
    double v = value.get<double>();
    d.observed_range = {v, v};
    return d;
  }
  if (value.is_string()) {
    d.kind = Kind::string;
    size_t len = value.get<std::string>().size();
    d.observed_lengths = {len, len};
    return d;
  }
  if (value.is_array()) {
    d.kind = Kind::sequence;
    d.observed_lengths = {value.size(), value.size()};
    for (const auto& e : value) {
      TypeDescriptor ed = infer_one(e);
      if (d.params.empty())
        d.params.push_back(ed);
      else
        d.params[0] = unify(d.params[0], ed);
    }
    return d;
  }
  if (value.is_object()) {
    d.kind = Kind::map;
    for (const auto& [k, v] : value.items()) {
      TypeDescriptor vd = infer_one(v);
      if (d.params.empty())
        d.params.push_back(vd);
      else
        d.params[0] = unify(d.params[0], vd);
    }
    return d;
  }
  if (value.is_null())
    throw ValidationError("cannot infer a type from null example: " + value.dump());
  throw ValidationError("unsupported value shape in example: " + value.dump());
}

}  // namespace

TypeDescriptor infer_input_type(const std::vector<json>& examples) {
  if (examples.empty()) throw UsageError("infer_input_type needs at least one example");
  TypeDescriptor out = infer_one(examples[0]);
  for (size_t i = 1; i < examples.size(); ++i) out = unify(out, infer_one(examples[i]));
  return out;
}

TypeDescriptor infer_call_args_type(const std::vector<json>& args_examples) {
  if (args_examples.empty()) throw UsageError("infer_call_args_type needs at least one example");
  size_t arity = args_examples[0].size();
  for (const auto& a : args_examples) {
    if (!a.is_array())
      throw ValidationError("call args example is not a sequence: " + a.dump());
    if (a.size() != arity)
      throw ValidationError("call args arity differs across examples: " + a.dump());
  }
  TypeDescriptor out;
  out.kind = Kind::tuple;
  for (size_t slot = 0; slot < arity; ++slot) {
    std::vector<json> column;
    for (const auto& a : args_examples) column.push_back(a[slot]);
    out.params.push_back(infer_input_type(column));
  }
  return out;
}

void GenerationBudget::validate() const {
  if (target_count <= 0) throw ValidationError("generation budget target_count must be > 0");
  if (max_attempts < target_count)
    throw ValidationError("generation budget max_attempts must be >= target_count");
  if (w_boundary < 0 || w_random < 0 || w_mutation < 0)
    throw ValidationError("strategy weights must be non-negative");
  if (w_boundary + w_random + w_mutation <= 0)
    throw ValidationError("strategy weights must have a positive sum");
}

namespace {

using Rng = std::mt19937_64;

long long rand_int_in(Rng& rng, long long lo, long long hi) {
  if (lo > hi) std::swap(lo, hi);
  std::uniform_int_distribution<long long> dist(lo, hi);
  return dist(rng);
}

double rand_real_in(Rng& rng, double lo, double hi) {
  if (lo > hi) std::swap(lo, hi);
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(rng);
}

const char kCharPool[] = "abcdefghijklmnopqrstuvwxyz0123456789 ";

std::vector<json> boundary_values(const TypeDescriptor& d);

void append_singleton_boundaries(const TypeDescriptor& elem, std::vector<json>& out) {
  auto elems = boundary_values(elem);
  size_t cap = std::min<size_t>(elems.size(), 5);
  for (size_t i = 0; i < cap; ++i) out.push_back(json::array({elems[i]}));
}

std::vector<json> boundary_values(const TypeDescriptor& d) {
  std::vector<json> out;
  switch (d.kind) {
    case Kind::integer: {
      std::vector<long long> vals{0, 1, -1};
      if (d.observed_range) {
        long long lo = static_cast<long long>(std::llround(d.observed_range->first));
        long long hi = static_cast<long long>(std::llround(d.observed_range->second));
        vals.insert(vals.end(), {lo, hi, lo - 1, hi + 1});
      }
      for (long long v : vals) out.push_back(v);
      break;
    }
    case Kind::real: {
      std::vector<double> vals{0.0, 1.0, -1.0};
      if (d.observed_range) {
        double lo = d.observed_range->first, hi = d.observed_range->second;
        vals.insert(vals.end(), {lo, hi, lo - 1.0, hi + 1.0});
      }
      for (double v : vals) out.push_back(v);
      break;
    }
    case Kind::boolean:
      out.push_back(false);
      out.push_back(true);
      break;
    case Kind::string: {
      out.push_back("");
      out.push_back("a");
      if (d.observed_lengths && d.observed_lengths->second > 1)
        out.push_back(std::string(d.observed_lengths->second, 'a'));
      break;
    }
    case Kind::sequence:
      out.push_back(json::array());
      if (!d.params.empty()) append_singleton_boundaries(d.params[0], out);
      break;
    case Kind::tuple: {
      std::vector<std::vector<json>> slot_bounds;
      for (const auto& p : d.params) slot_bounds.push_back(boundary_values(p));
      json base = json::array();
      for (const auto& sb : slot_bounds) base.push_back(sb.empty() ? json() : sb[0]);
      out.push_back(base);
      for (size_t slot = 0; slot < slot_bounds.size(); ++slot) {
        for (const auto& v : slot_bounds[slot]) {
          json tup = base;
          tup[slot] = v;
          out.push_back(tup);
        }
      }
      break;
    }
    case Kind::map: {
      out.push_back(json::object());
      if (!d.params.empty()) {
        auto elems = boundary_values(d.params[0]);
        if (!elems.empty()) out.push_back(json{{"k", elems[0]}});
      }
      break;
    }
    case Kind::union_:
      for (const auto& m : d.params) {
        auto sub = boundary_values(m);
        out.insert(out.end(), sub.begin(), sub.end());
      }
      break;
  }
  return out;
}

json random_value(const TypeDescriptor& d, Rng& rng, int depth = 0) {
  switch (d.kind) {
    case Kind::integer: {
      long long lo = -100, hi = 100;
      if (d.observed_range) {
        double span = std::max(1.0, d.observed_range->second - d.observed_range->first);
        double center = (d.observed_range->first + d.observed_range->second) / 2.0;
        lo = static_cast<long long>(std::floor(center - 2.0 * span));
        hi = static_cast<long long>(std::ceil(center + 2.0 * span));
      }
      return rand_int_in(rng, lo, hi);
    }
    case Kind::real: {
      double lo = -100.0, hi = 100.0;
      if (d.observed_range) {
        double span = std::max(1.0, d.observed_range->second - d.observed_range->first);
        double center = (d.observed_range->first + d.observed_range->second) / 2.0;
        lo = center - 2.0 * span;
        hi = center + 2.0 * span;
      }
      return rand_real_in(rng, lo, hi);
    }
    case Kind::boolean:
      return rand_int_in(rng, 0, 1) == 1;
    case Kind::string: {
      size_t max_len = 12;
      if (d.observed_lengths) max_len = std::min<size_t>(64, d.observed_lengths->second * 4 + 1);
      size_t len = static_cast<size_t>(rand_int_in(rng, 0, static_cast<long long>(max_len)));
      std::string s;
      for (size_t i = 0; i < len; ++i)
        s += kCharPool[rand_int_in(rng, 0, sizeof(kCharPool) - 2)];
      return s;
    }
    case Kind::sequence: {
      if (d.params.empty() || depth > 4) return json::array();
      size_t max_len = 8;
      if (d.observed_lengths) max_len = std::min<size_t>(16, d.observed_lengths->second * 4 + 1);
      size_t len = static_cast<size_t>(rand_int_in(rng, 0, static_cast<long long>(max_len)));
      json arr = json::array();
      for (size_t i = 0; i < len; ++i) arr.push_back(random_value(d.params[0], rng, depth + 1));
      return arr;
    }
    case Kind::tuple: {
      json arr = json::array();
      for (const auto& p : d.params) arr.push_back(random_value(p, rng, depth + 1));
      return arr;
    }
    case Kind::map: {
      json obj = json::object();
      if (d.params.empty() || depth > 4) return obj;
      size_t len = static_cast<size_t>(rand_int_in(rng, 0, 4));
      for (size_t i = 0; i < len; ++i)
        obj["k" + std::to_string(i)] = random_value(d.params[0], rng, depth + 1);
      return obj;
    }
    case Kind::union_: {
      size_t pick = static_cast<size_t>(
          rand_int_in(rng, 0, static_cast<long long>(d.params.size()) - 1));
      return random_value(d.params[pick], rng, depth + 1);
    }
  }
  return json();
}

json mutate_value(const json& v, Rng& rng) {
  if (v.is_boolean()) return !v.get<bool>();
  if (v.is_number_integer()) return v.get<long long>() + rand_int_in(rng, -4, 4);
  if (v.is_number_float()) return v.get<double>() + rand_real_in(rng, -2.0, 2.0);
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    char c = kCharPool[rand_int_in(rng, 0, sizeof(kCharPool) - 2)];
    switch (rand_int_in(rng, 0, 2)) {
      case 0:
        s.insert(s.begin() + rand_int_in(rng, 0, static_cast<long long>(s.size())), c);
        break;
      case 1:
        if (!s.empty()) s.erase(s.begin() + rand_int_in(rng, 0, static_cast<long long>(s.size()) - 1));
        else s += c;
        break;
      default:
        if (!s.empty()) s[static_cast<size_t>(rand_int_in(rng, 0, static_cast<long long>(s.size()) - 1))] = c;
        else s += c;
        break;
    }
    return s;
  }
  if (v.is_array()) {
    json arr = v;
    if (arr.empty()) return arr;
    long long idx = rand_int_in(rng, 0, static_cast<long long>(arr.size()) - 1);
    switch (rand_int_in(rng, 0, 2)) {
      case 0:
        arr[static_cast<size_t>(idx)] = mutate_value(arr[static_cast<size_t>(idx)], rng);
        break;
      case 1:
        arr.erase(arr.begin() + idx);
        break;
      default:
        arr.insert(arr.begin() + idx, mutate_value(arr[static_cast<size_t>(idx)], rng));
        break;
    }
    return arr;
  }
  if (v.is_object()) {
    json obj = v;
    if (obj.empty()) return obj;
    long long pick = rand_int_in(rng, 0, static_cast<long long>(obj.size()) - 1);
    long long i = 0;
    for (auto& [k, val] : obj.items()) {
      if (i++ == pick) {
        val = mutate_value(val, rng);
        break;
      }
    }
    return obj;
  }
  return v;
}

}  // namespace

EnumerationResult enumerate_inputs(const TypeDescriptor& desc, const GenerationBudget& budget,
                                   const std::vector<json>& originals) {
  budget.validate();
  Rng rng(budget.seed);
  EnumerationResult result;
  std::set<std::string> seen;
  int attempts = 0;
  auto try_add = [&](const json& v) {
    ++attempts;
    if (!desc.matches(v)) return;
    std::string key = v.dump();
    if (seen.insert(key).second) result.inputs.push_back(v);
  };

  if (budget.w_boundary > 0) {
    for (const auto& v : boundary_values(desc)) {
      if (static_cast<int>(result.inputs.size()) >= budget.target_count) break;
      if (attempts >= budget.max_attempts) break;
      try_add(v);
    }
  }

  double w_rand = budget.w_random;
  double w_mut = originals.empty() ? 0.0 : budget.w_mutation;
  while (w_rand + w_mut > 0 &&
         static_cast<int>(result.inputs.size()) < budget.target_count &&
         attempts < budget.max_attempts) {
    double p = rand_real_in(rng, 0.0, w_rand + w_mut);
    if (p < w_rand || originals.empty()) {
      try_add(random_value(desc, rng));
    } else {
      const json& base =
          originals[static_cast<size_t>(rand_int_in(rng, 0, static_cast<long long>(originals.size()) - 1))];
      try_add(mutate_value(base, rng));
    }
  }
  result.shortfall =
      std::max(0, budget.target_count - static_cast<int>(result.inputs.size()));
  return result;
}

std::string render_stdio_input(const json& value) {
  std::ostringstream out;
  if (value.is_string()) {
    std::string s = value.get<std::string>();
    out << s;
    if (s.empty() || s.back() != '\n') out << '\n';
    return out.str();
  }
  if (value.is_number_integer()) {
    out << value.get<long long>() << '\n';
    return out.str();
  }
  if (value.is_number_float()) {
    out << format_double(value.get<double>()) << '\n';
    return out.str();
  }
  if (value.is_array()) {
    bool rows = !value.empty() && value[0].is_array();
    if (!rows) {
      for (size_t i = 0; i < value.size(); ++i) {
        if (i) out << ' ';
        out << value[i].get<long long>();
      }
      out << '\n';
      return out.str();
    }
    for (const auto& row : value) {
      for (size_t i = 0; i < row.size(); ++i) {
        if (i) out << ' ';
        out << row[i].get<long long>();
      }
      out << '\n';
    }
    return out.str();
  }
  throw ValidationError("cannot render value as stdio input: " + value.dump());
}

json parse_stdio_input(const std::string& input) {
  auto trim = [](const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return std::string();
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  };
  std::string t = trim(input);
  auto parse_ll = [](const std::string& s, long long& out) {
    if (s.empty()) return false;
    size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i >= s.size()) return false;
    for (size_t j = i; j < s.size(); ++j)
      if (!std::isdigit(static_cast<unsigned char>(s[j]))) return false;
    try {
      out = std::stoll(s);
    } catch (...) {
      return false;
    }
    return true;
  };
  long long iv;
  if (parse_ll(t, iv)) return iv;
  try {
    size_t used = 0;
    double dv = std::stod(t, &used);
    if (used == t.size() && !t.empty()) return dv;
  } catch (...) {
  }
  // lines of integers: single line -> flat row, several lines -> rows
  std::vector<std::vector<long long>> rows;
  bool all_ints = !t.empty();
  for (const auto& raw_line : split_lines(t)) {
    std::istringstream ss(raw_line);
    std::vector<long long> row;
    std::string tok;
    while (ss >> tok) {
      long long v;
      if (!parse_ll(tok, v)) {
        all_ints = false;
        break;
      }
      row.push_back(v);
    }
    if (!all_ints) break;
    rows.push_back(std::move(row));
  }
  if (all_ints && !rows.empty()) {
    if (rows.size() == 1) {
      json arr = json::array();
      for (long long v : rows[0]) arr.push_back(v);
      return arr;
    }
    json outer = json::array();
    for (const auto& row : rows) {
      json arr = json::array();
      for (long long v : row) arr.push_back(v);
      outer.push_back(arr);
    }
    return outer;
  }
  std::string s = input;
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

std::vector<corpus::TestCase> oracle_outputs(const std::string& ref_code, corpus::CaseMode mode,
                                             const std::string& entry_point,
                                             const std::vector<json>& inputs,
                                             const sandbox::ExecutionLimits& limits,
                                             const sandbox::Toolchain& toolchain, int jobs,
                                             OracleStats* stats) {
  std::vector<std::optional<corpus::TestCase>> slots(inputs.size());
  sandbox::parallel_for(inputs.size(), jobs, [&](size_t i) {
    corpus::TestCase tc;
    tc.mode = mode;
    tc.origin = corpus::CaseOrigin::extended;
    if (mode == corpus::CaseMode::stdio) {
      tc.input = render_stdio_input(inputs[i]);
      auto run = sandbox::run_reference(ref_code, mode, tc.input, "", json(), limits, toolchain);
      if (!run.ok) return;
      tc.expected = run.stdout_text;
    } else {
      tc.entry_point = entry_point;
      tc.args = inputs[i];
      auto run = sandbox::run_reference(ref_code, mode, "", entry_point, tc.args, limits,
                                        toolchain);
      if (!run.ok) return;
      tc.expected = run.result;
    }
    slots[i] = std::move(tc);
  });
  std::vector<corpus::TestCase> out;
  int dropped = 0;
  for (auto& slot : slots) {
    if (slot)
      out.push_back(std::move(*slot));
    else
      ++dropped;
  }
  if (stats) stats->dropped = dropped;
  return out;
}

corpus::TaskRecord extend_task(const corpus::TaskRecord& task, const GenerationBudget& budget,
                               const sandbox::ExecutionLimits& limits,
                               const sandbox::ToolchainTable& toolchains, int jobs) {
  budget.validate();
  if (task.test_cases.empty())
    throw ValidationError("extend_task: task \"" + task.task_id + "\" has no original cases");
  if (task.ref_codes.empty())
    throw ValidationError("extend_task: task \"" + task.task_id + "\" has no reference code");
  const sandbox::Toolchain& toolchain = toolchains.lookup(task.language_tag);

  corpus::CaseMode mode = task.test_cases.front().mode;
  for (const auto& tc : task.test_cases)
    if (tc.mode != mode)
      throw ValidationError("extend_task: task \"" + task.task_id + "\" mixes case modes");
  std::string entry_point =
      mode == corpus::CaseMode::call ? task.test_cases.front().entry_point : "";

  // sanity gate: a usable oracle must pass every original case
  std::vector<const std::string*> gated;
  for (const auto& ref : task.ref_codes) {
    auto truth = sandbox::evaluate_candidate(ref, task.test_cases, limits, toolchain);
    if (truth.pass_ratio == 1.0) gated.push_back(&ref);
  }
  if (gated.empty())
    throw ValidationError("extend_task: no reference code passes the original cases of task \"" +
                          task.task_id + "\"");

  std::vector<json> original_values;
  std::set<std::string> original_keys;
  for (const auto& tc : task.test_cases) {
    json v = mode == corpus::CaseMode::stdio ? parse_stdio_input(tc.input) : json(tc.args);
    original_keys.insert(v.dump());
    original_values.push_back(std::move(v));
  }

  TypeDescriptor desc = mode == corpus::CaseMode::stdio
                            ? infer_input_type(original_values)
                            : infer_call_args_type(original_values);

  EnumerationResult enumerated = enumerate_inputs(desc, budget, original_values);
  std::vector<json> fresh;
  for (auto& v : enumerated.inputs)
    if (!original_keys.count(v.dump())) fresh.push_back(std::move(v));

  std::vector<corpus::TestCase> extended =
      oracle_outputs(*gated[0], mode, entry_point, fresh, limits, toolchain, jobs);

  // cross-check against the other gated references; disagreement drops the case
  for (size_t g = 1; g < gated.size() && !extended.empty(); ++g) {
    std::vector<char> keep(extended.size(), 0);
    sandbox::parallel_for(extended.size(), jobs, [&](size_t i) {
      const auto& tc = extended[i];
      auto run = sandbox::run_reference(*gated[g], mode, tc.input, entry_point, tc.args, limits,
                                        toolchain);
      if (!run.ok) return;
      bool agree = mode == corpus::CaseMode::stdio
                       ? sandbox::compare_output(run.stdout_text, tc.expected.get<std::string>())
                       : sandbox::compare_values(run.result, tc.expected);
      keep[i] = agree ? 1 : 0;
    });
    std::vector<corpus::TestCase> filtered;
    for (size_t i = 0; i < extended.size(); ++i)
      if (keep[i]) filtered.push_back(std::move(extended[i]));
    extended = std::move(filtered);
  }

  corpus::TaskRecord out = task;
  for (auto& tc : extended) out.test_cases.push_back(std::move(tc));
  return out;
}

}  // namespace cseval::testgen
