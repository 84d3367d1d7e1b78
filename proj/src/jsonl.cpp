#include "cseval/jsonl.hpp"

#include <cstdio>
#include <sstream>

namespace cseval::jsonl {

File read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InfraError("cannot open file: " + path.string());
  File out;
  std::string line;
  size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": malformed record: " + e.what());
    }
    if (!header_seen) {
      if (!rec.is_object() || !rec.contains("schema_version") ||
          !rec["schema_version"].is_number_integer())
        throw ValidationError(path.string() + ":1: missing {\"schema_version\": N} header line");
      out.schema_version = rec["schema_version"].get<int>();
      header_seen = true;
      continue;
    }
    out.records.push_back(std::move(rec));
  }
  if (!header_seen)
    throw ValidationError(path.string() + ": empty file, expected schema_version header");
  return out;
}

void write_atomic(const std::filesystem::path& path, int schema_version,
                  const std::vector<json>& records) {
  std::ostringstream body;
  body << json{{"schema_version", schema_version}}.dump() << '\n';
  for (const auto& rec : records) body << rec.dump() << '\n';
  write_text_file_atomic(path, body.str());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InfraError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InfraError("cannot write file: " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw InfraError("short write: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw InfraError("rename failed: " + tmp.string() + " -> " + path.string() +
                           ": " + ec.message());
}

}  // namespace cseval::jsonl
