#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cseval/common.hpp"
#include "json.hpp"

namespace cseval::jsonl {

using json = nlohmann::ordered_json;

struct File {
  int schema_version = 1;
  std::vector<json> records;
};

// Line-delimited records with a leading {"schema_version": N} line.
File read(const std::filesystem::path& path);

// Writes via a temporary file followed by rename, so readers never observe
// a partial file.
void write_atomic(const std::filesystem::path& path, int schema_version,
                  const std::vector<json>& records);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace cseval::jsonl
