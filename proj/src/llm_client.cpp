#include <cstdlib>
#include <iostream>
#include <sstream>

#include "cseval/testgen.hpp"
#include "httplib.h"

namespace cseval::testgen {

namespace {

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ValidationError("llm endpoint must be an http(s) URL: " + url);
  size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string build_prompt(const corpus::TaskRecord& task, corpus::CaseMode mode) {
  std::ostringstream p;
  p << "Propose up to 5 new test cases for the programming task below.\n"
    << "Respond with only a JSON array. ";
  if (mode == corpus::CaseMode::stdio)
    p << "Each element must be {\"input\": <string fed to stdin>, \"expected\": <string>} "
         "where expected may be omitted.\n";
  else
    p << "Each element must be {\"args\": [<positional argument values>], \"expected\": <value>} "
         "where expected may be omitted.\n";
  p << "\nTask description:\n" << task.nl << "\n\nReference solution:\n"
    << task.ref_codes.front() << "\n";
  return p.str();
}

std::string redact(const std::string& text, const std::string& secret) {
  if (secret.empty()) return text;
  std::string out = text;
  size_t at;
  while ((at = out.find(secret)) != std::string::npos) out.replace(at, secret.size(), "***");
  return out;
}

}  // namespace

LlmProposalResult propose_llm_cases(const corpus::TaskRecord& task, const LlmClientConfig& config,
                                    const sandbox::ExecutionLimits& limits,
                                    const sandbox::ToolchainTable& toolchains) {
  if (!config.enabled)
    throw UsageError("llm test-case proposal is disabled by configuration");
  if (task.ref_codes.empty() || task.test_cases.empty())
    throw ValidationError("llm proposal needs a task with reference code and original cases");

  const sandbox::Toolchain& toolchain = toolchains.lookup(task.language_tag);
  corpus::CaseMode mode = task.test_cases.front().mode;
  std::string entry_point =
      mode == corpus::CaseMode::call ? task.test_cases.front().entry_point : "";

  // oracle gate, same rule as extension
  const std::string* oracle = nullptr;
  for (const auto& ref : task.ref_codes) {
    auto truth = sandbox::evaluate_candidate(ref, task.test_cases, limits, toolchain);
    if (truth.pass_ratio == 1.0) {
      oracle = &ref;
      break;
    }
  }
  if (!oracle)
    throw ValidationError("llm proposal: no reference passes the original cases of task \"" +
                          task.task_id + "\"");

  std::string credential;
  if (!config.credential_env.empty()) {
    const char* v = std::getenv(config.credential_env.c_str());
    if (!v)
      throw InfraError("credential environment variable not set: " + config.credential_env);
    credential = v;
  }

  ParsedUrl url = parse_url(config.endpoint);
  httplib::Client client(url.base);
  client.set_connection_timeout(config.timeout_seconds, 0);
  client.set_read_timeout(config.timeout_seconds, 0);
  httplib::Headers headers;
  if (!credential.empty()) headers.emplace("Authorization", "Bearer " + credential);

  json body;
  body["model"] = config.model;
  body["messages"] = json::array({json{{"role", "user"},
                                       {"content", build_prompt(task, mode)}}});
  std::string request = body.dump();
  if (config.debug_log)
    std::cerr << "[llm] POST " << config.endpoint << " body=" << redact(request, credential)
              << "\n";

  auto response = client.Post(url.path, headers, request, "application/json");
  if (!response)
    throw InfraError("llm endpoint unreachable: " + config.endpoint + " (" +
                     httplib::to_string(response.error()) + ")");
  if (config.debug_log)
    std::cerr << "[llm] status=" << response->status
              << " body=" << redact(response->body, credential) << "\n";
  if (response->status == 401 || response->status == 403)
    throw InfraError("llm endpoint rejected the credential (HTTP " +
                     std::to_string(response->status) + ")");
  if (response->status != 200)
    throw InfraError("llm endpoint returned HTTP " + std::to_string(response->status));

  LlmProposalResult result;
  std::string content;
  try {
    json reply = json::parse(response->body);
    content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    result.diagnostics.push_back(std::string("unparseable completion envelope: ") + e.what());
    return result;
  }

  size_t open = content.find('[');
  size_t close = content.rfind(']');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    result.diagnostics.push_back("reply contains no JSON array");
    return result;
  }
  json proposals;
  try {
    proposals = json::parse(content.substr(open, close - open + 1));
  } catch (const json::exception& e) {
    result.diagnostics.push_back(std::string("unparseable proposal array: ") + e.what());
    return result;
  }
  if (!proposals.is_array()) {
    result.diagnostics.push_back("proposal payload is not an array");
    return result;
  }

  std::vector<json> original_values;
  for (const auto& tc : task.test_cases)
    original_values.push_back(mode == corpus::CaseMode::stdio ? parse_stdio_input(tc.input)
                                                              : json(tc.args));
  TypeDescriptor desc = mode == corpus::CaseMode::stdio
                            ? infer_input_type(original_values)
                            : infer_call_args_type(original_values);

  for (const auto& prop : proposals) {
    if (!prop.is_object()) {
      ++result.dropped;
      result.diagnostics.push_back("proposal is not an object: " + prop.dump());
      continue;
    }
    corpus::TestCase tc;
    tc.mode = mode;
    tc.origin = corpus::CaseOrigin::llm_proposed;
    json value;
    if (mode == corpus::CaseMode::stdio) {
      if (!prop.contains("input") || !prop.at("input").is_string()) {
        ++result.dropped;
        result.diagnostics.push_back("stdio proposal without string input: " + prop.dump());
        continue;
      }
      tc.input = prop.at("input").get<std::string>();
      value = parse_stdio_input(tc.input);
    } else {
      if (!prop.contains("args") || !prop.at("args").is_array()) {
        ++result.dropped;
        result.diagnostics.push_back("call proposal without args array: " + prop.dump());
        continue;
      }
      tc.entry_point = entry_point;
      tc.args = prop.at("args");
      value = tc.args;
    }
    if (!desc.matches(value)) {
      ++result.dropped;
      result.diagnostics.push_back("proposal outside inferred input type " + desc.describe() +
                                   ": " + value.dump());
      continue;
    }
    auto run = sandbox::run_reference(*oracle, mode, tc.input, entry_point, tc.args, limits,
                                      toolchain);
    if (!run.ok) {
      ++result.dropped;
      result.diagnostics.push_back("reference fails on proposed input: " + value.dump());
      continue;
    }
    json reference_expected =
        mode == corpus::CaseMode::stdio ? json(run.stdout_text) : run.result;
    if (prop.contains("expected")) {
      bool agree = mode == corpus::CaseMode::stdio
                       ? prop.at("expected").is_string() &&
                             sandbox::compare_output(prop.at("expected").get<std::string>(),
                                                     run.stdout_text)
                       : sandbox::compare_values(prop.at("expected"), reference_expected);
      if (!agree) {
        ++result.dropped;
        result.diagnostics.push_back("proposed expected disagrees with the reference: " +
                                     prop.dump());
        continue;
      }
    }
    tc.expected = reference_expected;
    result.cases.push_back(std::move(tc));
  }
  return result;
}

}  // namespace cseval::testgen
