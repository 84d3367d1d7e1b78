#include "cseval/sandbox.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace cseval::sandbox {

void ExecutionLimits::validate() const {
  if (wall_time_ms <= 0 || cpu_time_ms <= 0 || memory_bytes <= 0 || max_output_bytes <= 0)
    throw ValidationError("execution limits must be positive");
  if (cpu_time_ms > wall_time_ms)
    throw ValidationError("cpu_time_ms must not exceed wall_time_ms");
}

const char* to_string(CaseStatus s) {
  switch (s) {
    case CaseStatus::pass: return "pass";
    case CaseStatus::wrong_output: return "wrong_output";
    case CaseStatus::runtime_error: return "runtime_error";
    case CaseStatus::compile_error: return "compile_error";
    case CaseStatus::timeout: return "timeout";
    case CaseStatus::resource_exceeded: return "resource_exceeded";
  }
  return "runtime_error";
}

CaseStatus case_status_from_string(const std::string& s) {
  if (s == "pass") return CaseStatus::pass;
  if (s == "wrong_output") return CaseStatus::wrong_output;
  if (s == "runtime_error") return CaseStatus::runtime_error;
  if (s == "compile_error") return CaseStatus::compile_error;
  if (s == "timeout") return CaseStatus::timeout;
  if (s == "resource_exceeded") return CaseStatus::resource_exceeded;
  throw ValidationError("unknown case status: '" + s + "'");
}

ToolchainTable ToolchainTable::defaults() {
  ToolchainTable table;
  table.by_tag["python"] = Toolchain{{"python3", "{script}"}, true};
  return table;
}

const Toolchain& ToolchainTable::lookup(const std::string& language_tag) const {
  auto it = by_tag.find(language_tag);
  if (it == by_tag.end())
    throw InfraError("no toolchain configured for language_tag '" + language_tag + "'");
  return it->second;
}

bool compare_output(const std::string& actual, const std::string& expected, bool trim) {
  if (!trim) return actual == expected;
  auto normalize = [](const std::string& s) {
    std::vector<std::string> lines = split_lines(s);
    for (auto& line : lines) line = rstrip(line);
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
  };
  return normalize(actual) == normalize(expected);
}

bool compare_values(const json& actual, const json& expected, std::optional<double> tolerance) {
  const bool a_num = actual.is_number() && !actual.is_boolean();
  const bool e_num = expected.is_number() && !expected.is_boolean();
  if (a_num && e_num) {
    if (actual.is_number_integer() && expected.is_number_integer())
      return actual.get<long long>() == expected.get<long long>();
    double a = actual.get<double>();
    double e = expected.get<double>();
    if (tolerance) return std::abs(a - e) <= *tolerance;
    return a == e;
  }
  if (actual.type() != expected.type()) return false;
  if (actual.is_array()) {
    if (actual.size() != expected.size()) return false;
    for (size_t i = 0; i < actual.size(); ++i)
      if (!compare_values(actual[i], expected[i], tolerance)) return false;
    return true;
  }
  if (actual.is_object()) {
    if (actual.size() != expected.size()) return false;
    for (const auto& [key, value] : expected.items()) {
      if (!actual.contains(key)) return false;
      if (!compare_values(actual.at(key), value, tolerance)) return false;
    }
    return true;
  }
  return actual == expected;
}

namespace {

struct RunSpec {
  std::vector<std::string> argv;
  std::string stdin_data;
  std::filesystem::path workdir;
  const ExecutionLimits* limits = nullptr;
};

struct RunResult {
  int exit_code = -1;
  int term_signal = 0;
  bool timed_out = false;
  bool output_overflow = false;
  bool exec_failed = false;
  int exec_errno = 0;
  std::string out;
  std::string err;
  long duration_ms = 0;
};

void close_fd(int& fd) {
  if (fd >= 0) {
    ::close(fd);
    fd = -1;
  }
}

// Runs between fork and exec while other threads may hold arbitrary locks,
// so only async-signal-safe calls are allowed here: no allocation, no stdio.
[[noreturn]] void child_exec(const RunSpec& spec, char* const* argv, const char* workdir,
                             int in_fd, int out_fd, int err_fd, int status_fd) {
  ::setpgid(0, 0);
  if (!spec.limits->network_allowed) {
    // best effort: needs CAP_NET_ADMIN, silently skipped otherwise
    (void)::unshare(CLONE_NEWNET);
  }
  rlimit cpu{};
  cpu.rlim_cur = cpu.rlim_max =
      static_cast<rlim_t>((spec.limits->cpu_time_ms + 999) / 1000);
  if (cpu.rlim_cur == 0) cpu.rlim_cur = cpu.rlim_max = 1;
  ::setrlimit(RLIMIT_CPU, &cpu);
  rlimit mem{};
  mem.rlim_cur = mem.rlim_max = static_cast<rlim_t>(spec.limits->memory_bytes);
  ::setrlimit(RLIMIT_AS, &mem);
  rlimit core{};
  core.rlim_cur = core.rlim_max = 0;
  ::setrlimit(RLIMIT_CORE, &core);
  if (::chdir(workdir) != 0) {
    int e = errno;
    (void)!::write(status_fd, &e, sizeof(e));
    _exit(126);
  }
  if (::geteuid() == 0) {
    // candidate code must not run with root's file permissions
    bool dropped = ::setgid(65534) == 0 && ::setuid(65534) == 0;
    (void)dropped;
  }
  ::dup2(in_fd, 0);
  ::dup2(out_fd, 1);
  ::dup2(err_fd, 2);
  ::execvp(argv[0], argv);
  int e = errno;
  (void)!::write(status_fd, &e, sizeof(e));
  _exit(127);
}

RunResult run_process(const RunSpec& spec) {
  // CLOEXEC everywhere: children forked concurrently by other worker threads
  // must not inherit these descriptors past their exec, or pipe ends leak
  // into unrelated candidates and EOF never arrives
  int in_pipe[2], out_pipe[2], err_pipe[2], status_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0 || ::pipe2(out_pipe, O_CLOEXEC) != 0 ||
      ::pipe2(err_pipe, O_CLOEXEC) != 0 || ::pipe2(status_pipe, O_CLOEXEC) != 0)
    throw InfraError("sandbox setup failed: pipe: " + std::string(std::strerror(errno)));

  // everything the child touches is prepared before fork
  std::vector<char*> child_argv;
  child_argv.reserve(spec.argv.size() + 1);
  for (const auto& a : spec.argv) child_argv.push_back(const_cast<char*>(a.c_str()));
  child_argv.push_back(nullptr);
  std::string workdir = spec.workdir.string();

  auto start = std::chrono::steady_clock::now();
  pid_t pid = ::fork();
  if (pid < 0) throw InfraError("sandbox setup failed: fork: " + std::string(std::strerror(errno)));
  if (pid == 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(err_pipe[0]);
    ::close(status_pipe[0]);
    child_exec(spec, child_argv.data(), workdir.c_str(), in_pipe[0], out_pipe[1], err_pipe[1],
               status_pipe[1]);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  ::close(status_pipe[1]);

  int stdin_fd = in_pipe[1];
  int stdout_fd = out_pipe[0];
  int stderr_fd = err_pipe[0];
  int status_fd = status_pipe[0];
  ::fcntl(stdin_fd, F_SETFL, O_NONBLOCK);

  RunResult result;
  size_t stdin_written = 0;
  const long cap = spec.limits->max_output_bytes;
  long out_total = 0, err_total = 0;
  const auto deadline = start + std::chrono::milliseconds(spec.limits->wall_time_ms);
  bool killed = false;

  auto kill_group = [&] {
    if (!killed) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      killed = true;
    }
  };

  char buf[16384];
  while (stdout_fd >= 0 || stderr_fd >= 0 || status_fd >= 0) {
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      result.timed_out = true;
      kill_group();
    }
    int wait_ms = result.timed_out || killed
                      ? 50
                      : static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                             deadline - now)
                                             .count()) +
                            1;
    pollfd fds[4];
    nfds_t nfds = 0;
    int idx_out = -1, idx_err = -1, idx_status = -1, idx_in = -1;
    if (stdout_fd >= 0) { fds[nfds] = {stdout_fd, POLLIN, 0}; idx_out = static_cast<int>(nfds++); }
    if (stderr_fd >= 0) { fds[nfds] = {stderr_fd, POLLIN, 0}; idx_err = static_cast<int>(nfds++); }
    if (status_fd >= 0) { fds[nfds] = {status_fd, POLLIN, 0}; idx_status = static_cast<int>(nfds++); }
    if (stdin_fd >= 0) { fds[nfds] = {stdin_fd, POLLOUT, 0}; idx_in = static_cast<int>(nfds++); }
    int rc = ::poll(fds, nfds, std::min(wait_ms, 100));
    if (rc < 0 && errno != EINTR)
      throw InfraError("sandbox poll failed: " + std::string(std::strerror(errno)));

    if (idx_in >= 0 && (fds[idx_in].revents & (POLLOUT | POLLERR | POLLHUP))) {
      if (stdin_written >= spec.stdin_data.size() || (fds[idx_in].revents & (POLLERR | POLLHUP))) {
        close_fd(stdin_fd);
      } else {
        ssize_t n = ::write(stdin_fd, spec.stdin_data.data() + stdin_written,
                            spec.stdin_data.size() - stdin_written);
        if (n > 0) stdin_written += static_cast<size_t>(n);
        else if (n < 0 && errno != EAGAIN && errno != EINTR) close_fd(stdin_fd);
        if (stdin_written >= spec.stdin_data.size()) close_fd(stdin_fd);
      }
    }
    auto drain = [&](int& fd, int idx, std::string& sink, long& total) {
      if (idx < 0 || !(fds[idx].revents & (POLLIN | POLLHUP | POLLERR))) return;
      ssize_t n = ::read(fd, buf, sizeof(buf));
      if (n > 0) {
        total += n;
        long room = cap - static_cast<long>(sink.size());
        if (room > 0) sink.append(buf, static_cast<size_t>(std::min<long>(room, n)));
        if (total > cap) {
          result.output_overflow = true;
          kill_group();
        }
      } else if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR)) {
        close_fd(fd);
      }
    };
    drain(stdout_fd, idx_out, result.out, out_total);
    drain(stderr_fd, idx_err, result.err, err_total);
    if (idx_status >= 0 && (fds[idx_status].revents & (POLLIN | POLLHUP | POLLERR))) {
      int e = 0;
      ssize_t n = ::read(status_fd, &e, sizeof(e));
      if (n == static_cast<ssize_t>(sizeof(e))) {
        result.exec_failed = true;
        result.exec_errno = e;
      }
      if (n <= 0) close_fd(status_fd);
    }
  }
  close_fd(stdin_fd);

  // wait without reaping first: while the leader is a zombie its pid and
  // pgid cannot be recycled, so the group kill below cannot hit a stranger
  for (;;) {
    siginfo_t info;
    info.si_pid = 0;
    int rc2 = ::waitid(P_PID, static_cast<id_t>(pid), &info, WEXITED | WNOWAIT | WNOHANG);
    if (rc2 == 0 && info.si_pid == pid) break;
    if (rc2 < 0 && errno != EINTR) break;
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      result.timed_out = true;
      kill_group();
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  ::kill(-pid, SIGKILL);  // stragglers forked by the candidate
  int wstatus = 0;
  while (::waitpid(pid, &wstatus, 0) < 0 && errno == EINTR) {
  }

  if (WIFEXITED(wstatus)) result.exit_code = WEXITSTATUS(wstatus);
  if (WIFSIGNALED(wstatus)) result.term_signal = WTERMSIG(wstatus);
  result.duration_ms = static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                             std::chrono::steady_clock::now() - start)
                                             .count());
  return result;
}

std::atomic<uint64_t> g_scratch_counter{0};

class ScratchDir {
 public:
  ScratchDir() {
    auto base = std::filesystem::temp_directory_path();
    uint64_t nonce = g_scratch_counter.fetch_add(1);
    path_ = base / ("cseval-run-" + std::to_string(::getpid()) + "-" + std::to_string(nonce));
    std::error_code ec;
    std::filesystem::create_directories(path_, ec);
    if (ec) throw InfraError("sandbox setup failed: cannot create " + path_.string());
    ::chmod(path_.c_str(), 0777);  // candidate may run as an unprivileged uid
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InfraError("sandbox setup failed: cannot write " + path.string());
  out << content;
  out.flush();
  if (!out) throw InfraError("sandbox setup failed: short write " + path.string());
  ::chmod(path.c_str(), 0644);
}

std::vector<std::string> instantiate_argv(const Toolchain& toolchain,
                                          const std::string& script_name) {
  std::vector<std::string> argv;
  for (const auto& part : toolchain.argv_template) {
    std::string expanded = part;
    size_t at = expanded.find("{script}");
    if (at != std::string::npos) expanded.replace(at, 8, script_name);
    argv.push_back(std::move(expanded));
  }
  if (argv.empty()) throw InfraError("toolchain has an empty command template");
  return argv;
}

const char kCallDriver[] = R"PY(import json
import sys

with open("candidate.py") as f:
    _src = f.read()
_ns = {"__name__": "__main__"}
exec(compile(_src, "candidate.py", "exec"), _ns)
with open("args.json") as f:
    _args = json.load(f)
with open("entry.json") as f:
    _entry = json.load(f)
_fn = _ns.get(_entry)
if _fn is None:
    print("entry point not found:", _entry, file=sys.stderr)
    sys.exit(1)
_result = _fn(*_args)
with open("result.json", "w") as f:
    json.dump(_result, f)
)PY";

const char kCompileGate[] = R"PY(import sys

with open("candidate.py") as f:
    _src = f.read()
try:
    compile(_src, "candidate.py", "exec")
except SyntaxError as e:
    print("compile failed:", e, file=sys.stderr)
    sys.exit(1)
)PY";

CaseStatus classify_failure(const RunResult& r) {
  // a failed source compile aborts before anything can run or time out
  if (!r.timed_out && r.exit_code > 0 &&
      (r.err.find("SyntaxError") != std::string::npos ||
       r.err.find("IndentationError") != std::string::npos ||
       r.err.find("TabError") != std::string::npos))
    return CaseStatus::compile_error;
  if (r.timed_out || r.term_signal == SIGXCPU) return CaseStatus::timeout;
  if (r.output_overflow) return CaseStatus::resource_exceeded;
  if (r.err.find("MemoryError") != std::string::npos) return CaseStatus::resource_exceeded;
  return CaseStatus::runtime_error;
}

void raise_on_environment_failure(const RunResult& r, const Toolchain& toolchain) {
  if (r.exit_code == 126)
    throw InfraError("sandbox setup failed inside child (chdir): " +
                     std::string(std::strerror(r.exec_errno)));
  if (r.exec_failed)
    throw InfraError("cannot launch toolchain command '" + toolchain.argv_template.front() +
                     "': " + std::strerror(r.exec_errno));
}

}  // namespace

std::optional<CaseOutcome> compile_check(const std::string& code, const ExecutionLimits& limits,
                                         const Toolchain& toolchain) {
  if (!toolchain.python_semantics) return std::nullopt;
  limits.validate();
  ScratchDir dir;
  write_file(dir.path() / "candidate.py", code);
  write_file(dir.path() / "gate.py", kCompileGate);
  RunSpec spec;
  spec.argv = instantiate_argv(toolchain, "gate.py");
  spec.workdir = dir.path();
  spec.limits = &limits;
  RunResult r = run_process(spec);
  raise_on_environment_failure(r, toolchain);
  CaseOutcome outcome;
  outcome.stdout_text = r.out;
  outcome.stderr_text = r.err;
  outcome.duration_ms = r.duration_ms;
  if (r.exit_code == 0)
    outcome.status = CaseStatus::pass;
  else if (r.exit_code == 1 && !r.timed_out)
    outcome.status = CaseStatus::compile_error;
  else
    outcome.status = classify_failure(r);
  return outcome;
}

CaseOutcome run_case(const std::string& code, const corpus::TestCase& test_case,
                     const ExecutionLimits& limits, const Toolchain& toolchain,
                     const CompareOptions& options) {
  limits.validate();
  ScratchDir dir;
  write_file(dir.path() / "candidate.py", code);

  RunSpec spec;
  spec.workdir = dir.path();
  spec.limits = &limits;
  if (test_case.mode == corpus::CaseMode::stdio) {
    spec.argv = instantiate_argv(toolchain, "candidate.py");
    spec.stdin_data = test_case.input;
  } else {
    if (!toolchain.python_semantics)
      throw InfraError("call-mode cases need a python-semantics toolchain");
    write_file(dir.path() / "driver.py", kCallDriver);
    write_file(dir.path() / "args.json", test_case.args.dump());
    write_file(dir.path() / "entry.json", json(test_case.entry_point).dump());
    spec.argv = instantiate_argv(toolchain, "driver.py");
  }

  RunResult r = run_process(spec);
  raise_on_environment_failure(r, toolchain);

  CaseOutcome outcome;
  outcome.stdout_text = r.out;
  outcome.stderr_text = r.err;
  outcome.duration_ms = r.duration_ms;
  if (r.exit_code != 0 || r.term_signal != 0 || r.timed_out || r.output_overflow) {
    outcome.status = classify_failure(r);
    return outcome;
  }
  if (test_case.mode == corpus::CaseMode::stdio) {
    outcome.status = compare_output(r.out, test_case.expected.get<std::string>(),
                                    options.stdio_trim)
                         ? CaseStatus::pass
                         : CaseStatus::wrong_output;
    return outcome;
  }
  std::ifstream result_file(dir.path() / "result.json");
  if (!result_file) {
    outcome.status = CaseStatus::runtime_error;
    outcome.stderr_text += "\n[no result produced]";
    return outcome;
  }
  json actual;
  try {
    actual = json::parse(result_file);
  } catch (const json::parse_error&) {
    outcome.status = CaseStatus::runtime_error;
    outcome.stderr_text += "\n[unparseable result]";
    return outcome;
  }
  outcome.status = compare_values(actual, test_case.expected, options.float_tolerance)
                       ? CaseStatus::pass
                       : CaseStatus::wrong_output;
  return outcome;
}

ReferenceRun run_reference(const std::string& code, corpus::CaseMode mode,
                           const std::string& stdin_data, const std::string& entry_point,
                           const json& args, const ExecutionLimits& limits,
                           const Toolchain& toolchain) {
  limits.validate();
  ScratchDir dir;
  write_file(dir.path() / "candidate.py", code);
  RunSpec spec;
  spec.workdir = dir.path();
  spec.limits = &limits;
  if (mode == corpus::CaseMode::stdio) {
    spec.argv = instantiate_argv(toolchain, "candidate.py");
    spec.stdin_data = stdin_data;
  } else {
    if (!toolchain.python_semantics)
      throw InfraError("call-mode cases need a python-semantics toolchain");
    write_file(dir.path() / "driver.py", kCallDriver);
    write_file(dir.path() / "args.json", args.dump());
    write_file(dir.path() / "entry.json", json(entry_point).dump());
    spec.argv = instantiate_argv(toolchain, "driver.py");
  }
  RunResult r = run_process(spec);
  raise_on_environment_failure(r, toolchain);
  ReferenceRun out;
  out.stdout_text = r.out;
  if (r.exit_code != 0 || r.term_signal != 0 || r.timed_out || r.output_overflow) {
    out.status = classify_failure(r);
    return out;
  }
  if (mode == corpus::CaseMode::call) {
    std::ifstream result_file(dir.path() / "result.json");
    if (!result_file) {
      out.status = CaseStatus::runtime_error;
      return out;
    }
    try {
      out.result = json::parse(result_file);
    } catch (const json::parse_error&) {
      out.status = CaseStatus::runtime_error;
      return out;
    }
  }
  out.ok = true;
  out.status = CaseStatus::pass;
  return out;
}

CandidateGroundTruth evaluate_candidate(const std::string& code,
                                        const std::vector<corpus::TestCase>& cases,
                                        const ExecutionLimits& limits,
                                        const Toolchain& toolchain,
                                        const CompareOptions& options) {
  if (cases.empty())
    throw ValidationError("evaluate_candidate: task has zero test cases");
  CandidateGroundTruth truth;
  std::optional<CaseOutcome> gate = compile_check(code, limits, toolchain);
  if (gate && gate->status != CaseStatus::pass) {
    for (size_t i = 0; i < cases.size(); ++i) truth.outcomes.push_back(*gate);
  } else {
    truth.outcomes.resize(cases.size());
    for (size_t i = 0; i < cases.size(); ++i)
      truth.outcomes[i] = run_case(code, cases[i], limits, toolchain, options);
  }
  size_t passed = 0;
  bool clean = true;
  for (const auto& o : truth.outcomes) {
    if (o.status == CaseStatus::pass) ++passed;
    if (o.status != CaseStatus::pass && o.status != CaseStatus::wrong_output) clean = false;
  }
  truth.pass_ratio = static_cast<double>(passed) / static_cast<double>(truth.outcomes.size());
  truth.executability = clean ? 1 : 0;
  return truth;
}

CorpusAggregates aggregate_corpus(const std::vector<std::vector<CandidateGroundTruth>>& truths) {
  size_t count = 0;
  double sum = 0.0;
  size_t perfect = 0;
  for (const auto& task : truths) {
    for (const auto& t : task) {
      ++count;
      sum += t.pass_ratio;
      if (t.pass_ratio == 1.0) ++perfect;
    }
  }
  if (count == 0) throw ValidationError("aggregate_corpus: no candidates");
  return {sum / static_cast<double>(count),
          static_cast<double>(perfect) / static_cast<double>(count)};
}

void parallel_for(size_t count, int jobs, const std::function<void(size_t)>& fn) {
  if (jobs < 1) throw UsageError("parallelism must be >= 1");
  if (count == 0) return;
  size_t workers = std::min<size_t>(static_cast<size_t>(jobs), count);
  if (workers == 1) {
    for (size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<std::vector<CandidateGroundTruth>> evaluate_corpus(
    const std::vector<corpus::TaskRecord>& tasks, const ExecutionLimits& limits,
    const ToolchainTable& toolchains, const CompareOptions& options, int jobs) {
  std::vector<std::pair<size_t, size_t>> work;  // (task, candidate)
  for (size_t t = 0; t < tasks.size(); ++t)
    for (size_t c = 0; c < tasks[t].candidates.size(); ++c) work.emplace_back(t, c);
  std::vector<std::vector<CandidateGroundTruth>> results(tasks.size());
  for (size_t t = 0; t < tasks.size(); ++t) results[t].resize(tasks[t].candidates.size());
  parallel_for(work.size(), jobs, [&](size_t i) {
    auto [t, c] = work[i];
    const auto& task = tasks[t];
    results[t][c] = evaluate_candidate(task.candidates[c].code, task.test_cases, limits,
                                       toolchains.lookup(task.language_tag), options);
  });
  return results;
}

}  // namespace cseval::sandbox
