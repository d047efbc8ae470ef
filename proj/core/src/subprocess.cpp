#include "ctstack/subprocess.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <sstream>

#include "ctstack/errors.hpp"

namespace ctstack {

namespace {

constexpr std::size_t kMaxCapturedOutput = 64 * 1024;

}  // namespace

std::vector<std::string> split_command(const std::string& command) {
  std::vector<std::string> out;
  std::istringstream in(command);
  std::string token;
  while (in >> token) out.push_back(token);
  return out;
}

ProcessResult run_process(const std::vector<std::string>& argv,
                          double timeout_seconds) {
  if (argv.empty()) {
    throw InvalidArgumentError("cannot run an empty command");
  }

  int fds[2];
  if (pipe(fds) != 0) {
    throw Error(std::string("pipe failed: ") + std::strerror(errno));
  }

  const pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    throw Error(std::string("fork failed: ") + std::strerror(errno));
  }

  if (pid == 0) {
    // Child: both streams into the pipe, then exec.
    dup2(fds[1], STDOUT_FILENO);
    dup2(fds[1], STDERR_FILENO);
    close(fds[0]);
    close(fds[1]);
    std::vector<char*> child_argv;
    child_argv.reserve(argv.size() + 1);
    for (const std::string& a : argv) {
      child_argv.push_back(const_cast<char*>(a.c_str()));
    }
    child_argv.push_back(nullptr);
    execvp(child_argv[0], child_argv.data());
    std::fprintf(stderr, "exec failed for %s: %s\n", child_argv[0],
                 std::strerror(errno));
    _exit(127);
  }

  close(fds[1]);

  ProcessResult result;
  std::string& output = result.output;
  bool truncated = false;
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration<double>(timeout_seconds);

  bool child_exited = false;
  int status = 0;
  bool pipe_open = true;
  int idle_polls_after_exit = 0;
  char buf[4096];

  auto append_output = [&](const char* data, ssize_t n) {
    if (output.size() < kMaxCapturedOutput) {
      output.append(data, static_cast<std::size_t>(std::min<ssize_t>(
                              n, static_cast<ssize_t>(kMaxCapturedOutput -
                                                      output.size()))));
    } else {
      truncated = true;
    }
  };

  while (pipe_open || !child_exited) {
    if (!child_exited) {
      const pid_t waited = waitpid(pid, &status, WNOHANG);
      if (waited == pid) child_exited = true;
    }

    if (pipe_open) {
      struct pollfd pfd{fds[0], POLLIN, 0};
      const int ready = poll(&pfd, 1, 50);
      if (ready > 0) {
        const ssize_t n = read(fds[0], buf, sizeof buf);
        if (n > 0) {
          append_output(buf, n);
          continue;  // drain before polling the child again
        }
        pipe_open = false;  // EOF or error
      } else if (child_exited) {
        // A grandchild may still hold the write end; give up after a few
        // quiet polls rather than waiting on it.
        if (++idle_polls_after_exit >= 10) break;
      }
    } else if (!child_exited) {
      // Pipe closed but the child is still running; wait briefly.
      usleep(20 * 1000);
    }

    if (!child_exited && std::chrono::steady_clock::now() >= deadline) {
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      child_exited = true;
      result.timed_out = true;
      break;
    }
  }

  // Drain anything buffered after exit without blocking on open writers.
  while (pipe_open) {
    struct pollfd pfd{fds[0], POLLIN, 0};
    if (poll(&pfd, 1, 0) <= 0) break;
    const ssize_t n = read(fds[0], buf, sizeof buf);
    if (n <= 0) break;
    append_output(buf, n);
  }
  close(fds[0]);

  if (!child_exited) {
    waitpid(pid, &status, 0);
  }
  if (truncated) output += "\n...[output truncated]";

  if (result.timed_out) {
    result.exit_code = -1;
  } else if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_code = 128 + WTERMSIG(status);
  }
  return result;
}

}  // namespace ctstack
