#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstring>
#include <sstream>

#include "splat4d/error.hpp"
#include "splat4d/video_export.hpp"

namespace splat4d {

namespace {

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

std::string format_fps(double fps) {
  std::ostringstream os;
  os << fps;
  return os.str();
}

// Raw-video handshake: the child gets dims, fps and output path through argv substitution and
// reads width*height*3 bytes of RGB24 per frame (top row first) on stdin until EOF.
class ExternalEncoderSink final : public EncoderSink {
 public:
  ExternalEncoderSink(std::string command_template, std::filesystem::path output)
      : template_(std::move(command_template)), output_(std::move(output)) {}

  ~ExternalEncoderSink() override {
    if (stdin_fd_ >= 0) ::close(stdin_fd_);
    if (pid_ > 0) {
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }

  void begin(int width, int height, double fps) override {
    std::vector<std::string> args;
    std::istringstream in(template_);
    for (std::string tok; in >> tok;) {
      tok = replace_all(tok, "{width}", std::to_string(width));
      tok = replace_all(tok, "{height}", std::to_string(height));
      tok = replace_all(tok, "{fps}", format_fps(fps));
      tok = replace_all(tok, "{output}", output_.string());
      args.push_back(tok);
    }
    if (args.empty()) throw Error(ErrorCode::SpawnFailure, "encoder command template is empty");
    spawn(args);
  }

  void accept(std::size_t, int, int, std::span<const std::uint8_t> rgb8) override {
    std::size_t written = 0;
    while (written < rgb8.size()) {
      const ssize_t n = ::write(stdin_fd_, rgb8.data() + written, rgb8.size() - written);
      if (n < 0) {
        if (errno == EINTR) continue;
        const int err = errno;
        ::close(stdin_fd_);
        stdin_fd_ = -1;
        const int code = reap();
        if (code != 0) throw Error(ErrorCode::EncoderExitNonzero, "encoder exited with status " + std::to_string(code), std::nullopt, code);
        throw Error(ErrorCode::SinkFailure, std::string("writing to encoder failed: ") + std::strerror(err));
      }
      written += static_cast<std::size_t>(n);
    }
  }

  std::string finalize() override {
    if (stdin_fd_ >= 0) {
      ::close(stdin_fd_);
      stdin_fd_ = -1;
    }
    const int code = reap();
    if (code != 0) throw Error(ErrorCode::EncoderExitNonzero, "encoder exited with status " + std::to_string(code), std::nullopt, code);
    return output_.string();
  }

 private:
  void spawn(const std::vector<std::string>& args) {
    // Writes to a dead child must surface as EPIPE, not kill the process.
    std::signal(SIGPIPE, SIG_IGN);
    int data[2];
    int status_pipe[2];
    if (::pipe2(data, O_CLOEXEC) != 0) throw Error(ErrorCode::SpawnFailure, "pipe() failed");
    if (::pipe2(status_pipe, O_CLOEXEC) != 0) {
      ::close(data[0]);
      ::close(data[1]);
      throw Error(ErrorCode::SpawnFailure, "pipe() failed");
    }
    std::vector<char*> argv;
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);

    const pid_t pid = ::fork();
    if (pid < 0) throw Error(ErrorCode::SpawnFailure, "fork() failed");
    if (pid == 0) {
      ::dup2(data[0], STDIN_FILENO);
      ::execvp(argv[0], argv.data());
      const int err = errno;
      [[maybe_unused]] auto ignored = ::write(status_pipe[1], &err, sizeof(err));
      ::_exit(127);
    }
    ::close(data[0]);
    ::close(status_pipe[1]);
    int child_errno = 0;
    ssize_t n;
    do {
      n = ::read(status_pipe[0], &child_errno, sizeof(child_errno));
    } while (n < 0 && errno == EINTR);
    ::close(status_pipe[0]);
    if (n > 0) {
      ::close(data[1]);
      int status = 0;
      ::waitpid(pid, &status, 0);
      throw Error(ErrorCode::SpawnFailure, "cannot execute encoder '" + args[0] + "': " + std::strerror(child_errno));
    }
    pid_ = pid;
    stdin_fd_ = data[1];
  }

  int reap() {
    if (pid_ <= 0) return 0;
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0) {
      if (errno != EINTR) break;
    }
    pid_ = -1;
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
    return -1;
  }

  std::string template_;
  std::filesystem::path output_;
  pid_t pid_ = -1;
  int stdin_fd_ = -1;
};

}  // namespace

std::unique_ptr<EncoderSink> external_encoder_sink(std::string command_template, std::filesystem::path output) {
  return std::make_unique<ExternalEncoderSink>(std::move(command_template), std::move(output));
}

}  // namespace splat4d
