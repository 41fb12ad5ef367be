#include "lamcmc/subprocess_model.hpp"

#include <csignal>
#include <cstdio>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

namespace lamcmc {

struct SubprocessModel::Child {
  pid_t pid = -1;
  FILE* to_child = nullptr;
  FILE* from_child = nullptr;

  ~Child() {
    if (to_child) std::fclose(to_child);
    if (from_child) std::fclose(from_child);
    if (pid > 0) {
      int status = 0;
      waitpid(pid, &status, 0);
    }
  }
};

struct SubprocessModel::Pool {
  std::vector<std::string> argv;
  std::size_t output_dim = 0;
  std::mutex mutex;
  std::vector<std::unique_ptr<Child>> idle;

  std::unique_ptr<Child> spawn() {
    int in_pipe[2], out_pipe[2];
    if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
      throw std::runtime_error("SubprocessModel: pipe() failed");
    const pid_t pid = fork();
    if (pid < 0) throw std::runtime_error("SubprocessModel: fork() failed");
    if (pid == 0) {
      dup2(in_pipe[0], STDIN_FILENO);
      dup2(out_pipe[1], STDOUT_FILENO);
      close(in_pipe[0]);
      close(in_pipe[1]);
      close(out_pipe[0]);
      close(out_pipe[1]);
      std::vector<char*> args;
      for (auto& a : argv) args.push_back(a.data());
      args.push_back(nullptr);
      execvp(args[0], args.data());
      _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    auto child = std::make_unique<Child>();
    child->pid = pid;
    child->to_child = fdopen(in_pipe[1], "w");
    child->from_child = fdopen(out_pipe[0], "r");
    return child;
  }

  std::unique_ptr<Child> acquire() {
    {
      std::lock_guard lock(mutex);
      if (!idle.empty()) {
        auto c = std::move(idle.back());
        idle.pop_back();
        return c;
      }
    }
    return spawn();
  }

  void release(std::unique_ptr<Child> c) {
    std::lock_guard lock(mutex);
    idle.push_back(std::move(c));
  }
};

SubprocessModel::SubprocessModel(std::vector<std::string> argv, std::size_t output_dim)
    : pool_(std::make_unique<Pool>()) {
  if (argv.empty()) throw InvalidArgument("SubprocessModel: empty command");
  if (output_dim == 0) throw InvalidArgument("SubprocessModel: output_dim must be positive");
  // A child that exits early must not kill us with SIGPIPE.
  std::signal(SIGPIPE, SIG_IGN);
  pool_->argv = std::move(argv);
  pool_->output_dim = output_dim;
}

SubprocessModel::~SubprocessModel() = default;

Vector SubprocessModel::operator()(const Vector& theta) {
  auto child = pool_->acquire();

  std::ostringstream line;
  line << std::setprecision(17);
  for (Eigen::Index i = 0; i < theta.size(); ++i) line << (i ? " " : "") << theta(i);
  line << '\n';
  const std::string text = line.str();
  if (std::fwrite(text.data(), 1, text.size(), child->to_child) != text.size() ||
      std::fflush(child->to_child) != 0)
    throw ModelError("SubprocessModel: failed writing to model process", theta);

  std::string reply;
  for (int ch = std::fgetc(child->from_child); ch != EOF && ch != '\n';
       ch = std::fgetc(child->from_child))
    reply.push_back(static_cast<char>(ch));
  if (reply.empty()) throw ModelError("SubprocessModel: model process produced no output", theta);

  std::istringstream in(reply);
  Vector out(pool_->output_dim);
  for (std::size_t i = 0; i < pool_->output_dim; ++i) {
    std::string tok;
    if (!(in >> tok)) throw ModelError("SubprocessModel: too few outputs in reply", theta);
    try {
      out(static_cast<Eigen::Index>(i)) = std::stod(tok);
    } catch (const std::exception&) {
      throw ModelError("SubprocessModel: unparsable output '" + tok + "'", theta);
    }
  }
  pool_->release(std::move(child));
  return out;
}

ModelFn SubprocessModel::make(std::vector<std::string> argv, std::size_t output_dim) {
  auto shared = std::make_shared<SubprocessModel>(std::move(argv), output_dim);
  return [shared](const Vector& theta) { return (*shared)(theta); };
}

}  // namespace lamcmc
