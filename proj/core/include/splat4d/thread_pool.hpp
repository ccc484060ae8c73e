#pragma once

#include <condition_variable>
#include <cstdint>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace splat4d {

/// Fixed pool used for tile-parallel rendering. parallel_for blocks until every index has run.
class ThreadPool {
 public:
  /// threads == 0 picks std::thread::hardware_concurrency().
  explicit ThreadPool(std::size_t threads = 0);
  ~ThreadPool();
  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  std::size_t size() const { return workers_.size() + 1; }

  /// Runs fn(i) for i in [0, count). The calling thread participates. Concurrent callers are
  /// serialized; fn must not call parallel_for on the same pool.
  void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

 private:
  void worker_loop();
  void run_chunks();

  std::vector<std::thread> workers_;
  std::mutex call_mutex_;  // one parallel_for at a time
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t)>* job_ = nullptr;
  std::size_t job_count_ = 0;
  std::size_t next_index_ = 0;
  std::size_t active_ = 0;
  std::uint64_t generation_ = 0;
  bool stopping_ = false;
};

/// Process-wide pool shared by renderers that are not handed an explicit one.
ThreadPool& default_thread_pool();

}  // namespace splat4d
