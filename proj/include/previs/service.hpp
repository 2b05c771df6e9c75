#pragma once

#include "previs/error.hpp"
#include "previs/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace previs {

/// HTTP status for a module error (422 for validation-class failures).
int http_status(ErrorCode code);

/// {"error": {"code", "message", "field"?, "token"?, "offset"?}}
nlohmann::json error_json(const std::exception& e);

enum class JobStatus { Queued, Running, Done, Failed };
std::string_view to_string(JobStatus s);

struct Job {
  std::string id;
  std::string project;
  int line = 0;
  JobStatus status = JobStatus::Queued;
  nlohmann::json result;  // run summary when done
  nlohmann::json error;   // error_json when failed
};

/// JSON API over a Studio. Generation runs as FIFO jobs on one worker;
/// each project is single-writer / multi-reader.
class StudioService {
 public:
  explicit StudioService(Studio& studio);
  ~StudioService();
  StudioService(const StudioService&) = delete;
  StudioService& operator=(const StudioService&) = delete;

  /// Binds to host:port (port 0 picks a free port) and returns the port, or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  bool listen_after_bind();
  void stop();

  /// Queues a generation job and returns its id.
  std::string submit_generate(const std::string& project, int line);
  std::optional<Job> job(const std::string& id) const;

 private:
  void routes();
  void worker_loop();
  std::shared_ptr<std::shared_mutex> project_lock(const std::string& id);

  Studio& studio_;
  std::unique_ptr<httplib::Server> server_;

  std::mutex locks_mutex_;
  std::map<std::string, std::shared_ptr<std::shared_mutex>> locks_;

  mutable std::mutex jobs_mutex_;
  std::condition_variable jobs_cv_;
  std::map<std::string, Job> jobs_;
  std::deque<std::string> queue_;
  long next_job_ = 1;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace previs
