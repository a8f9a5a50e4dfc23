#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "emotod/human_eval.hpp"

namespace emotod {

/// HTTP endpoints for rank collection:
///   GET  /api/session/next?rater=ID   next example the rater has not ranked
///   POST /api/rankings                {example_id, rater_id, ranks: {index: rank}}
///   GET  /api/results                 rank summary over all stored rankings
///   GET  /api/progress[?rater=ID]     completion counts
/// Responses served to raters carry no system names.
class AnnotationService {
 public:
  AnnotationService(AnnotationStore& store, std::vector<EvalExample> examples,
                    std::filesystem::path ui_dir = {});
  ~AnnotationService();

  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  /// Bind and serve on a background thread. Port 0 picks a free port.
  /// Returns the bound port.
  int start(const std::string& host, int port);
  /// Serve on the calling thread until stop().
  bool listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

}  // namespace emotod
