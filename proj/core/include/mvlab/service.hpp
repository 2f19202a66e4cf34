// service.hpp - HTTP+JSON API over an ingested corpus.
//
//   GET  /mvs?types=&counts=&layouts=&group_by=&color_by=
//   GET  /mv/{doi}
//   POST /recommend            {"sketch": {...}, "views": [3, 4], "top_k": 10}
//   GET  /stats/{frequency|counts|cooccurrence|aspect|position|stability}
//   POST /admin/reload         X-Admin-Token header
//   GET  /thumbnails/{file}    only with a thumbnails directory
//
// dispatch() holds every route and is usable without a socket. The corpus is
// an immutable snapshot; reload swaps it in one step.

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mvlab/ingest.hpp"

namespace mvlab {

/// Groups returned by GET /mvs when group_by is set.
inline constexpr std::size_t kMaxGroups = 10;

struct ServiceConfig {
  /// A derived/ directory or an annotation directory.
  std::filesystem::path corpus_dir;
  std::string host = "0.0.0.0";
  int port = 8080;
  std::optional<std::filesystem::path> thumbnails_dir;
  std::string cors_origin = "*";
  /// POST /admin/reload is disabled while empty.
  std::string admin_token;
  IngestConfig ingest;
};

struct ApiRequest {
  std::string method;
  /// Decoded path, e.g. "/mv/10.1109/TVCG.2019.1".
  std::string path;
  std::vector<std::pair<std::string, std::string>> query;
  /// Header names in lower case.
  std::map<std::string, std::string> headers;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;
};

/// Loads a derived/ directory, or ingests an annotation directory.
/// Throws E_IO, E_NO_FILES.
Library load_corpus(const std::filesystem::path& dir, const IngestConfig& cfg = {});

class Service {
 public:
  /// Loads the corpus from cfg.corpus_dir.
  explicit Service(ServiceConfig cfg);
  Service(ServiceConfig cfg, Library library);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Thread-safe.
  ApiResponse dispatch(const ApiRequest& request) const;

  /// Re-reads cfg.corpus_dir and swaps the corpus in. On failure the current
  /// corpus stays and the error is rethrown.
  void reload() const;
  void replace(Library library) const;
  std::size_t corpus_size() const;

  /// Binds the socket; port 0 picks a free port. Returns the bound port or -1.
  int bind();
  /// Serves until stop(). Call after bind().
  bool run();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mvlab
