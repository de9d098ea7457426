#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "eseman/index.hpp"
#include "eseman/node_cache.hpp"
#include "eseman/query.hpp"

namespace httplib {
class Server;
}

namespace eseman {

using QueryParams = std::multimap<std::string, std::string>;

struct HttpReply {
  int status = 200;
  std::string body;
};

// What a session does with a request that arrives while its previous one is
// still running.
enum class BusyPolicy { kQueue, kReject };

// HTTP-independent request handling over a store directory. Thread-safe:
// distinct sessions run concurrently, requests within a session serialize.
class QueryService {
 public:
  explicit QueryService(Catalog catalog, BusyPolicy busy = BusyPolicy::kQueue);

  HttpReply datasets() const;

  // Params: dataset, begin, end, track_lo, track_hi, canvas_px (3672),
  // pixel_window (1), attr_key + attr_value, session, builder (1dkdt).
  // 400 invalid, 404 unknown dataset or missing index, 409 busy session under
  // kReject, 422 unsupported predicate.
  HttpReply query(const QueryParams& params);

  // Drops loaded indexes and sessions, e.g. after the store changed.
  void reload();

  std::size_t session_count() const;

 private:
  struct Session {
    std::mutex mutex;
    NodeCache cache;
    const HierIndex* index = nullptr;
  };

  std::shared_ptr<const HierIndex> index_for(const std::string& dataset, BuilderKind kind);
  std::shared_ptr<Session> session_for(const std::string& id);

  Catalog catalog_;
  BusyPolicy busy_;
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, BuilderKind>, std::shared_ptr<const HierIndex>> indexes_;
  std::map<std::string, std::shared_ptr<const Dataset>> datasets_;
  std::unordered_map<std::string, std::shared_ptr<Session>> sessions_;
};

// GET /datasets and GET /query over HTTP/1.1 with permissive CORS headers.
class QueryServer {
 public:
  explicit QueryServer(QueryService& service);
  ~QueryServer();

  // Binds and returns the port (an ephemeral one when port == 0). Throws
  // Error on failure.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void serve();
  void stop();
  bool running() const;

 private:
  QueryService& service_;
  std::unique_ptr<httplib::Server> http_;
};

}  // namespace eseman
