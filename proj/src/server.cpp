#include "eseman/server.hpp"

#include <charconv>

#include <httplib.h>

#include "eseman/error.hpp"
#include "eseman/wire.hpp"

namespace eseman {
namespace {

const std::string* param(const QueryParams& p, const std::string& name) {
  const auto it = p.find(name);
  return it == p.end() ? nullptr : &it->second;
}

template <typename T>
T parse_int(const QueryParams& p, const std::string& name, std::optional<T> fallback) {
  const std::string* s = param(p, name);
  if (!s) {
    if (fallback) return *fallback;
    throw QueryError(QueryError::Kind::kInvalid, "missing parameter '" + name + "'");
  }
  T v{};
  const auto [ptr, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
  if (ec != std::errc() || ptr != s->data() + s->size() || s->empty()) {
    throw QueryError(QueryError::Kind::kInvalid, "parameter '" + name + "' is not a valid integer");
  }
  return v;
}

int status_of(QueryError::Kind k) {
  switch (k) {
    case QueryError::Kind::kInvalid: return 400;
    case QueryError::Kind::kUnknownDataset: return 404;
    case QueryError::Kind::kUnsupportedPredicate: return 422;
  }
  return 400;
}

}  // namespace

QueryService::QueryService(Catalog catalog, BusyPolicy busy)
    : catalog_(std::move(catalog)), busy_(busy) {}

HttpReply QueryService::datasets() const {
  try {
    return {200, datasets_json(catalog_.list())};
  } catch (const std::exception& e) {
    return {500, error_json(e.what())};
  }
}

void QueryService::reload() {
  std::lock_guard lock(mutex_);
  indexes_.clear();
  datasets_.clear();
  sessions_.clear();
}

std::size_t QueryService::session_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

std::shared_ptr<const HierIndex> QueryService::index_for(const std::string& name, BuilderKind kind) {
  std::lock_guard lock(mutex_);
  const auto key = std::pair{name, kind};
  if (const auto it = indexes_.find(key); it != indexes_.end()) return it->second;

  if (!catalog_.has_dataset(name)) {
    throw QueryError(QueryError::Kind::kUnknownDataset, "unknown dataset '" + name + "'");
  }
  auto& ds = datasets_[name];
  if (!ds) ds = std::make_shared<const Dataset>(catalog_.load_dataset(name));
  if (!catalog_.has_index(name, kind)) {
    throw QueryError(QueryError::Kind::kUnknownDataset,
                     "dataset '" + name + "' has no " + std::string(builder_name(kind)) + " index");
  }
  auto index = std::make_shared<const HierIndex>(catalog_.open_index(ds, kind));
  indexes_.emplace(key, index);
  return index;
}

std::shared_ptr<QueryService::Session> QueryService::session_for(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto& s = sessions_[id];
  if (!s) s = std::make_shared<Session>();
  return s;
}

HttpReply QueryService::query(const QueryParams& params) {
  try {
    const std::string* dataset = param(params, "dataset");
    if (!dataset || dataset->empty()) {
      throw QueryError(QueryError::Kind::kInvalid, "missing parameter 'dataset'");
    }
    BuilderKind kind = BuilderKind::kKdt1d;
    if (const std::string* b = param(params, "builder")) {
      const auto parsed = parse_builder(*b);
      if (!parsed) throw QueryError(QueryError::Kind::kInvalid, "unknown builder '" + *b + "'");
      kind = *parsed;
    }

    RangeQuery q;
    q.dataset = *dataset;
    q.window.begin = parse_int<Timestamp>(params, "begin", std::nullopt);
    q.window.end = parse_int<Timestamp>(params, "end", std::nullopt);
    q.canvas_px = parse_int<std::uint32_t>(params, "canvas_px", kDefaultCanvasPx);
    q.pixel_window = parse_int<std::uint32_t>(params, "pixel_window", 1u);
    const std::string* key = param(params, "attr_key");
    const std::string* value = param(params, "attr_value");
    if ((key == nullptr) != (value == nullptr)) {
      throw QueryError(QueryError::Kind::kInvalid, "attr_key and attr_value go together");
    }
    if (key) q.predicate = Predicate{*key, *value};
    // Cheap checks first so malformed requests never touch the store.
    if (q.window.begin >= q.window.end) {
      throw QueryError(QueryError::Kind::kInvalid, "begin must be less than end");
    }

    const auto index = index_for(q.dataset, kind);
    const auto last_track = static_cast<TrackIndex>(
        index->dataset().tracks.empty() ? 0 : index->dataset().tracks.size() - 1);
    q.tracks.lo = parse_int<TrackIndex>(params, "track_lo", TrackIndex{0});
    q.tracks.hi = parse_int<TrackIndex>(params, "track_hi", last_track);

    const std::string* sid = param(params, "session");
    if (!sid || sid->empty()) {
      NodeCache throwaway;
      return {200, query_response_json(range_query(q, *index, throwaway))};
    }
    const auto session = session_for(*sid);
    std::unique_lock lock(session->mutex, std::defer_lock);
    if (busy_ == BusyPolicy::kReject) {
      if (!lock.try_lock()) return {409, error_json("session '" + *sid + "' is busy")};
    } else {
      lock.lock();
    }
    if (session->index != index.get()) {
      session->cache.clear();
      session->index = index.get();
    }
    return {200, query_response_json(range_query(q, *index, session->cache))};
  } catch (const QueryError& e) {
    return {status_of(e.kind()), error_json(e.what())};
  } catch (const std::exception& e) {
    return {500, error_json(e.what())};
  }
}

QueryServer::QueryServer(QueryService& service)
    : service_(service), http_(std::make_unique<httplib::Server>()) {
  http_->set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  http_->Get("/datasets", [this](const httplib::Request&, httplib::Response& res) {
    const HttpReply r = service_.datasets();
    res.status = r.status;
    res.set_content(r.body, "application/json");
  });
  http_->Get("/query", [this](const httplib::Request& req, httplib::Response& res) {
    QueryParams p(req.params.begin(), req.params.end());
    const HttpReply r = service_.query(p);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  });
  http_->Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
}

QueryServer::~QueryServer() { stop(); }

int QueryServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? http_->bind_to_any_port(host.c_str())
                              : (http_->bind_to_port(host.c_str(), port) ? port : -1);
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void QueryServer::serve() { http_->listen_after_bind(); }

void QueryServer::stop() {
  if (http_ && http_->is_running()) http_->stop();
}

bool QueryServer::running() const { return http_->is_running(); }

}  // namespace eseman
