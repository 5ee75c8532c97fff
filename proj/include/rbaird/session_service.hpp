#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>

#include "rbaird/orchestrator.hpp"

namespace httplib {
class Server;
}

namespace rbaird {

struct HttpResponse {
    int status = 200;
    std::string body;
};

using QueryParams = std::multimap<std::string, std::string>;

/// Interactive experiments behind a transport-free request handler. With a
/// storage root, every session persists as <root>/<id>/config.json plus an
/// append-only answers.jsonl, and is rebuilt from them on construction.
class SessionService {
public:
    explicit SessionService(std::optional<std::filesystem::path> storage_root = std::nullopt);
    ~SessionService();

    SessionService(const SessionService&) = delete;
    SessionService& operator=(const SessionService&) = delete;

    HttpResponse handle(const std::string& method, const std::string& path, const QueryParams& params,
                        const std::string& body);

    std::size_t session_count() const;
    /// Copy of a session's state; nullopt for unknown ids.
    std::optional<ExperimentState> snapshot(const std::string& id) const;

private:
    struct Session;

    HttpResponse create_session(const std::string& body);
    HttpResponse get_session(Session& s);
    HttpResponse get_round(Session& s);
    HttpResponse post_answer(Session& s, const std::string& body);
    HttpResponse get_belief(Session& s);
    HttpResponse get_metrics(Session& s);
    HttpResponse get_trajectories(Session& s, const QueryParams& params);

    std::shared_ptr<Session> find(const std::string& id) const;
    void load_sessions();
    std::string new_id();

    std::optional<std::filesystem::path> root_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t counter_ = 0;
};

/// cpp-httplib front end for a SessionService, listening on a background thread.
class HttpServer {
public:
    explicit HttpServer(SessionService& service);
    ~HttpServer();

    /// Binds and starts listening; port 0 picks a free port. Returns the bound port.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    /// Blocks until stop() is called from another thread or a signal handler.
    void wait();
    void stop();

private:
    SessionService& service_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
};

std::string iso8601_now();

}  // namespace rbaird
