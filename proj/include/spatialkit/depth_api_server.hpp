#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "spatialkit/depth_api.hpp"

namespace spatialkit::api {

// Wire format: every message is a 4-byte little-endian length followed
// by that many bytes of UTF-8 JSON. Requests:
//   {"op": "open",  "depth_map": "<id>"}
//   {"op": "step",  "session": <id>, "text": "<model output>"}
//   {"op": "close", "session": <id>}
// Responses always carry "ok" and "kind":
//   {"kind": "opened", "ok": true, "session": <id>}
//   {"kind": "tool_response" | "final", "ok": true, "text": "..."}
//   {"kind": "closed", "ok": true}
//   {"kind": "error", "ok": false, "text": "<reason>"}

struct ServerConfig {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;  // 0 picks an ephemeral port
    std::filesystem::path store_root;
    int max_turns = 4;
};

/// Serves the Depth API over TCP. Sessions are independent and may be
/// used from any connection; steps within a session are serialized. The
/// depth-map store is read-only while serving.
class DepthApiServer {
public:
    explicit DepthApiServer(ServerConfig config);
    ~DepthApiServer();

    DepthApiServer(const DepthApiServer&) = delete;
    DepthApiServer& operator=(const DepthApiServer&) = delete;

    /// Binds and starts the accept loop. Throws IoError on bind failure.
    void start();
    void stop();

    std::uint16_t port() const { return bound_port_; }
    std::size_t open_sessions() const;

    /// Handles one already-parsed request; exposed so tests can exercise
    /// the protocol without a socket. Never throws: protocol and domain
    /// failures come back as error responses.
    nlohmann::json handle_request(const nlohmann::json& request);

private:
    struct Session {
        std::unique_ptr<DialogSession> dialog;
        std::mutex mutex;
    };

    std::shared_ptr<const DepthMap> load_map(const std::string& id);
    void accept_loop();
    void serve_connection(int fd);

    ServerConfig config_;
    std::uint16_t bound_port_ = 0;
    int listen_fd_ = -1;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;

    mutable std::mutex sessions_mutex_;
    std::map<std::uint64_t, std::shared_ptr<Session>> sessions_;
    std::uint64_t next_session_id_ = 1;

    std::mutex maps_mutex_;
    std::map<std::string, std::shared_ptr<const DepthMap>> map_cache_;

    std::mutex clients_mutex_;
    std::vector<int> client_fds_;
    std::vector<std::thread> client_threads_;
};

// Blocking framed-message helpers shared by server and clients.
// read_frame returns false on clean EOF and throws IoError on a broken
// or oversized frame.
bool read_frame(int fd, std::string& payload);
void write_frame(int fd, const std::string& payload);

/// Minimal blocking client for tests and scripted transcripts.
class DepthApiClient {
public:
    DepthApiClient(const std::string& host, std::uint16_t port);
    ~DepthApiClient();

    DepthApiClient(const DepthApiClient&) = delete;
    DepthApiClient& operator=(const DepthApiClient&) = delete;

    /// Sends one request and waits for the response; returns the raw
    /// response bytes (exact wire payload) for golden comparisons.
    std::string request_raw(const nlohmann::json& request);
    nlohmann::json request(const nlohmann::json& req);

private:
    int fd_ = -1;
};

}  // namespace spatialkit::api
