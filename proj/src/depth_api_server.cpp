#include "spatialkit/depth_api_server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <cstring>

#include "spatialkit/depth_codec.hpp"
#include "spatialkit/raster.hpp"

namespace spatialkit::api {

namespace {

constexpr std::uint32_t max_frame_bytes = 16u << 20;

bool valid_map_id(const std::string& id) {
    if (id.empty()) return false;
    for (char c : id) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
                        c == '.';
        if (!ok) return false;
    }
    return id != "." && id != ".." && id.find("..") == std::string::npos;
}

nlohmann::json error_response(const std::string& reason) {
    return {{"kind", "error"}, {"ok", false}, {"text", reason}};
}

ssize_t read_all(int fd, void* buf, std::size_t len) {
    std::size_t done = 0;
    char* p = static_cast<char*>(buf);
    while (done < len) {
        ssize_t n = ::recv(fd, p + done, len - done, 0);
        if (n == 0) return static_cast<ssize_t>(done);
        if (n < 0) {
            if (errno == EINTR) continue;
            return -1;
        }
        done += static_cast<std::size_t>(n);
    }
    return static_cast<ssize_t>(done);
}

}  // namespace

bool read_frame(int fd, std::string& payload) {
    std::uint8_t header[4];
    ssize_t n = read_all(fd, header, 4);
    if (n == 0) return false;  // clean EOF between frames
    if (n != 4) throw IoError("connection broke inside a frame header");
    const std::uint32_t len = static_cast<std::uint32_t>(header[0]) |
                              (static_cast<std::uint32_t>(header[1]) << 8) |
                              (static_cast<std::uint32_t>(header[2]) << 16) |
                              (static_cast<std::uint32_t>(header[3]) << 24);
    if (len > max_frame_bytes) throw IoError("frame exceeds the 16 MiB limit");
    payload.resize(len);
    if (len > 0 && read_all(fd, payload.data(), len) != static_cast<ssize_t>(len))
        throw IoError("connection broke inside a frame payload");
    return true;
}

void write_frame(int fd, const std::string& payload) {
    if (payload.size() > max_frame_bytes) throw IoError("frame exceeds the 16 MiB limit");
    const std::uint32_t len = static_cast<std::uint32_t>(payload.size());
    std::uint8_t header[4] = {static_cast<std::uint8_t>(len & 0xff),
                              static_cast<std::uint8_t>((len >> 8) & 0xff),
                              static_cast<std::uint8_t>((len >> 16) & 0xff),
                              static_cast<std::uint8_t>((len >> 24) & 0xff)};
    std::string framed(reinterpret_cast<char*>(header), 4);
    framed += payload;
    std::size_t done = 0;
    while (done < framed.size()) {
        ssize_t n = ::send(fd, framed.data() + done, framed.size() - done, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw IoError("failed writing frame");
        }
        done += static_cast<std::size_t>(n);
    }
}

DepthApiServer::DepthApiServer(ServerConfig config) : config_(std::move(config)) {
    if (config_.max_turns < 0) throw ValidationError("max_turns must be non-negative");
}

DepthApiServer::~DepthApiServer() { stop(); }

std::shared_ptr<const DepthMap> DepthApiServer::load_map(const std::string& id) {
    if (!valid_map_id(id)) return nullptr;
    {
        std::lock_guard lock(maps_mutex_);
        auto it = map_cache_.find(id);
        if (it != map_cache_.end()) return it->second;
    }
    namespace fs = std::filesystem;
    std::vector<fs::path> candidates;
    if (fs::path(id).has_extension()) candidates.push_back(config_.store_root / id);
    candidates.push_back(config_.store_root / (id + ".sbd"));
    candidates.push_back(config_.store_root / (id + ".png"));
    for (const auto& path : candidates) {
        if (!fs::exists(path)) continue;
        DepthMap map = path.extension() == ".png"
                           ? codec::decode_map(raster::from_raster(raster::read_png(path)))
                           : codec::read_sbd1_file(path);
        auto shared = std::make_shared<const DepthMap>(std::move(map));
        std::lock_guard lock(maps_mutex_);
        map_cache_[id] = shared;
        return shared;
    }
    return nullptr;
}

nlohmann::json DepthApiServer::handle_request(const nlohmann::json& request) {
    try {
        if (!request.is_object() || !request.contains("op") || !request.at("op").is_string())
            return error_response("bad_request");
        const std::string op = request.at("op").get<std::string>();

        if (op == "open") {
            if (!request.contains("depth_map") || !request.at("depth_map").is_string())
                return error_response("bad_request");
            auto map = load_map(request.at("depth_map").get<std::string>());
            if (!map) return error_response("unknown_depth_map");
            auto session = std::make_shared<Session>();
            session->dialog = std::make_unique<DialogSession>(std::move(map), config_.max_turns);
            std::uint64_t id;
            {
                std::lock_guard lock(sessions_mutex_);
                id = next_session_id_++;
                sessions_[id] = std::move(session);
            }
            return {{"kind", "opened"}, {"ok", true}, {"session", id}};
        }

        if (op == "step" || op == "close") {
            if (!request.contains("session") || !request.at("session").is_number_unsigned())
                return error_response("bad_request");
            const std::uint64_t id = request.at("session").get<std::uint64_t>();
            std::shared_ptr<Session> session;
            {
                std::lock_guard lock(sessions_mutex_);
                auto it = sessions_.find(id);
                if (it != sessions_.end()) session = it->second;
            }
            if (!session) return error_response("unknown_session");

            if (op == "close") {
                std::lock_guard lock(sessions_mutex_);
                sessions_.erase(id);
                return {{"kind", "closed"}, {"ok", true}};
            }
            if (!request.contains("text") || !request.at("text").is_string())
                return error_response("bad_request");
            try {
                std::lock_guard lock(session->mutex);
                StepResult result = session->dialog->step(request.at("text").get<std::string>());
                const char* kind =
                    result.kind == StepResult::Kind::tool_response ? "tool_response" : "final";
                return {{"kind", kind}, {"ok", true}, {"text", result.text}};
            } catch (const SessionClosedError&) {
                return error_response("session_closed");
            }
        }

        return error_response("unknown_op");
    } catch (const std::exception& e) {
        return error_response(std::string("internal: ") + e.what());
    }
}

void DepthApiServer::start() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw IoError("cannot create listen socket");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(config_.port);
    if (::inet_pton(AF_INET, config_.host.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw IoError("invalid listen host " + config_.host);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw IoError("cannot bind " + config_.host + ":" + std::to_string(config_.port));
    }
    if (::listen(listen_fd_, 16) != 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw IoError("listen failed");
    }
    sockaddr_in bound{};
    socklen_t bound_len = sizeof(bound);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &bound_len);
    bound_port_ = ntohs(bound.sin_port);

    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void DepthApiServer::stop() {
    if (!running_.exchange(false)) {
        if (listen_fd_ >= 0) {
            ::close(listen_fd_);
            listen_fd_ = -1;
        }
        return;
    }
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
    if (accept_thread_.joinable()) accept_thread_.join();
    {
        std::lock_guard lock(clients_mutex_);
        for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    std::vector<std::thread> threads;
    {
        std::lock_guard lock(clients_mutex_);
        threads.swap(client_threads_);
    }
    for (auto& t : threads)
        if (t.joinable()) t.join();
    std::lock_guard lock(sessions_mutex_);
    sessions_.clear();
}

std::size_t DepthApiServer::open_sessions() const {
    std::lock_guard lock(sessions_mutex_);
    return sessions_.size();
}

void DepthApiServer::accept_loop() {
    while (running_) {
        pollfd pfd{listen_fd_, POLLIN, 0};
        int rc = ::poll(&pfd, 1, 200);
        if (!running_) break;
        if (rc <= 0) continue;
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) continue;
        std::lock_guard lock(clients_mutex_);
        client_fds_.push_back(fd);
        client_threads_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void DepthApiServer::serve_connection(int fd) {
    try {
        std::string payload;
        while (running_ && read_frame(fd, payload)) {
            nlohmann::json request;
            nlohmann::json response;
            try {
                request = nlohmann::json::parse(payload);
                response = handle_request(request);
            } catch (const nlohmann::json::exception&) {
                response = error_response("bad_json");
            }
            write_frame(fd, response.dump());
        }
    } catch (const IoError&) {
        // Client went away mid-frame; nothing to clean up beyond the fd.
    }
    ::close(fd);
}

DepthApiClient::DepthApiClient(const std::string& host, std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw IoError("cannot create client socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd_);
        throw IoError("invalid host " + host);
    }
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd_);
        throw IoError("cannot connect to " + host + ":" + std::to_string(port));
    }
}

DepthApiClient::~DepthApiClient() {
    if (fd_ >= 0) ::close(fd_);
}

std::string DepthApiClient::request_raw(const nlohmann::json& req) {
    write_frame(fd_, req.dump());
    std::string payload;
    if (!read_frame(fd_, payload)) throw IoError("server closed the connection");
    return payload;
}

nlohmann::json DepthApiClient::request(const nlohmann::json& req) {
    return nlohmann::json::parse(request_raw(req));
}

}  // namespace spatialkit::api
