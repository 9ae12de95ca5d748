#pragma once

#include "lode/service/store.hpp"

#include <memory>
#include <string>

namespace lode::service {

/// HTTP front end over a SessionStore. Routes are documented in docs/API.md.
class Server {
public:
    explicit Server(SessionStore& store);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds host:port (port 0 picks a free port). Returns the bound port or throws.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    void run();
    void stop();
    bool running() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace lode::service
