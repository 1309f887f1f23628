// In-process HTTP server for exercising the remote-adapter surfaces.
#pragma once

#include <httplib.h>

#include <string>
#include <thread>

namespace judgebias::testing {

struct LocalServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;

    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~LocalServer() {
        server.stop();
        if (thread.joinable()) thread.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

}  // namespace judgebias::testing
