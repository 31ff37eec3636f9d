// Copyright 2026 The mecrag Authors.
//
//    Licensed under the Apache License, Version 2.0 (the "License");
//    you may not use this file except in compliance with the License.
//    You may obtain a copy of the License at
//
//        http://www.apache.org/licenses/LICENSE-2.0
//
//    Unless required by applicable law or agreed to in writing, software
//    distributed under the License is distributed on an "AS IS" BASIS,
//    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//    See the License for the specific language governing permissions and
//    limitations under the License.

// Fixtures shared by the unit tests and the acceptance runner.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <thread>

#include <httplib.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "mecrag/performance.hpp"
#include "mecrag/system_model.hpp"

#include "derived_values.hpp"

namespace mecrag::testing {

inline bool close_rel(double actual, double expected, double rel = 1e-9) {
    if (expected == 0.0) return std::abs(actual) <= rel;
    return std::abs(actual - expected) <= rel * std::abs(expected);
}

/// The worked single-user example: D = 1e6 bits, phi = 900, f = 1 GHz,
/// P^max = 2 W, the d = 100 m line-of-sight gain, default system constants.
inline perf::SlotState single_user_state(double gain = k_channel_gain_d100_k50) {
    perf::SlotState s;
    s.users = {model::MobileUser{0, 1e9, 900.0, 2.0, 1000.0}};
    s.task_bits = {1e6};
    s.channel.gains = {gain};
    s.channel.distances = {100.0};
    s.energy_budget_j = {100.0};
    return s;
}

/// A generated scenario trimmed to its first `users` users.
inline model::Scenario reduced_scenario(model::Scenario s, std::size_t users) {
    s.users.resize(users);
    for (auto& row : s.positions) row.resize(users);
    for (auto& row : s.task_bits) row.resize(users);
    for (auto& row : s.fading_draws) row.resize(users);
    return s;
}

/// httplib server on an ephemeral localhost port, served from a background thread.
class LocalServer {
public:
    explicit LocalServer(const std::function<void(httplib::Server&)>& routes) {
        routes(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }
    LocalServer(const LocalServer&) = delete;
    LocalServer& operator=(const LocalServer&) = delete;

    [[nodiscard]] int port() const { return port_; }
    [[nodiscard]] std::string url(const std::string& prefix = "") const {
        return "http://127.0.0.1:" + std::to_string(port_) + prefix;
    }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

/// A localhost port with nothing listening on it.
inline int unused_port() {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    ::close(fd);
    return ntohs(addr.sin_port);
}

}  // namespace mecrag::testing
