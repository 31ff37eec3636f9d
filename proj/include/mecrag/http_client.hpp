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

// Minimal JSON-over-HTTP POST with retries, shared by the chat-completion
// backend and the embedding client.

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <mutex>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace mecrag::net {

enum class ErrorKind { Transport, Timeout, HttpStatus, InvalidResponse };

std::string_view to_string(ErrorKind kind);

class BackendError : public std::runtime_error {
public:
    BackendError(ErrorKind kind, std::string message, int status = 0, int attempts = 0);

    [[nodiscard]] ErrorKind kind() const { return kind_; }
    /// HTTP status for HttpStatus errors, 0 otherwise.
    [[nodiscard]] int status() const { return status_; }
    [[nodiscard]] int attempts() const { return attempts_; }

private:
    ErrorKind kind_;
    int status_;
    int attempts_;
};

struct Endpoint {
    std::string base_url;  ///< e.g. http://localhost:8000/v1
    std::string api_key;   ///< sent as a bearer token; never logged
    double timeout_s = 30.0;
    int max_retries = 2;
    std::chrono::milliseconds initial_backoff{200};
};

/// Counting gate bounding the number of requests in flight.
class RequestGate {
public:
    explicit RequestGate(std::size_t limit);

    void acquire();
    void release();
    [[nodiscard]] std::size_t in_flight() const;
    [[nodiscard]] std::size_t peak() const;

private:
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::size_t limit_;
    std::size_t in_flight_ = 0;
    std::size_t peak_ = 0;
};

/// POSTs `body` to base_url + path and returns the parsed JSON reply.
/// Transport failures, timeouts and 5xx/429 replies are retried with
/// exponential backoff; other non-2xx replies fail immediately.
nlohmann::json post_json(const Endpoint& endpoint, const std::string& path, const nlohmann::json& body);

}  // namespace mecrag::net
